#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

struct ClassCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Micro-averaged IoU: counts are summed over frames before dividing.
struct IoUReport {
  std::map<std::uint16_t, ClassCounts> counts;
  std::size_t frames = 0;
  // filled by finalize()
  std::map<std::uint16_t, double> iou;  // classes with union > 0
  std::optional<double> miou;

  void merge(const IoUReport& other) {
    for (const auto& [id, c] : other.counts) {
      counts[id].intersection += c.intersection;
      counts[id].union_ += c.union_;
    }
    frames += other.frames;
  }
};

inline void accumulate(const LabelMap& pred, const LabelMap& gt, IoUReport& acc) {
  require(pred.same_shape(gt), Errc::shape_mismatch, "prediction and ground truth differ in shape");
  std::map<std::uint16_t, ClassCounts> local;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::uint16_t p = pred[i], g = gt[i];
    if (p == g) {
      ++local[p].intersection;
      ++local[p].union_;
    } else {
      ++local[p].union_;
      ++local[g].union_;
    }
  }
  for (const auto& [id, c] : local) {
    acc.counts[id].intersection += c.intersection;
    acc.counts[id].union_ += c.union_;
  }
  ++acc.frames;
}

struct FinalizeOptions {
  /// When false, every class in `classes` with an empty union enters the
  /// mean as 0 instead of being skipped.
  bool exclude_absent = true;
  std::set<std::uint16_t> classes;
};

inline IoUReport finalize(IoUReport acc, const FinalizeOptions& opts = {}) {
  require(acc.frames > 0, Errc::invalid_argument, "no frames accumulated");
  acc.iou.clear();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [id, c] : acc.counts) {
    if (c.union_ == 0) continue;
    const double v = static_cast<double>(c.intersection) / static_cast<double>(c.union_);
    acc.iou[id] = v;
    sum += v;
    ++n;
  }
  if (!opts.exclude_absent)
    for (std::uint16_t id : opts.classes)
      if (!acc.iou.contains(id)) ++n;
  acc.miou = n > 0 ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  return acc;
}

/// Machine-readable lines: iou.<id>=<v> then miou=<v>.
inline std::string format_key_values(const IoUReport& r) {
  std::ostringstream out;
  char buf[64];
  for (const auto& [id, v] : r.iou) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << "iou." << id << '=' << buf << '\n';
  }
  if (r.miou) {
    std::snprintf(buf, sizeof buf, "%.6f", *r.miou);
    out << "miou=" << buf << '\n';
  }
  out << "frames=" << r.frames << '\n';
  return out.str();
}

inline std::string format_table(const IoUReport& r, const std::map<std::uint16_t, std::string>& names = {}) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %-26s %12s %12s %8s\n", "class", "name", "intersection", "union", "IoU(%)");
  out << buf;
  for (const auto& [id, c] : r.counts) {
    auto it = names.find(id);
    const std::string name = it == names.end() ? "-" : it->second;
    auto iou = r.iou.find(id);
    if (iou == r.iou.end()) {
      std::snprintf(buf, sizeof buf, "%-6u %-26s %12llu %12llu %8s\n", unsigned(id), name.c_str(),
                    static_cast<unsigned long long>(c.intersection), static_cast<unsigned long long>(c.union_), "n/a");
    } else {
      std::snprintf(buf, sizeof buf, "%-6u %-26s %12llu %12llu %8.1f\n", unsigned(id), name.c_str(),
                    static_cast<unsigned long long>(c.intersection), static_cast<unsigned long long>(c.union_),
                    100.0 * iou->second);
    }
    out << buf;
  }
  if (r.miou) {
    std::snprintf(buf, sizeof buf, "%-6s %-26s %12s %12s %8.1f\n", "mIoU", "", "", "", 100.0 * *r.miou);
    out << buf;
  }
  out << "frames: " << r.frames << '\n';
  return out.str();
}

}  // namespace depseg
