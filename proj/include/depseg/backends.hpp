#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/tensor_io.hpp"

namespace depseg {

/// Source of foundation-model outputs for a frame.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::vector<std::string> frame_ids() const = 0;
  virtual DepthMap depth_of(const std::string& frame_id) const = 0;
  virtual ScoreMap score_map_for(const std::string& frame_id, std::span<const Point> points) const = 0;
  virtual TokenGrid token_grid_of(const std::string& frame_id) const = 0;
  virtual std::optional<RgbImage> rgb_of(const std::string& /*frame_id*/) const { return std::nullopt; }
};

// Point-list canonicalization shared with the exporter: points sorted by
// (x, y), rendered as "x1,y1;x2,y2;...", SHA-256, first 16 hex chars.

inline std::vector<Point> canonical_points(std::span<const Point> points) {
  std::vector<Point> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

inline std::string canonical_point_string(std::span<const Point> points) {
  std::string out;
  for (const Point& p : canonical_points(points)) {
    if (!out.empty()) out += ';';
    out += std::to_string(p.x) + ',' + std::to_string(p.y);
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  require(EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) == 1, Errc::io,
          "SHA-256 failed");
  std::string hex;
  hex.reserve(2 * len);
  constexpr char kHex[] = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

inline std::string point_hash(std::span<const Point> points) {
  return sha256_hex(canonical_point_string(points)).substr(0, 16);
}

struct ManifestEntry {
  std::string frame_id;
  std::filesystem::path depth_path;
  std::filesystem::path tokens_path;
  std::filesystem::path scores_dir;
  std::optional<std::filesystem::path> rgb_path;  // optional fifth column
};

/// Tab-separated frame table; relative paths resolve against the manifest's
/// directory. Blank lines and '#' comments are skipped.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {}

  static Manifest read(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), Errc::io, "cannot open manifest " + path.string());
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      require(cols.size() == 4 || cols.size() == 5, Errc::parse_error,
              path.string() + ":" + std::to_string(lineno) + ": expected 4 or 5 tab-separated columns");
      ManifestEntry e{cols[0], resolve(cols[1]), resolve(cols[2]), resolve(cols[3]), std::nullopt};
      if (cols.size() == 5 && !cols[4].empty()) e.rgb_path = resolve(cols[4]);
      require(!e.frame_id.empty(), Errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": empty frame id");
      require(!m.find(e.frame_id), Errc::parse_error, "duplicate frame id " + e.frame_id);
      m.entries_.push_back(std::move(e));
    }
    return m;
  }

  /// Writes paths relative to the manifest directory when they live below it.
  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), Errc::io, "cannot write manifest " + path.string());
    const auto base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
      auto r = std::filesystem::relative(p, base.empty() ? std::filesystem::path(".") : base);
      return (r.empty() || *r.begin() == "..") ? p.string() : r.generic_string();
    };
    for (const auto& e : entries_) {
      out << e.frame_id << '\t' << rel(e.depth_path) << '\t' << rel(e.tokens_path) << '\t' << rel(e.scores_dir);
      if (e.rgb_path) out << '\t' << rel(*e.rgb_path);
      out << '\n';
    }
  }

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  const ManifestEntry* find(const std::string& frame_id) const {
    for (const auto& e : entries_)
      if (e.frame_id == frame_id) return &e;
    return nullptr;
  }

  const ManifestEntry& at(const std::string& frame_id) const {
    const auto* e = find(frame_id);
    if (!e) throw Error(Errc::missing_frame, "frame '" + frame_id + "' not in manifest");
    return *e;
  }

 private:
  std::vector<ManifestEntry> entries_;
};

inline std::filesystem::path score_map_path(const std::filesystem::path& scores_dir, std::span<const Point> points) {
  return scores_dir / (point_hash(points) + ".tns");
}

/// Reads precomputed model outputs listed in a manifest. Every call is a
/// pure file read, so concurrent use is safe.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(Manifest manifest) : manifest_(std::move(manifest)) {}

  const Manifest& manifest() const noexcept { return manifest_; }

  std::vector<std::string> frame_ids() const override {
    std::vector<std::string> ids;
    for (const auto& e : manifest_.entries()) ids.push_back(e.frame_id);
    return ids;
  }

  DepthMap depth_of(const std::string& frame_id) const override {
    const auto& e = manifest_.at(frame_id);
    require(std::filesystem::exists(e.depth_path), Errc::io, "missing depth file " + e.depth_path.string());
    auto depth = image_from_tensor<float>(read_tensor(e.depth_path));
    if (e.rgb_path && std::filesystem::exists(*e.rgb_path)) {
      const Tensor rgb = read_tensor(*e.rgb_path);
      require(rgb.rank() == 3 && rgb.dim(0) == static_cast<std::size_t>(depth.height()) &&
                  rgb.dim(1) == static_cast<std::size_t>(depth.width()),
              Errc::shape_mismatch, "depth map of frame '" + frame_id + "' does not match its RGB frame");
    }
    return depth;
  }

  ScoreMap score_map_for(const std::string& frame_id, std::span<const Point> points) const override {
    require(!points.empty(), Errc::invalid_argument, "score_map_for needs at least one point");
    const auto& e = manifest_.at(frame_id);
    const auto path = score_map_path(e.scores_dir, points);
    if (!std::filesystem::exists(path)) throw CacheMiss(frame_id, point_hash(points));
    auto scores = image_from_tensor<float>(read_tensor(path));
    for (const Point& p : points)
      require(scores.contains(p), Errc::invalid_argument, "prompt point outside frame " + frame_id);
    return scores;
  }

  TokenGrid token_grid_of(const std::string& frame_id) const override {
    const auto& e = manifest_.at(frame_id);
    require(std::filesystem::exists(e.tokens_path), Errc::io, "missing token file " + e.tokens_path.string());
    return tokens_from_tensor(read_tensor(e.tokens_path));
  }

  std::optional<RgbImage> rgb_of(const std::string& frame_id) const override {
    const auto& e = manifest_.at(frame_id);
    if (!e.rgb_path) return std::nullopt;
    return rgb_from_tensor(read_tensor(*e.rgb_path));
  }

 private:
  Manifest manifest_;
};

}  // namespace depseg
