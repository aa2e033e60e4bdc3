#pragma once

// Template registration: mask-aware pooled token descriptors per class,
// collected into a per-class bank that is persisted between runs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/log.hpp"
#include "depseg/rng.hpp"
#include "depseg/tensor_io.hpp"

namespace depseg {

using Descriptor = std::vector<float>;

inline constexpr double kUnitNormTolerance = 1e-5;

inline double l2_norm(std::span<const float> v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  return std::sqrt(n);
}

struct TemplateBank {
  int dim = 0;
  std::map<std::uint16_t, std::vector<Descriptor>> classes;
  std::vector<std::string> frames;

  std::size_t template_count() const {
    std::size_t n = 0;
    for (const auto& [id, list] : classes) n += list.size();
    return n;
  }

  void add(std::uint16_t class_id, Descriptor d) {
    if (dim == 0) dim = static_cast<int>(d.size());
    require(static_cast<int>(d.size()) == dim, Errc::dimension_mismatch,
            "descriptor dim " + std::to_string(d.size()) + " != bank dim " + std::to_string(dim));
    classes[class_id].push_back(std::move(d));
  }

  friend bool operator==(const TemplateBank&, const TemplateBank&) = default;
};

namespace detail {

struct CellBox {
  int x0, x1, y0, y1;
};

// Integer box mapping of token cell (row, col) onto source pixels.
inline CellBox cell_box(int row, int col, int rows, int cols, int width, int height) {
  return {static_cast<int>(static_cast<long long>(col) * width / cols),
          static_cast<int>(static_cast<long long>(col + 1) * width / cols),
          static_cast<int>(static_cast<long long>(row) * height / rows),
          static_cast<int>(static_cast<long long>(row + 1) * height / rows)};
}

inline Image<std::int64_t> cell_coverage(const BinaryMask& mask, int rows, int cols) {
  require(rows >= 1 && cols >= 1, Errc::invalid_argument, "token grid must be at least 1x1");
  require(rows <= mask.height() && cols <= mask.width(), Errc::dimension_mismatch,
          "token grid finer than the pixel grid");
  Image<std::int64_t> cover(cols, rows, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto b = cell_box(r, c, rows, cols, mask.width(), mask.height());
      std::int64_t n = 0;
      for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x) n += mask.test(x, y) ? 1 : 0;
      cover(c, r) = n;
    }
  return cover;
}

}  // namespace detail

/// Token cell is set iff at least half of its source pixels are covered.
inline BinaryMask downsample_mask(const BinaryMask& mask, int rows, int cols) {
  const auto cover = detail::cell_coverage(mask, rows, cols);
  BinaryMask out(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto b = detail::cell_box(r, c, rows, cols, mask.width(), mask.height());
      const std::int64_t cell = static_cast<std::int64_t>(b.x1 - b.x0) * (b.y1 - b.y0);
      out.set(c, r, 2 * cover(c, r) >= cell);
    }
  return out;
}

/// Majority rule, plus rescue: if nothing survives but the source mask is
/// nonempty, the single best-covered cell (first in row-major on ties) is set.
inline BinaryMask downsample_mask_rescued(const BinaryMask& mask, int rows, int cols) {
  BinaryMask out = downsample_mask(mask, rows, cols);
  if (out.area() > 0) return out;
  const auto cover = detail::cell_coverage(mask, rows, cols);
  const auto best = std::max_element(cover.pixels().begin(), cover.pixels().end());
  if (*best > 0) out[static_cast<std::size_t>(best - cover.pixels().begin())] = 1;
  return out;
}

/// Mean token over the set cells, L2-normalized.
inline Descriptor pooled_descriptor(const TokenGrid& tokens, const BinaryMask& cells) {
  require(cells.width() == tokens.cols() && cells.height() == tokens.rows(), Errc::dimension_mismatch,
          "token mask does not match token grid");
  std::vector<double> sum(static_cast<std::size_t>(tokens.dim()), 0.0);
  std::size_t support = 0;
  for (int r = 0; r < tokens.rows(); ++r)
    for (int c = 0; c < tokens.cols(); ++c) {
      if (!cells.test(c, r)) continue;
      ++support;
      const auto t = tokens.at(r, c);
      for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += t[d];
    }
  require(support > 0, Errc::empty_support, "descriptor pooled over an empty mask");
  double norm = 0.0;
  for (auto& s : sum) {
    s /= static_cast<double>(support);
    norm += s * s;
  }
  norm = std::sqrt(norm);
  require(norm > 0.0, Errc::degenerate_input, "pooled descriptor has zero norm");
  Descriptor out(sum.size());
  for (std::size_t d = 0; d < sum.size(); ++d) out[d] = static_cast<float>(sum[d] / norm);
  return out;
}

/// Descriptor of a pixel-space mask: rescued downsampling, then pooling.
inline Descriptor mask_descriptor(const TokenGrid& tokens, const BinaryMask& mask) {
  return pooled_descriptor(tokens, downsample_mask_rescued(mask, tokens.rows(), tokens.cols()));
}

/// One descriptor per class present in the ground truth (restricted to
/// `classes` when nonempty), ascending class id.
inline std::vector<std::pair<std::uint16_t, Descriptor>> register_frame(const TokenGrid& tokens, const LabelMap& gt,
                                                                        const std::set<std::uint16_t>& classes = {}) {
  require(gt.height() >= tokens.rows() && gt.width() >= tokens.cols(), Errc::dimension_mismatch,
          "ground truth is coarser than the token grid");
  std::set<std::uint16_t> present(gt.pixels().begin(), gt.pixels().end());
  std::vector<std::pair<std::uint16_t, Descriptor>> out;
  for (std::uint16_t c : present) {
    if (!classes.empty() && !classes.contains(c)) continue;
    const BinaryMask cells = downsample_mask_rescued(mask_of(gt, c), tokens.rows(), tokens.cols());
    if (cells.area() == 0) {
      log().debug("class {} has no token support, skipped", c);
      continue;
    }
    out.emplace_back(c, pooled_descriptor(tokens, cells));
  }
  return out;
}

/// Keeps max(1, round(fraction * L_c)) templates per nonempty class, drawn
/// uniformly without replacement; survivors keep their original order.
inline TemplateBank subsample_bank(const TemplateBank& bank, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, Errc::invalid_argument, "fraction must lie in (0, 1]");
  require(bank.template_count() > 0, Errc::empty_bank, "cannot subsample an empty bank");
  if (fraction == 1.0) return bank;
  TemplateBank out;
  out.dim = bank.dim;
  out.frames = bank.frames;
  Rng rng(seed);
  for (const auto& [id, list] : bank.classes) {
    auto& kept = out.classes[id];
    if (list.empty()) continue;
    const std::size_t n = list.size();
    const std::size_t keep = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < keep; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    for (std::size_t i = 0; i < keep; ++i) kept.push_back(list[idx[i]]);
  }
  return out;
}

// Bank file:
//   "DEPSEGBANK1\n" "dim=<D> classes=<K>\n"
//   K x ( "class=<id> count=<L>\n" + L*D little-endian f32 )
//   optional trailing "frame=<id>\n" lines

inline std::vector<std::uint8_t> encode_bank(const TemplateBank& bank) {
  std::vector<std::uint8_t> out;
  auto put = [&](const std::string& s) { out.insert(out.end(), s.begin(), s.end()); };
  put("DEPSEGBANK1\n");
  put("dim=" + std::to_string(bank.dim) + " classes=" + std::to_string(bank.classes.size()) + "\n");
  for (const auto& [id, list] : bank.classes) {
    put("class=" + std::to_string(id) + " count=" + std::to_string(list.size()) + "\n");
    for (const auto& d : list) {
      require(static_cast<int>(d.size()) == bank.dim, Errc::dimension_mismatch, "descriptor dim differs from bank dim");
      for (float v : d) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
      }
    }
  }
  for (const auto& f : bank.frames) {
    require(f.find('\n') == std::string::npos, Errc::invalid_argument, "frame id contains a newline");
    put("frame=" + f + "\n");
  }
  return out;
}

inline TemplateBank decode_bank(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    const auto end = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), std::uint8_t{'\n'});
    require(end != bytes.end(), Errc::parse_error, "bank line missing newline terminator");
    std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), end);
    pos = static_cast<std::size_t>(end - bytes.begin()) + 1;
    return line;
  };
  auto parse_uint = [](const std::string& s, const std::string& what) {
    require(!s.empty() && s.size() <= 9 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }),
            Errc::parse_error, "bad " + what + " '" + s + "'");
    return std::stoul(s);
  };
  auto field = [&](const std::string& line, const std::string& key1, const std::string& key2) {
    // "<key1>=<a> <key2>=<b>"
    const auto space = line.find(' ');
    require(line.rfind(key1 + "=", 0) == 0 && space != std::string::npos &&
                line.compare(space + 1, key2.size() + 1, key2 + "=") == 0,
            Errc::parse_error, "malformed bank line '" + line + "'");
    return std::pair{parse_uint(line.substr(key1.size() + 1, space - key1.size() - 1), key1),
                     parse_uint(line.substr(space + key2.size() + 2), key2)};
  };

  const auto magic = next_line();
  require(magic && *magic == "DEPSEGBANK1", Errc::bad_magic, "not a DEPSEGBANK1 file");
  const auto header = next_line();
  require(header.has_value(), Errc::truncated, "bank header missing");
  const auto [dim, class_count] = field(*header, "dim", "classes");
  require(dim > 0 || class_count == 0, Errc::parse_error, "bank dim must be positive");

  TemplateBank bank;
  bank.dim = static_cast<int>(dim);
  for (std::size_t k = 0; k < class_count; ++k) {
    const auto line = next_line();
    require(line.has_value(), Errc::truncated, "bank ends before class " + std::to_string(k));
    const auto [id, count] = field(*line, "class", "count");
    require(id <= 0xffff, Errc::parse_error, "class id out of range");
    require(!bank.classes.contains(static_cast<std::uint16_t>(id)), Errc::parse_error, "duplicate class id");
    auto& list = bank.classes[static_cast<std::uint16_t>(id)];
    const std::size_t need = count * dim * 4;
    require(bytes.size() - pos >= need, Errc::truncated, "bank payload truncated in class " + std::to_string(id));
    for (std::size_t l = 0; l < count; ++l) {
      Descriptor d(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[pos + 4 * i + b]) << (8 * b);
        d[i] = std::bit_cast<float>(bits);
      }
      pos += 4 * dim;
      require(std::abs(l2_norm(d) - 1.0) <= kUnitNormTolerance, Errc::corrupt,
              "template " + std::to_string(l) + " of class " + std::to_string(id) + " is not unit norm");
      list.push_back(std::move(d));
    }
  }
  while (auto line = next_line()) {
    require(line->rfind("frame=", 0) == 0, Errc::parse_error, "unexpected trailing bank line '" + *line + "'");
    bank.frames.push_back(line->substr(6));
  }
  return bank;
}

inline void save_bank(const TemplateBank& bank, const std::filesystem::path& path) {
  write_bytes(path, encode_bank(bank));
}

inline TemplateBank load_bank(const std::filesystem::path& path) {
  try {
    return decode_bank(read_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

}  // namespace depseg
