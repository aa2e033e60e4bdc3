#pragma once

// Minimal dense-array container shared with the model exporter.
//
// Layout (all integers little-endian):
//   magic "DEPSEG01" (8) | dtype (1: 0=f32, 1=u8, 2=u16) | rank (1) |
//   shape (rank x u32) | payload (row-major values)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

enum class DType : std::uint8_t { f32 = 0, u8 = 1, u16 = 2 };

constexpr std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::u8: return 1;
    case DType::u16: return 2;
  }
  return 0;
}

inline constexpr std::array<char, 8> kTensorMagic = {'D', 'E', 'P', 'S', 'E', 'G', '0', '1'};
inline constexpr std::size_t kMaxTensorRank = 4;

class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::uint8_t>, std::vector<std::uint16_t>>;

  Tensor() = default;

  template <typename T>
  Tensor(std::vector<std::size_t> shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    require(element_count(shape_) == std::get<std::vector<T>>(data_).size(), Errc::shape_mismatch,
            "tensor value count does not match shape");
  }

  DType dtype() const noexcept { return static_cast<DType>(data_.index()); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return element_count(shape_); }

  template <typename T>
  bool holds() const noexcept {
    return std::holds_alternative<std::vector<T>>(data_);
  }

  template <typename T>
  std::span<const T> values() const {
    require(holds<T>(), Errc::dimension_mismatch, "tensor dtype does not match requested element type");
    return std::get<std::vector<T>>(data_);
  }

  template <typename T>
  std::vector<T>&& take() && {
    require(holds<T>(), Errc::dimension_mismatch, "tensor dtype does not match requested element type");
    return std::move(std::get<std::vector<T>>(data_));
  }

  const Storage& storage() const noexcept { return data_; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    if (a.shape_ != b.shape_ || a.data_.index() != b.data_.index()) return false;
    // bitwise: NaN payloads and signed zeros must round-trip too
    return std::visit(
        [&](const auto& va) {
          const auto& vb = std::get<std::decay_t<decltype(va)>>(b.data_);
          return va.size() == vb.size() &&
                 (va.empty() || std::memcmp(va.data(), vb.data(), va.size() * sizeof(va[0])) == 0);
        },
        a.data_);
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return 0;
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

 private:
  std::vector<std::size_t> shape_;
  Storage data_;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Serializes to the exact on-disk byte layout.
inline std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  require(t.rank() >= 1, Errc::invalid_argument, "tensor shape must be nonempty");
  require(t.rank() <= kMaxTensorRank, Errc::dimension_overflow, "tensor rank exceeds 4");
  std::uint64_t count = 1;
  for (auto d : t.shape()) {
    require(d > 0, Errc::invalid_argument, "tensor dimensions must be positive");
    require(d <= std::numeric_limits<std::uint32_t>::max(), Errc::dimension_overflow, "dimension exceeds u32");
    require(count <= std::numeric_limits<std::uint64_t>::max() / d, Errc::dimension_overflow, "element count overflows");
    count *= d;
  }
  const std::size_t esize = dtype_size(t.dtype());
  require(count <= (std::numeric_limits<std::size_t>::max() - 64) / esize, Errc::dimension_overflow,
          "payload size overflows");

  std::vector<std::uint8_t> out;
  out.reserve(10 + 4 * t.rank() + count * esize);
  for (char c : kTensorMagic) out.push_back(static_cast<std::uint8_t>(c));
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));

  std::visit(
      [&](const auto& values) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        for (T v : values) {
          std::uint32_t bits = 0;
          if constexpr (std::is_same_v<T, float>) {
            bits = std::bit_cast<std::uint32_t>(v);
          } else {
            bits = v;
          }
          for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
      },
      t.storage());
  return out;
}

inline Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kTensorMagic.size(), Errc::truncated, "file shorter than magic");
  require(std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin(),
                     [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }),
          Errc::bad_magic, "missing DEPSEG01 magic");
  require(bytes.size() >= 10, Errc::truncated, "header truncated");
  const std::uint8_t dtype_tag = bytes[8];
  require(dtype_tag <= 2, Errc::unknown_dtype, "dtype tag " + std::to_string(dtype_tag));
  const auto dtype = static_cast<DType>(dtype_tag);
  const std::size_t rank = bytes[9];
  require(rank >= 1 && rank <= kMaxTensorRank, Errc::corrupt, "rank " + std::to_string(rank) + " outside [1,4]");
  require(bytes.size() >= 10 + 4 * rank, Errc::truncated, "shape truncated");

  std::vector<std::size_t> shape(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = detail::get_u32(bytes.data() + 10 + 4 * i);
    require(shape[i] > 0, Errc::corrupt, "zero dimension");
    require(count <= (std::uint64_t{1} << 48) / shape[i], Errc::dimension_overflow, "element count too large");
    count *= shape[i];
  }
  const std::size_t header = 10 + 4 * rank;
  const std::size_t payload = static_cast<std::size_t>(count) * dtype_size(dtype);
  require(bytes.size() >= header + payload, Errc::truncated,
          "payload has " + std::to_string(bytes.size() - header) + " of " + std::to_string(payload) + " bytes");
  require(bytes.size() == header + payload, Errc::corrupt, "trailing bytes after payload");

  const std::uint8_t* p = bytes.data() + header;
  auto read_values = [&]<typename T>() {
    std::vector<T> values(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<std::uint32_t>(p[i * sizeof(T) + b]) << (8 * b);
      if constexpr (std::is_same_v<T, float>) {
        values[i] = std::bit_cast<float>(bits);
      } else {
        values[i] = static_cast<T>(bits);
      }
    }
    return Tensor(std::move(shape), std::move(values));
  };
  switch (dtype) {
    case DType::f32: return read_values.template operator()<float>();
    case DType::u8: return read_values.template operator()<std::uint8_t>();
    case DType::u16: return read_values.template operator()<std::uint16_t>();
  }
  throw Error(Errc::unknown_dtype, "unreachable");
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io, "write failed for " + path.string());
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), Errc::io, "read failed for " + path.string());
  return bytes;
}

inline void write_tensor(const Tensor& t, const std::filesystem::path& path) { write_bytes(path, encode_tensor(t)); }

inline Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

// Typed views between tensors and the raster types.

template <typename T>
Tensor to_tensor(const Image<T>& img) {
  return Tensor({static_cast<std::size_t>(img.height()), static_cast<std::size_t>(img.width())},
                std::vector<T>(img.pixels().begin(), img.pixels().end()));
}

inline Tensor to_tensor(const RgbImage& img) {
  std::vector<std::uint8_t> values;
  values.reserve(img.size() * 3);
  for (const Rgb& p : img.pixels()) {
    values.push_back(p.r);
    values.push_back(p.g);
    values.push_back(p.b);
  }
  return Tensor({static_cast<std::size_t>(img.height()), static_cast<std::size_t>(img.width()), 3}, std::move(values));
}

inline Tensor to_tensor(const TokenGrid& grid) {
  return Tensor({static_cast<std::size_t>(grid.rows()), static_cast<std::size_t>(grid.cols()),
                 static_cast<std::size_t>(grid.dim())},
                std::vector<float>(grid.values().begin(), grid.values().end()));
}

template <typename T>
Image<T> image_from_tensor(const Tensor& t) {
  require(t.rank() == 2, Errc::shape_mismatch, "expected a rank-2 tensor, got rank " + std::to_string(t.rank()));
  auto values = t.values<T>();
  Image<T> img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  std::copy(values.begin(), values.end(), img.pixels().begin());
  return img;
}

inline RgbImage rgb_from_tensor(const Tensor& t) {
  require(t.rank() == 3 && t.dim(2) == 3, Errc::shape_mismatch, "expected an H x W x 3 tensor");
  auto values = t.values<std::uint8_t>();
  RgbImage img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = Rgb{values[3 * i], values[3 * i + 1], values[3 * i + 2]};
  return img;
}

inline TokenGrid tokens_from_tensor(const Tensor& t) {
  require(t.rank() == 3, Errc::shape_mismatch, "expected an H' x W' x D tensor");
  auto values = t.values<float>();
  return TokenGrid(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)),
                   std::vector<float>(values.begin(), values.end()));
}

}  // namespace depseg
