#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depseg/error.hpp"

namespace depseg {

/// Pixel coordinate: x is the column, y the row.
struct Point {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Point&, const Point&) = default;
};

/// Dense row-major H×W raster.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
    require(width >= 0 && height >= 0, Errc::invalid_argument, "negative image extent");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool contains(Point p) const noexcept { return contains(p.x, p.y); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator()(Point p) noexcept { return (*this)(p.x, p.y); }
  const T& operator()(Point p) const noexcept { return (*this)(p.x, p.y); }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Boolean raster stored one byte per pixel (0 or 1).
class BinaryMask : public Image<std::uint8_t> {
 public:
  using Image<std::uint8_t>::Image;

  bool test(int x, int y) const noexcept { return (*this)(x, y) != 0; }
  bool test(Point p) const noexcept { return test(p.x, p.y); }
  void set(int x, int y, bool v = true) noexcept { (*this)(x, y) = v ? 1 : 0; }

  std::size_t area() const noexcept {
    return static_cast<std::size_t>(std::count_if(pixels().begin(), pixels().end(), [](std::uint8_t v) { return v != 0; }));
  }
};

/// Integer region labels, 0 = unassigned / watershed line.
using RegionLabels = Image<std::int32_t>;
/// Semantic label map over {0} ∪ classes, 0 = background.
using LabelMap = Image<std::uint16_t>;
using DepthMap = Image<float>;
using ScoreMap = Image<float>;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Image<Rgb>;

inline std::int32_t max_label(const RegionLabels& labels) {
  std::int32_t m = 0;
  for (auto v : labels.pixels()) m = std::max(m, v);
  return m;
}

/// Mask of pixels carrying `label`.
template <typename T>
BinaryMask mask_of(const Image<T>& labels, T label) {
  BinaryMask out(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == label ? 1 : 0;
  return out;
}

/// H′×W′ grid of D-dimensional feature vectors, row-major, channel-last.
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(int rows, int cols, int dim) : rows_(rows), cols_(cols), dim_(dim) {
    require(rows > 0 && cols > 0 && dim > 0, Errc::invalid_argument, "token grid extents must be positive");
    values_.assign(static_cast<std::size_t>(rows) * cols * dim, 0.0f);
  }
  TokenGrid(int rows, int cols, int dim, std::vector<float> values)
      : rows_(rows), cols_(cols), dim_(dim), values_(std::move(values)) {
    require(rows > 0 && cols > 0 && dim > 0, Errc::invalid_argument, "token grid extents must be positive");
    require(values_.size() == static_cast<std::size_t>(rows) * cols * dim, Errc::shape_mismatch,
            "token grid payload size does not match rows*cols*dim");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int dim() const noexcept { return dim_; }

  std::span<float> at(int row, int col) noexcept {
    return {values_.data() + (static_cast<std::size_t>(row) * cols_ + col) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const float> at(int row, int col) const noexcept {
    return {values_.data() + (static_cast<std::size_t>(row) * cols_ + col) * dim_, static_cast<std::size_t>(dim_)};
  }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int dim_ = 0;
  std::vector<float> values_;
};

}  // namespace depseg
