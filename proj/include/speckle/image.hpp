#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "speckle/error.hpp"

namespace speckle {

/// Single-channel image of 64-bit reals. Row-major, (row, col) indexing with
/// the origin at the top-left pixel.
class ImageGrid {
 public:
  ImageGrid(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height) {
    check_extent(width, height);
    data_.assign(width * height, fill);
  }

  ImageGrid(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_extent(width, height);
    if (data_.size() != width * height) {
      throw DimensionError("ImageGrid: data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
  }

  /// Build from nested rows, e.g. {{0, 1}, {0, 1}}. All rows must have equal length.
  static ImageGrid from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t h = rows.size();
    const std::size_t w = h == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(w * h);
    for (const auto& row : rows) {
      if (row.size() != w) throw DimensionError("ImageGrid::from_rows: ragged rows");
      data.insert(data.end(), row.begin(), row.end());
    }
    return ImageGrid(w, h, std::move(data));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t row, std::size_t col) noexcept {
    return data_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * width_ + col];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return values().subspan(r * width_, width_); }
  std::span<const double> row(std::size_t r) const noexcept {
    return values().subspan(r * width_, width_);
  }

  bool same_shape(const ImageGrid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  static void check_extent(std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) {
      throw InvalidArgument("ImageGrid: width and height must be positive");
    }
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<double> data_;
};

/// Horizontal and vertical components of a vector field on the pixel grid.
struct DualField {
  ImageGrid horizontal;
  ImageGrid vertical;

  explicit DualField(std::size_t width, std::size_t height)
      : horizontal(width, height), vertical(width, height) {}
  DualField(ImageGrid h, ImageGrid v) : horizontal(std::move(h)), vertical(std::move(v)) {
    if (!horizontal.same_shape(vertical)) {
      throw DimensionError("DualField: components differ in shape");
    }
  }

  std::size_t width() const noexcept { return horizontal.width(); }
  std::size_t height() const noexcept { return horizontal.height(); }

  friend bool operator==(const DualField&, const DualField&) = default;
};

inline void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(where) + ": shape mismatch (" +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                         " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + ")");
  }
}

/// Forward differences with a zero at the last column (horizontal) and the
/// last row (vertical).
inline DualField forward_diff(const ImageGrid& z) {
  const std::size_t w = z.width();
  const std::size_t h = z.height();
  DualField g(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      g.horizontal(r, c) = c + 1 < w ? z(r, c + 1) - z(r, c) : 0.0;
      g.vertical(r, c) = r + 1 < h ? z(r + 1, c) - z(r, c) : 0.0;
    }
  }
  return g;
}

/// Discrete divergence, defined as the negative adjoint of forward_diff:
/// <forward_diff(z), p> = -<z, divergence(p)>.
inline ImageGrid divergence(const DualField& p) {
  require_same_shape(p.horizontal, p.vertical, "divergence");
  const std::size_t w = p.width();
  const std::size_t h = p.height();
  ImageGrid d(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double v = 0.0;
      if (c + 1 < w) v += p.horizontal(r, c);
      if (c > 0) v -= p.horizontal(r, c - 1);
      if (r + 1 < h) v += p.vertical(r, c);
      if (r > 0) v -= p.vertical(r - 1, c);
      d(r, c) = v;
    }
  }
  return d;
}

inline double inner(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inner(const DualField& a, const DualField& b) {
  return inner(a.horizontal, b.horizontal) + inner(a.vertical, b.vertical);
}

inline double squared_norm(const ImageGrid& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

inline double l2_norm(const ImageGrid& a) { return std::sqrt(squared_norm(a)); }

/// Squared L2 distance ||a - b||^2.
inline double squared_distance(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double mean(const ImageGrid& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s / static_cast<double>(a.size());
}

/// ||estimate - truth||_2 / ||truth||_2.
inline double relative_error(const ImageGrid& estimate, const ImageGrid& truth) {
  require_same_shape(estimate, truth, "relative_error");
  const double denom = l2_norm(truth);
  if (!(denom > 0.0)) throw InvalidArgument("relative_error: truth has zero norm");
  return std::sqrt(squared_distance(estimate, truth)) / denom;
}

// Elementwise arithmetic; shapes must match.

inline ImageGrid operator+(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator+");
  ImageGrid out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline ImageGrid operator-(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "operator-");
  ImageGrid out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline ImageGrid operator*(double s, const ImageGrid& a) {
  ImageGrid out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

/// Copy of the rectangle [row0, row0+height) x [col0, col0+width).
inline ImageGrid crop(const ImageGrid& img, std::size_t row0, std::size_t col0,
                      std::size_t width, std::size_t height) {
  if (row0 + height > img.height() || col0 + width > img.width()) {
    throw DimensionError("crop: window exceeds image bounds");
  }
  ImageGrid out(width, height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = img(row0 + r, col0 + c);
  }
  return out;
}

}  // namespace speckle
