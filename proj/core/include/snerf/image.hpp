#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "snerf/errors.hpp"

namespace snerf {

/// Dense row-major H x W grid.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw InvalidArgument("negative grid size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <class U>
  bool same_shape(const Grid<U>& o) const { return o.width() == width_ && o.height() == height_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

/// Linear RGB in [0, 1].
struct Rgb {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;

  Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
  Rgb operator-(const Rgb& o) const { return {r - o.r, g - o.g, b - o.b}; }
  Rgb operator*(float s) const { return {r * s, g * s, b * s}; }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Grid<Rgb>;

inline float luma(const Rgb& c) { return 0.299f * c.r + 0.587f * c.g + 0.114f * c.b; }

/// Mean absolute channel difference.
inline float mean_abs_diff(const Rgb& a, const Rgb& b) {
  return (std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b)) / 3.f;
}

/// Scalar per-pixel values with a validity mask. Invalid pixels carry no
/// meaning and are ignored by every consumer.
struct ScalarMap {
  Grid<float> values;
  Mask valid;

  ScalarMap() = default;
  ScalarMap(int width, int height) : values(width, height, 0.f), valid(width, height, 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool is_valid(int x, int y) const { return valid.in_bounds(x, y) && valid(x, y) != 0; }
  void set(int x, int y, float v) {
    values(x, y) = v;
    valid(x, y) = 1;
  }
  void invalidate(int x, int y) {
    values(x, y) = 0.f;
    valid(x, y) = 0;
  }
  size_t valid_count() const {
    size_t n = 0;
    for (auto m : valid.data()) n += m != 0;
    return n;
  }
  friend bool operator==(const ScalarMap&, const ScalarMap&) = default;
};

/// Metric camera-frame depth (z) per pixel; valid values are > 0 and finite.
struct DepthMap : ScalarMap {
  using ScalarMap::ScalarMap;
};

/// Per-pixel confidence in [0, 1].
struct ConfidenceMap : ScalarMap {
  using ScalarMap::ScalarMap;
};

/// Pixel displacement from a source view into a target view.
struct FlowField {
  Grid<float> du;
  Grid<float> dv;
  Mask valid;

  FlowField() = default;
  FlowField(int width, int height) : du(width, height, 0.f), dv(width, height, 0.f), valid(width, height, 0) {}

  int width() const { return du.width(); }
  int height() const { return du.height(); }
  bool is_valid(int x, int y) const { return valid.in_bounds(x, y) && valid(x, y) != 0; }
  void set(int x, int y, float u, float v) {
    du(x, y) = u;
    dv(x, y) = v;
    valid(x, y) = 1;
  }
  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Bilinear lookup with edge clamping; (u, v) in continuous pixel coordinates.
template <class T>
T sample_bilinear(const Grid<T>& img, double u, double v) {
  const int w = img.width();
  const int h = img.height();
  u = std::clamp(u, 0.0, static_cast<double>(w - 1));
  v = std::clamp(v, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const float ax = static_cast<float>(u - x0);
  const float ay = static_cast<float>(v - y0);
  const T top = img(x0, y0) * (1.f - ax) + img(x1, y0) * ax;
  const T bottom = img(x0, y1) * (1.f - ax) + img(x1, y1) * ax;
  return top * (1.f - ay) + bottom * ay;
}

/// Nearest pixel index for a continuous coordinate.
inline int nearest_pixel(double c) { return static_cast<int>(std::lround(c)); }

}  // namespace snerf
