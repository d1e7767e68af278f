#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "resflow/error.hpp"

namespace resflow {

/// Dense row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw Error(Errc::InvalidConfig, "negative grid dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Replicate-edge access.
  const T& clamped(int x, int y) const noexcept {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Grid& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Grid<float>;

/// 8-bit interleaved RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) noexcept {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const noexcept {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// ITU-R 601 luma on the 0-255 scale.
inline GrayImage to_gray(const RgbImage& img) {
  GrayImage g(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g(x, y) = static_cast<float>(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                                   0.114 * img.at(x, y, 2));
  return g;
}

/// Bilinear sample at continuous pixel coordinates with replicate-edge borders.
template <typename T>
inline double sample_bilinear(const Grid<T>& g, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const double a = g.clamped(x0, y0);
  const double b = g.clamped(x0 + 1, y0);
  const double c = g.clamped(x0, y0 + 1);
  const double d = g.clamped(x0 + 1, y0 + 1);
  return (1.0 - ay) * ((1.0 - ax) * a + ax * b) + ay * ((1.0 - ax) * c + ax * d);
}

/// Bilinear resize with half-pixel centre alignment. Same-size requests are an
/// exact copy.
template <typename T>
inline Grid<T> resize_bilinear(const Grid<T>& src, int out_w, int out_h) {
  if (out_w == src.width() && out_h == src.height()) return src;
  Grid<T> out(out_w, out_h);
  const double sx = static_cast<double>(src.width()) / out_w;
  const double sy = static_cast<double>(src.height()) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double py = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_w; ++x) {
      const double px = (x + 0.5) * sx - 0.5;
      out(x, y) = static_cast<T>(sample_bilinear(src, px, py));
    }
  }
  return out;
}

}  // namespace resflow
