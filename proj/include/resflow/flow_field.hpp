#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "resflow/error.hpp"
#include "resflow/grid.hpp"

namespace resflow {

/// Magnitudes above this are "unknown" in the Middlebury convention.
inline constexpr float kUnknownFlowThreshold = 1e9f;

/// Dense forward displacement field between frame t and frame t+1.
struct FlowField {
  Grid<float> u;
  Grid<float> v;
  int src_index = 0;
  Grid<std::uint8_t> valid;  // 1 unless the pixel is marked unknown

  FlowField() = default;
  FlowField(int width, int height, int index = 0)
      : u(width, height), v(width, height), src_index(index), valid(width, height, 1) {}

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }

  float max_magnitude() const {
    float m = 0.0f;
    for (std::size_t i = 0; i < u.size(); ++i)
      m = std::max(m, std::hypot(u.values()[i], v.values()[i]));
    return m;
  }
};

/// Throws InvalidField unless u/v/validity agree in shape, every value is
/// finite and every valid vector is within max_displacement.
inline void validate_flow(const FlowField& f, float max_displacement) {
  if (!f.u.same_shape(f.v) || f.valid.width() != f.u.width() || f.valid.height() != f.u.height())
    throw Error(Errc::InvalidField, "u, v and validity mask differ in shape");
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    const float a = f.u.values()[i];
    const float b = f.v.values()[i];
    if (!std::isfinite(a) || !std::isfinite(b))
      throw Error(Errc::InvalidField, "non-finite flow at element " + std::to_string(i));
    if (f.valid.values()[i] && std::hypot(a, b) > max_displacement)
      throw Error(Errc::InvalidField, "flow exceeds max_displacement at element " + std::to_string(i));
  }
}

}  // namespace resflow
