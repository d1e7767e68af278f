#pragma once

// Second-order motion: R_t = F_{t+1} - F_t, and the encoders that turn frames,
// flows and residuals into fixed-size 3-channel classifier inputs in [0, 1].

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/flow_field.hpp"
#include "resflow/grid.hpp"

namespace resflow {

struct ResidualField {
  Grid<float> du;
  Grid<float> dv;
  int index = 0;

  int width() const noexcept { return du.width(); }
  int height() const noexcept { return du.height(); }
};

/// n flows give n-1 residuals; subtraction is exact in float.
inline std::vector<ResidualField> compute_residuals(std::span<const FlowField> flows) {
  if (flows.size() < 2)
    throw Error(Errc::TooFewFlows, "need at least 2 flow fields, got " + std::to_string(flows.size()));
  const int w = flows[0].width(), h = flows[0].height();
  for (std::size_t t = 0; t < flows.size(); ++t)
    if (flows[t].width() != w || flows[t].height() != h || !flows[t].u.same_shape(flows[t].v))
      throw Error(Errc::DimensionMismatch, "flow " + std::to_string(t) + " differs in shape from flow 0");

  std::vector<ResidualField> out;
  out.reserve(flows.size() - 1);
  for (std::size_t t = 0; t + 1 < flows.size(); ++t) {
    ResidualField r{Grid<float>(w, h), Grid<float>(w, h), static_cast<int>(t)};
    const auto cu = flows[t].u.values(), nu = flows[t + 1].u.values();
    const auto cv = flows[t].v.values(), nv = flows[t + 1].v.values();
    for (std::size_t i = 0; i < cu.size(); ++i) {
      r.du.values()[i] = nu[i] - cu[i];
      r.dv.values()[i] = nv[i] - cv[i];
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Residuals share the .flo container for debug dumps.
inline FlowField residual_as_flow(const ResidualField& r) {
  FlowField f(r.width(), r.height(), r.index);
  f.u = r.du;
  f.v = r.dv;
  return f;
}

inline ResidualField flow_as_residual(const FlowField& f) { return {f.u, f.v, f.src_index}; }

enum class InputKind { RgbFrame, FlowMap, FlowResidual };

inline std::string_view input_kind_name(InputKind k) noexcept {
  switch (k) {
    case InputKind::RgbFrame: return "rgb";
    case InputKind::FlowMap: return "flow";
    case InputKind::FlowResidual: return "residual";
  }
  return "rgb";
}

inline InputKind parse_input_kind(std::string_view s) {
  if (s == "rgb") return InputKind::RgbFrame;
  if (s == "flow") return InputKind::FlowMap;
  if (s == "residual") return InputKind::FlowResidual;
  throw Error(Errc::ParseError, "unknown input kind '" + std::string(s) + "'");
}

/// Symmetric clip: components clip to [-clip, clip] and map linearly to
/// [0, 1]; magnitude clips to [0, clip] and maps to [0, 1].
struct NormalizationSpec {
  double clip = 8.0;

  void validate() const {
    if (!(clip > 0.0)) throw Error(Errc::InvalidConfig, "normalization clip must be positive");
  }

  double component(double x) const { return (std::clamp(x, -clip, clip) + clip) / (2.0 * clip); }
  double magnitude(double m) const { return std::clamp(m, 0.0, clip) / clip; }

  friend bool operator==(const NormalizationSpec&, const NormalizationSpec&) = default;
};

/// 3 x size x size, channel-major, values in [0, 1].
struct EncodedInput {
  InputKind kind = InputKind::RgbFrame;
  int size = 0;
  std::vector<float> data;

  static constexpr int kChannels = 3;

  float at(int c, int x, int y) const noexcept {
    return data[(static_cast<std::size_t>(c) * size + y) * size + x];
  }
  std::span<const float> channel(int c) const noexcept {
    return std::span<const float>(data).subspan(static_cast<std::size_t>(c) * size * size,
                                                static_cast<std::size_t>(size) * size);
  }
};

namespace detail {

inline void check_encode_size(int size) {
  if (size < 8) throw Error(Errc::InvalidConfig, "encoded size must be >= 8, got " + std::to_string(size));
}

inline EncodedInput pack_planes(const Grid<float> (&planes)[3], int size, InputKind kind) {
  EncodedInput e{kind, size, {}};
  e.data.reserve(3ull * size * size);
  for (const auto& p : planes) {
    const auto r = resize_bilinear(p, size, size);
    for (float v : r.values()) e.data.push_back(std::clamp(v, 0.0f, 1.0f));
  }
  return e;
}

inline EncodedInput encode_vector_field(const Grid<float>& a, const Grid<float>& b, int size,
                                        const NormalizationSpec& norm, InputKind kind) {
  check_encode_size(size);
  norm.validate();
  const int w = a.width(), h = a.height();
  Grid<float> planes[3] = {Grid<float>(w, h), Grid<float>(w, h), Grid<float>(w, h)};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values()[i], y = b.values()[i];
    planes[0].values()[i] = static_cast<float>(norm.component(x));
    planes[1].values()[i] = static_cast<float>(norm.component(y));
    planes[2].values()[i] = static_cast<float>(norm.magnitude(std::sqrt(x * x + y * y)));
  }
  return pack_planes(planes, size, kind);
}

}  // namespace detail

inline EncodedInput encode_residual(const ResidualField& r, int size, const NormalizationSpec& norm) {
  return detail::encode_vector_field(r.du, r.dv, size, norm, InputKind::FlowResidual);
}

inline EncodedInput encode_flow(const FlowField& f, int size, const NormalizationSpec& norm) {
  return detail::encode_vector_field(f.u, f.v, size, norm, InputKind::FlowMap);
}

inline EncodedInput encode_frame(const RgbImage& img, int size) {
  detail::check_encode_size(size);
  Grid<float> planes[3] = {Grid<float>(img.width, img.height), Grid<float>(img.width, img.height),
                           Grid<float>(img.width, img.height)};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) planes[c](x, y) = static_cast<float>(img.at(x, y, c) / 255.0);
  return detail::pack_planes(planes, size, InputKind::RgbFrame);
}

}  // namespace resflow
