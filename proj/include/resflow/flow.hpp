#pragma once

// Coarse-to-fine Horn-Schunck dense flow.
//
// At each pyramid level frame_b is warped once by the upsampled coarse flow,
// the brightness constancy term is linearised around that warp, and the
// resulting quadratic energy
//
//   E(u, v) = sum_p (Ix (u - u0) + Iy (v - v0) + It)^2
//           + smoothness_weight * 1/4 * sum_edges (du^2 + dv^2)
//
// is minimised by per-pixel 2x2 block Jacobi sweeps (the classic HS update).
// With replicate-edge neighbour means the sweep is monotone in E.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/flow_field.hpp"
#include "resflow/frames.hpp"
#include "resflow/grid.hpp"

namespace resflow {

struct FlowEstimatorConfig {
  double smoothness_weight = 100.0;  // alpha^2 on the 0-255 intensity scale
  int iterations = 200;
  double convergence_eps = 1e-3;
  int pyramid_levels = 3;
  float max_displacement = 64.0f;

  void validate() const {
    if (!(smoothness_weight > 0.0)) throw Error(Errc::InvalidConfig, "smoothness_weight must be positive");
    if (iterations < 1) throw Error(Errc::InvalidConfig, "iterations must be positive");
    if (!(convergence_eps > 0.0)) throw Error(Errc::InvalidConfig, "convergence_eps must be positive");
    if (pyramid_levels < 1) throw Error(Errc::InvalidConfig, "pyramid_levels must be >= 1");
    if (!(max_displacement > 0.0f)) throw Error(Errc::InvalidConfig, "max_displacement must be positive");
  }

  friend bool operator==(const FlowEstimatorConfig&, const FlowEstimatorConfig&) = default;
};

struct FlowDiagnostics {
  bool converged = false;  // finest level stopped on convergence_eps
  int levels_used = 0;
  int finest_iterations = 0;
  /// Energy before the first sweep and after every sweep at the finest level.
  std::vector<double> finest_energy;
};

inline constexpr int kMinFlowDimension = 8;

namespace detail {

using Plane = Grid<double>;

inline Plane to_plane(const GrayImage& g) {
  Plane p(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) p.values()[i] = g.values()[i];
  return p;
}

inline Plane downsample2(const Plane& p) {
  return resize_bilinear(p, (p.width() + 1) / 2, (p.height() + 1) / 2);
}

inline Plane upsample_flow(const Plane& coarse, int w, int h) {
  Plane up = resize_bilinear(coarse, w, h);
  const double scale = static_cast<double>(w) / coarse.width();
  for (auto& x : up.values()) x *= scale;
  return up;
}

/// 4-neighbour mean with replicate edges.
inline void neighbour_mean(const Plane& f, Plane& out) {
  const int w = f.width(), h = f.height();
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      out(x, y) = 0.25 * (f(xm, y) + f(xp, y) + f(x, ym) + f(x, yp));
    }
  }
}

struct Linearisation {
  Plane ix, iy, it, denom;
};

inline Linearisation linearise(const Plane& a, const Plane& b, const Plane& u0, const Plane& v0,
                               double alpha2) {
  const int w = a.width(), h = a.height();
  Plane warped(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) warped(x, y) = sample_bilinear(b, x + u0(x, y), y + v0(x, y));

  Linearisation L{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gxa = 0.5 * (a.clamped(x + 1, y) - a.clamped(x - 1, y));
      const double gxb = 0.5 * (warped.clamped(x + 1, y) - warped.clamped(x - 1, y));
      const double gya = 0.5 * (a.clamped(x, y + 1) - a.clamped(x, y - 1));
      const double gyb = 0.5 * (warped.clamped(x, y + 1) - warped.clamped(x, y - 1));
      const double ix = 0.5 * (gxa + gxb);
      const double iy = 0.5 * (gya + gyb);
      L.ix(x, y) = ix;
      L.iy(x, y) = iy;
      L.it(x, y) = warped(x, y) - a(x, y);
      L.denom(x, y) = alpha2 + ix * ix + iy * iy;
    }
  }
  return L;
}

inline double energy(const Linearisation& L, const Plane& u, const Plane& v, const Plane& u0,
                     const Plane& v0, double alpha2) {
  const int w = u.width(), h = u.height();
  double data = 0.0, smooth = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = L.ix(x, y) * (u(x, y) - u0(x, y)) + L.iy(x, y) * (v(x, y) - v0(x, y)) + L.it(x, y);
      data += r * r;
      if (x + 1 < w) {
        const double du = u(x + 1, y) - u(x, y), dv = v(x + 1, y) - v(x, y);
        smooth += du * du + dv * dv;
      }
      if (y + 1 < h) {
        const double du = u(x, y + 1) - u(x, y), dv = v(x, y + 1) - v(x, y);
        smooth += du * du + dv * dv;
      }
    }
  }
  return data + alpha2 * 0.25 * smooth;
}

}  // namespace detail

/// Dense forward flow from frame_a to frame_b (grayscale, 0-255 scale).
inline FlowField estimate_flow(const GrayImage& frame_a, const GrayImage& frame_b,
                               const FlowEstimatorConfig& cfg, FlowDiagnostics* diag = nullptr) {
  cfg.validate();
  if (!frame_a.same_shape(frame_b))
    throw Error(Errc::DimensionMismatch, "frames are " + std::to_string(frame_a.width()) + "x" +
                                             std::to_string(frame_a.height()) + " and " +
                                             std::to_string(frame_b.width()) + "x" +
                                             std::to_string(frame_b.height()));
  if (frame_a.width() < kMinFlowDimension || frame_a.height() < kMinFlowDimension)
    throw Error(Errc::DimensionMismatch, "frames must be at least 8x8");

  std::vector<detail::Plane> pyr_a{detail::to_plane(frame_a)};
  std::vector<detail::Plane> pyr_b{detail::to_plane(frame_b)};
  while (static_cast<int>(pyr_a.size()) < cfg.pyramid_levels &&
         (pyr_a.back().width() + 1) / 2 >= kMinFlowDimension &&
         (pyr_a.back().height() + 1) / 2 >= kMinFlowDimension) {
    pyr_a.push_back(detail::downsample2(pyr_a.back()));
    pyr_b.push_back(detail::downsample2(pyr_b.back()));
  }

  const double alpha2 = cfg.smoothness_weight;
  const int levels = static_cast<int>(pyr_a.size());
  detail::Plane u(pyr_a.back().width(), pyr_a.back().height());
  detail::Plane v(u.width(), u.height());
  FlowDiagnostics local;
  local.levels_used = levels;

  for (int level = levels - 1; level >= 0; --level) {
    const auto& a = pyr_a[level];
    const auto& b = pyr_b[level];
    const int w = a.width(), h = a.height();
    if (u.width() != w || u.height() != h) {
      u = detail::upsample_flow(u, w, h);
      v = detail::upsample_flow(v, w, h);
    }
    const detail::Plane u0 = u, v0 = v;
    const auto L = detail::linearise(a, b, u0, v0, alpha2);
    const bool finest = level == 0;
    const bool track = finest && diag != nullptr;
    if (track) local.finest_energy.push_back(detail::energy(L, u, v, u0, v0, alpha2));

    detail::Plane ubar(w, h), vbar(w, h);
    bool converged = false;
    int it = 0;
    while (it < cfg.iterations) {
      detail::neighbour_mean(u, ubar);
      detail::neighbour_mean(v, vbar);
      double max_update = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double ix = L.ix.values()[i], iy = L.iy.values()[i];
        const double ub = ubar.values()[i], vb = vbar.values()[i];
        const double t = (ix * (ub - u0.values()[i]) + iy * (vb - v0.values()[i]) + L.it.values()[i]) /
                         L.denom.values()[i];
        const double un = ub - ix * t;
        const double vn = vb - iy * t;
        max_update = std::max({max_update, std::fabs(un - u.values()[i]), std::fabs(vn - v.values()[i])});
        u.values()[i] = un;
        v.values()[i] = vn;
      }
      ++it;
      if (track) local.finest_energy.push_back(detail::energy(L, u, v, u0, v0, alpha2));
      if (max_update < cfg.convergence_eps) {
        converged = true;
        break;
      }
    }
    if (finest) {
      local.converged = converged;
      local.finest_iterations = it;
    }
  }

  FlowField out(frame_a.width(), frame_a.height());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double a = u.values()[i], b = v.values()[i];
    const double m = std::hypot(a, b);
    if (m > cfg.max_displacement) {
      a *= cfg.max_displacement / m;
      b *= cfg.max_displacement / m;
    }
    out.u.values()[i] = static_cast<float>(a);
    out.v.values()[i] = static_cast<float>(b);
  }
  if (diag) *diag = std::move(local);
  return out;
}

/// F_t = flow(I_t, I_{t+1}) for t = 0 .. n-2; n frames give n-1 fields.
inline std::vector<FlowField> estimate_sequence_flows(std::span<const RgbImage> frames,
                                                      const FlowEstimatorConfig& cfg) {
  if (frames.size() < 2)
    throw Error(Errc::SequenceTooShort,
                "need at least 2 frames for flow, got " + std::to_string(frames.size()));
  std::vector<FlowField> flows;
  flows.reserve(frames.size() - 1);
  GrayImage prev = to_gray(frames[0]);
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    GrayImage next = to_gray(frames[t + 1]);
    flows.push_back(estimate_flow(prev, next, cfg));
    flows.back().src_index = static_cast<int>(t);
    prev = std::move(next);
  }
  return flows;
}

inline std::vector<FlowField> estimate_sequence_flows(const FrameSequence& seq,
                                                      const FlowEstimatorConfig& cfg) {
  return estimate_sequence_flows(std::span<const RgbImage>(seq.frames), cfg);
}

}  // namespace resflow
