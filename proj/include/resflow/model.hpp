#pragma once

// Branch classifier: 3x3 conv stem, stages of basic residual blocks, global
// average pooling and a two-layer head producing one logit for P(Fake).
// Forward and backward passes are hand-written over CHW double buffers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/frames.hpp"
#include "resflow/residual.hpp"

namespace resflow {

struct StageSpec {
  int channels = 16;
  int blocks = 2;
  int stride = 2;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct BackboneConfig {
  int input_size = 64;
  std::vector<StageSpec> stages = {{16, 2, 2}, {32, 2, 2}, {64, 2, 2}};
  int head_hidden = 32;  // 0 = single linear layer after pooling
  std::uint64_t seed = 1;

  void validate() const {
    if (input_size < 8) throw Error(Errc::InvalidConfig, "input_size must be >= 8");
    if (stages.empty()) throw Error(Errc::InvalidConfig, "backbone needs at least one stage");
    for (const auto& s : stages)
      if (s.channels < 1 || s.blocks < 1 || s.stride < 1)
        throw Error(Errc::InvalidConfig, "stage channels, blocks and stride must be positive");
    if (head_hidden < 0) throw Error(Errc::InvalidConfig, "head_hidden must be non-negative");
  }

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// Named tensor in a flat parameter store.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

class ParamStore {
 public:
  Tensor& add(std::string name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    tensors_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
    return tensors_.back();
  }

  const Tensor* find(std::string_view name) const {
    for (const auto& t : tensors_)
      if (t.name == name) return &t;
    return nullptr;
  }
  Tensor* find(std::string_view name) {
    for (auto& t : tensors_)
      if (t.name == name) return &t;
    return nullptr;
  }

  std::vector<Tensor>& tensors() noexcept { return tensors_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  std::size_t count() const noexcept { return tensors_.size(); }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.data.size();
    return n;
  }

  ParamStore zeros_like() const {
    ParamStore z;
    for (const auto& t : tensors_) z.add(t.name, t.shape);
    return z;
  }

  bool same_layout(const ParamStore& o) const {
    if (o.tensors_.size() != tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name != o.tensors_[i].name || tensors_[i].shape != o.tensors_[i].shape) return false;
    return true;
  }

  /// FNV-1a over names and the raw bytes of every value.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    for (const auto& t : tensors_) {
      mix(t.name.data(), t.name.size());
      mix(t.data.data(), t.data.size() * sizeof(double));
    }
    return h;
  }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<Tensor> tensors_;
};

struct Prediction {
  double prob = 0.5;
  double logit = 0.0;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

enum class Pooling { MeanProb, MeanLogit, Max };

inline std::string_view pooling_name(Pooling p) noexcept {
  switch (p) {
    case Pooling::MeanProb: return "mean_prob";
    case Pooling::MeanLogit: return "mean_logit";
    case Pooling::Max: return "max";
  }
  return "mean_prob";
}

inline Pooling parse_pooling(std::string_view s) {
  if (s == "mean_prob") return Pooling::MeanProb;
  if (s == "mean_logit") return Pooling::MeanLogit;
  if (s == "max") return Pooling::Max;
  throw Error(Errc::ParseError, "unknown pooling '" + std::string(s) + "'");
}

namespace detail {

struct ConvSpec {
  int in_c, out_c, k, stride, pad;
  int in_h, in_w, out_h, out_w;
  std::size_t weight, bias;  // indices into the ParamStore
};

struct BlockSpec {
  ConvSpec conv1, conv2;
  bool has_proj = false;
  ConvSpec proj{};
};

struct Plan {
  ConvSpec stem;
  std::vector<BlockSpec> blocks;
  int feat_c = 0;
  int hidden = 0;
  std::size_t fc1_w = 0, fc1_b = 0, fc2_w = 0, fc2_b = 0;
};

inline ConvSpec make_conv(ParamStore& ps, const std::string& name, int in_c, int out_c, int k, int stride,
                          int in_h, int in_w) {
  ConvSpec c{};
  c.in_c = in_c;
  c.out_c = out_c;
  c.k = k;
  c.stride = stride;
  c.pad = k / 2;
  c.in_h = in_h;
  c.in_w = in_w;
  c.out_h = (in_h + 2 * c.pad - k) / stride + 1;
  c.out_w = (in_w + 2 * c.pad - k) / stride + 1;
  c.weight = ps.count();
  ps.add(name + ".w", {out_c, in_c, k, k});
  c.bias = ps.count();
  ps.add(name + ".b", {out_c});
  return c;
}

/// Builds the layer plan; fills `ps` with zero tensors in canonical order.
inline Plan build_plan(const BackboneConfig& cfg, ParamStore& ps) {
  cfg.validate();
  Plan p;
  const int s0 = cfg.input_size;
  p.stem = make_conv(ps, "stem", 3, cfg.stages.front().channels, 3, 1, s0, s0);
  int c = p.stem.out_c, h = p.stem.out_h, w = p.stem.out_w;
  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const auto& st = cfg.stages[si];
    for (int bi = 0; bi < st.blocks; ++bi) {
      const std::string name = "stage" + std::to_string(si) + ".block" + std::to_string(bi);
      const int stride = bi == 0 ? st.stride : 1;
      BlockSpec b;
      b.conv1 = make_conv(ps, name + ".conv1", c, st.channels, 3, stride, h, w);
      b.conv2 = make_conv(ps, name + ".conv2", st.channels, st.channels, 3, 1, b.conv1.out_h, b.conv1.out_w);
      if (stride != 1 || c != st.channels) {
        b.has_proj = true;
        b.proj = make_conv(ps, name + ".proj", c, st.channels, 1, stride, h, w);
      }
      c = st.channels;
      h = b.conv1.out_h;
      w = b.conv1.out_w;
      p.blocks.push_back(b);
    }
  }
  p.feat_c = c;
  p.hidden = cfg.head_hidden;
  if (p.hidden > 0) {
    p.fc1_w = ps.count();
    ps.add("head.fc1.w", {p.hidden, c});
    p.fc1_b = ps.count();
    ps.add("head.fc1.b", {p.hidden});
  }
  p.fc2_w = ps.count();
  ps.add("head.fc2.w", {1, p.hidden > 0 ? p.hidden : c});
  p.fc2_b = ps.count();
  ps.add("head.fc2.b", {1});
  return p;
}

inline void conv_forward(const ConvSpec& c, const double* in, const double* w, const double* b, double* out) {
  const std::size_t plane = static_cast<std::size_t>(c.out_h) * c.out_w;
  for (int oc = 0; oc < c.out_c; ++oc) std::fill(out + oc * plane, out + (oc + 1) * plane, b[oc]);
  for (int oc = 0; oc < c.out_c; ++oc) {
    double* o = out + oc * plane;
    for (int ic = 0; ic < c.in_c; ++ic) {
      const double* src = in + static_cast<std::size_t>(ic) * c.in_h * c.in_w;
      for (int ky = 0; ky < c.k; ++ky) {
        for (int kx = 0; kx < c.k; ++kx) {
          const double wv = w[((static_cast<std::size_t>(oc) * c.in_c + ic) * c.k + ky) * c.k + kx];
          const int off = kx - c.pad;
          const int ox0 = std::max(0, (-off + c.stride - 1) / c.stride);
          const int ox1 = std::min(c.out_w, (c.in_w - 1 - off) / c.stride + 1);
          for (int oy = 0; oy < c.out_h; ++oy) {
            const int iy = oy * c.stride + ky - c.pad;
            if (iy < 0 || iy >= c.in_h) continue;
            const double* row = src + static_cast<std::size_t>(iy) * c.in_w + off;
            double* orow = o + static_cast<std::size_t>(oy) * c.out_w;
            if (c.stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * row[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * row[ox * c.stride];
            }
          }
        }
      }
    }
  }
}

/// Accumulates dw, db and (when din != nullptr) din.
inline void conv_backward(const ConvSpec& c, const double* in, const double* w, const double* dout, double* dw,
                          double* db, double* din) {
  const std::size_t plane = static_cast<std::size_t>(c.out_h) * c.out_w;
  for (int oc = 0; oc < c.out_c; ++oc) {
    const double* g = dout + oc * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += g[i];
    db[oc] += s;
    for (int ic = 0; ic < c.in_c; ++ic) {
      const std::size_t in_off = static_cast<std::size_t>(ic) * c.in_h * c.in_w;
      for (int ky = 0; ky < c.k; ++ky) {
        for (int kx = 0; kx < c.k; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(oc) * c.in_c + ic) * c.k + ky) * c.k + kx;
          const double wv = w[widx];
          const int off = kx - c.pad;
          const int ox0 = std::max(0, (-off + c.stride - 1) / c.stride);
          const int ox1 = std::min(c.out_w, (c.in_w - 1 - off) / c.stride + 1);
          double acc = 0.0;
          for (int oy = 0; oy < c.out_h; ++oy) {
            const int iy = oy * c.stride + ky - c.pad;
            if (iy < 0 || iy >= c.in_h) continue;
            const std::size_t row = in_off + static_cast<std::size_t>(iy) * c.in_w + off;
            const double* grow = g + static_cast<std::size_t>(oy) * c.out_w;
            const double* irow = in + row;
            if (c.stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) acc += grow[ox] * irow[ox];
              if (din) {
                double* drow = din + row;
                for (int ox = ox0; ox < ox1; ++ox) drow[ox] += wv * grow[ox];
              }
            } else {
              for (int ox = ox0; ox < ox1; ++ox) acc += grow[ox] * irow[ox * c.stride];
              if (din) {
                double* drow = din + row;
                for (int ox = ox0; ox < ox1; ++ox) drow[ox * c.stride] += wv * grow[ox];
              }
            }
          }
          dw[widx] += acc;
        }
      }
    }
  }
}

inline std::size_t out_size(const ConvSpec& c) {
  return static_cast<std::size_t>(c.out_c) * c.out_h * c.out_w;
}

inline void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

/// Activations kept for the backward pass.
struct Trace {
  std::vector<double> input;
  std::vector<double> stem;  // post-ReLU
  struct Block {
    std::vector<double> h1;   // post-ReLU
    std::vector<double> out;  // post-ReLU
  };
  std::vector<Block> blocks;
  std::vector<double> pooled;
  std::vector<double> hidden;  // post-ReLU
  double logit = 0.0;
};

}  // namespace detail

class BranchModel {
 public:
  BranchModel() = default;
  BranchModel(BackboneConfig cfg, InputKind modality, NormalizationSpec norm = {})
      : config_(std::move(cfg)), modality_(modality), norm_(norm) {
    plan_ = detail::build_plan(config_, params_);
  }

  const BackboneConfig& config() const noexcept { return config_; }
  InputKind modality() const noexcept { return modality_; }
  const NormalizationSpec& normalization() const noexcept { return norm_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  void check_input(const EncodedInput& in) const {
    if (in.kind != modality_)
      throw Error(Errc::ModalityMismatch, "model expects " + std::string(input_kind_name(modality_)) +
                                              " input, got " + std::string(input_kind_name(in.kind)));
    if (in.size != config_.input_size ||
        in.data.size() != 3ull * config_.input_size * config_.input_size)
      throw Error(Errc::ShapeMismatch, "model expects 3x" + std::to_string(config_.input_size) + "x" +
                                           std::to_string(config_.input_size) + " input, got size " +
                                           std::to_string(in.size));
  }

  Prediction forward(const EncodedInput& in) const {
    check_input(in);
    detail::Trace tr;
    run_forward(in, tr);
    return {sigmoid(tr.logit), tr.logit};
  }

  /// Adds d(scale * loss)/d(params) for one sample given dloss/dlogit.
  void backward(const detail::Trace& tr, double dlogit, ParamStore& grads) const {
    const auto& P = plan_;
    auto W = [&](std::size_t i) { return params_[i].data.data(); };
    auto G = [&](std::size_t i) { return grads[i].data.data(); };

    std::vector<double> dpooled(static_cast<std::size_t>(P.feat_c), 0.0);
    if (P.hidden > 0) {
      std::vector<double> dh(static_cast<std::size_t>(P.hidden));
      for (int j = 0; j < P.hidden; ++j) {
        G(P.fc2_w)[j] += dlogit * tr.hidden[j];
        dh[j] = tr.hidden[j] > 0.0 ? dlogit * W(P.fc2_w)[j] : 0.0;
      }
      G(P.fc2_b)[0] += dlogit;
      for (int j = 0; j < P.hidden; ++j) {
        G(P.fc1_b)[j] += dh[j];
        for (int c = 0; c < P.feat_c; ++c) {
          G(P.fc1_w)[static_cast<std::size_t>(j) * P.feat_c + c] += dh[j] * tr.pooled[c];
          dpooled[c] += dh[j] * W(P.fc1_w)[static_cast<std::size_t>(j) * P.feat_c + c];
        }
      }
    } else {
      for (int c = 0; c < P.feat_c; ++c) {
        G(P.fc2_w)[c] += dlogit * tr.pooled[c];
        dpooled[c] = dlogit * W(P.fc2_w)[c];
      }
      G(P.fc2_b)[0] += dlogit;
    }

    // Global average pooling.
    const auto& last = P.blocks.empty() ? P.stem : P.blocks.back().conv2;
    const std::size_t plane = static_cast<std::size_t>(last.out_h) * last.out_w;
    std::vector<double> dx(static_cast<std::size_t>(P.feat_c) * plane);
    for (int c = 0; c < P.feat_c; ++c)
      std::fill(dx.begin() + c * plane, dx.begin() + (c + 1) * plane, dpooled[c] / static_cast<double>(plane));

    for (std::size_t bi = P.blocks.size(); bi-- > 0;) {
      const auto& B = P.blocks[bi];
      const auto& bt = tr.blocks[bi];
      const std::vector<double>& x = bi == 0 ? tr.stem : tr.blocks[bi - 1].out;
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (bt.out[i] <= 0.0) dx[i] = 0.0;
      std::vector<double> dh1(bt.h1.size(), 0.0);
      detail::conv_backward(B.conv2, bt.h1.data(), W(B.conv2.weight), dx.data(), G(B.conv2.weight),
                            G(B.conv2.bias), dh1.data());
      for (std::size_t i = 0; i < dh1.size(); ++i)
        if (bt.h1[i] <= 0.0) dh1[i] = 0.0;
      std::vector<double> dxin(x.size(), 0.0);
      detail::conv_backward(B.conv1, x.data(), W(B.conv1.weight), dh1.data(), G(B.conv1.weight),
                            G(B.conv1.bias), dxin.data());
      if (B.has_proj) {
        detail::conv_backward(B.proj, x.data(), W(B.proj.weight), dx.data(), G(B.proj.weight), G(B.proj.bias),
                              dxin.data());
      } else {
        for (std::size_t i = 0; i < dxin.size(); ++i) dxin[i] += dx[i];
      }
      dx = std::move(dxin);
    }

    for (std::size_t i = 0; i < dx.size(); ++i)
      if (tr.stem[i] <= 0.0) dx[i] = 0.0;
    detail::conv_backward(P.stem, tr.input.data(), W(P.stem.weight), dx.data(), G(P.stem.weight),
                          G(P.stem.bias), nullptr);
  }

  void run_forward(const EncodedInput& in, detail::Trace& tr) const {
    const auto& P = plan_;
    auto W = [&](std::size_t i) { return params_[i].data.data(); };
    tr.input.assign(in.data.begin(), in.data.end());
    tr.stem.assign(detail::out_size(P.stem), 0.0);
    detail::conv_forward(P.stem, tr.input.data(), W(P.stem.weight), W(P.stem.bias), tr.stem.data());
    detail::relu_inplace(tr.stem);

    tr.blocks.resize(P.blocks.size());
    const std::vector<double>* x = &tr.stem;
    for (std::size_t bi = 0; bi < P.blocks.size(); ++bi) {
      const auto& B = P.blocks[bi];
      auto& bt = tr.blocks[bi];
      bt.h1.assign(detail::out_size(B.conv1), 0.0);
      detail::conv_forward(B.conv1, x->data(), W(B.conv1.weight), W(B.conv1.bias), bt.h1.data());
      detail::relu_inplace(bt.h1);
      bt.out.assign(detail::out_size(B.conv2), 0.0);
      detail::conv_forward(B.conv2, bt.h1.data(), W(B.conv2.weight), W(B.conv2.bias), bt.out.data());
      if (B.has_proj) {
        std::vector<double> sc(detail::out_size(B.proj), 0.0);
        detail::conv_forward(B.proj, x->data(), W(B.proj.weight), W(B.proj.bias), sc.data());
        for (std::size_t i = 0; i < sc.size(); ++i) bt.out[i] += sc[i];
      } else {
        for (std::size_t i = 0; i < bt.out.size(); ++i) bt.out[i] += (*x)[i];
      }
      detail::relu_inplace(bt.out);
      x = &bt.out;
    }

    const auto& last = P.blocks.empty() ? P.stem : P.blocks.back().conv2;
    const std::size_t plane = static_cast<std::size_t>(last.out_h) * last.out_w;
    tr.pooled.assign(static_cast<std::size_t>(P.feat_c), 0.0);
    for (int c = 0; c < P.feat_c; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += (*x)[c * plane + i];
      tr.pooled[c] = s / static_cast<double>(plane);
    }

    const std::vector<double>* head_in = &tr.pooled;
    if (P.hidden > 0) {
      tr.hidden.assign(static_cast<std::size_t>(P.hidden), 0.0);
      for (int j = 0; j < P.hidden; ++j) {
        double z = W(P.fc1_b)[j];
        for (int c = 0; c < P.feat_c; ++c) z += W(P.fc1_w)[static_cast<std::size_t>(j) * P.feat_c + c] * tr.pooled[c];
        tr.hidden[j] = z > 0.0 ? z : 0.0;
      }
      head_in = &tr.hidden;
    }
    double z = W(P.fc2_b)[0];
    for (std::size_t j = 0; j < head_in->size(); ++j) z += W(P.fc2_w)[j] * (*head_in)[j];
    tr.logit = z;
  }

 private:
  BackboneConfig config_;
  InputKind modality_ = InputKind::RgbFrame;
  NormalizationSpec norm_;
  ParamStore params_;
  detail::Plan plan_;
};

/// He (fan-in) normal init for conv and hidden weights, zero biases. The output
/// layer is scaled down so initial probabilities sit near 0.5. Bit-identical
/// for equal config and seed.
inline constexpr double kOutputInitScale = 0.05;

inline BranchModel init_model(const BackboneConfig& cfg, InputKind modality, NormalizationSpec norm = {}) {
  BranchModel m(cfg, modality, norm);
  std::mt19937_64 rng(cfg.seed);
  for (auto& t : m.params().tensors()) {
    if (t.shape.size() < 2) continue;  // biases stay zero
    int fan_in = 1;
    for (std::size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
    const bool output_layer = t.name == "head.fc2.w";
    const double stddev = output_layer ? kOutputInitScale / std::sqrt(fan_in) : std::sqrt(2.0 / fan_in);
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& w : t.data) w = dist(rng);
  }
  return m;
}

inline constexpr double kProbEpsilon = 1e-7;

struct LabeledInput {
  const EncodedInput* input;
  int label;  // 0 = real, 1 = fake
};

struct LossAndGrad {
  double loss = 0.0;
  ParamStore grads;
};

/// Mean binary cross-entropy over the batch, p clamped to [eps, 1-eps], with
/// exact gradients (zero where the clamp is active).
inline LossAndGrad loss_and_grad(const BranchModel& model, std::span<const LabeledInput> batch) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "loss_and_grad needs at least one sample");
  LossAndGrad out{0.0, model.params().zeros_like()};
  const double scale = 1.0 / static_cast<double>(batch.size());
  detail::Trace tr;
  for (const auto& s : batch) {
    if (s.label != 0 && s.label != 1) throw Error(Errc::InvalidConfig, "labels must be 0 or 1");
    model.check_input(*s.input);
    model.run_forward(*s.input, tr);
    const double p = sigmoid(tr.logit);
    const double pc = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
    out.loss += -(s.label * std::log(pc) + (1 - s.label) * std::log(1.0 - pc)) * scale;
    const bool clamped = p < kProbEpsilon || p > 1.0 - kProbEpsilon;
    const double dlogit = clamped ? 0.0 : (p - s.label) * scale;
    if (dlogit != 0.0) model.backward(tr, dlogit, out.grads);
  }
  return out;
}

/// Pools per-input predictions into one video score.
inline double aggregate_predictions(std::span<const Prediction> preds, Pooling pooling = Pooling::MeanProb) {
  if (preds.empty()) throw Error(Errc::EmptyList, "cannot pool an empty prediction list");
  double acc = 0.0;
  for (const auto& p : preds) {
    switch (pooling) {
      case Pooling::MeanProb: acc += p.prob; break;
      case Pooling::MeanLogit: acc += p.logit; break;
      case Pooling::Max: acc = std::max(acc, p.prob); break;
    }
  }
  const double n = static_cast<double>(preds.size());
  switch (pooling) {
    case Pooling::MeanProb: return acc / n;
    case Pooling::MeanLogit: return sigmoid(acc / n);
    case Pooling::Max: return acc;
  }
  return acc / n;
}

/// Video-level branch score from per-input predictions.
inline double score_video(const BranchModel& model, std::span<const EncodedInput> inputs,
                          Pooling pooling = Pooling::MeanProb) {
  if (inputs.empty()) throw Error(Errc::EmptyList, "score_video needs at least one input");
  std::vector<Prediction> preds;
  preds.reserve(inputs.size());
  for (const auto& in : inputs) preds.push_back(model.forward(in));
  return aggregate_predictions(preds, pooling);
}

}  // namespace resflow
