#pragma once

// Video -> classifier inputs: frame loading and sampling, flow estimation or
// import, residuals, encoding. Also the on-disk flow/residual cache used by
// the preprocess command.

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "resflow/dataset.hpp"
#include "resflow/error.hpp"
#include "resflow/flo_io.hpp"
#include "resflow/flow.hpp"
#include "resflow/model.hpp"
#include "resflow/parallel.hpp"
#include "resflow/residual.hpp"
#include "resflow/serialization.hpp"
#include "resflow/training.hpp"

namespace resflow {

/// Produces the forward flows F_0..F_{n-2} of a (sampled) frame sequence.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual std::vector<FlowField> flows(const FrameSequence& seq) const = 0;
  /// Identifies the source's output for cache invalidation.
  virtual json describe() const = 0;
};

/// Built-in coarse-to-fine Horn-Schunck solver.
class VariationalFlowSource final : public FlowSource {
 public:
  explicit VariationalFlowSource(FlowEstimatorConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  std::vector<FlowField> flows(const FrameSequence& seq) const override {
    return estimate_sequence_flows(seq, cfg_);
  }
  json describe() const override { return {{"estimator", "variational"}, {"config", cfg_}}; }
  const FlowEstimatorConfig& config() const noexcept { return cfg_; }

 private:
  FlowEstimatorConfig cfg_;
};

inline std::string flow_file_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "flow_%04d.flo", t);
  return buf;
}

inline std::string residual_file_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "resid_%04d.flo", t);
  return buf;
}

/// Reads externally computed flows from <root>/<video_id>/flow_NNNN.flo.
class PrecomputedFlowSource final : public FlowSource {
 public:
  explicit PrecomputedFlowSource(std::filesystem::path root) : root_(std::move(root)) {}

  std::vector<FlowField> flows(const FrameSequence& seq) const override {
    if (seq.size() < 2) throw Error(Errc::SequenceTooShort, "video '" + seq.id + "' has fewer than 2 frames");
    std::vector<FlowField> out;
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      auto f = read_flo(root_ / seq.id / flow_file_name(static_cast<int>(t)));
      if (f.width() != seq.width() || f.height() != seq.height())
        throw Error(Errc::DimensionMismatch, "imported flow " + std::to_string(t) + " of '" + seq.id +
                                                 "' does not match the frame size");
      f.src_index = static_cast<int>(t);
      out.push_back(std::move(f));
    }
    return out;
  }
  json describe() const override { return {{"estimator", "precomputed"}, {"root", root_.string()}}; }

 private:
  std::filesystem::path root_;
};

/// Per-video cache: <root>/<id>/flow_NNNN.flo, resid_NNNN.flo and a
/// config.hash sidecar naming the settings the files were computed with.
class FlowCache {
 public:
  FlowCache(std::filesystem::path root, std::string key_hash) : root_(std::move(root)), key_(std::move(key_hash)) {}

  std::filesystem::path dir(const std::string& id) const { return root_ / id; }

  /// True when the sidecar matches and every expected file exists with the
  /// right size.
  bool valid(const std::string& id, std::size_t n_frames, int width, int height) const {
    const auto d = dir(id);
    std::ifstream in(d / "config.hash");
    std::string stored;
    if (!in || !(in >> stored) || stored != key_) return false;
    if (n_frames < 2) return false;
    const auto expect = flo_file_size(width, height);
    std::error_code ec;
    for (std::size_t t = 0; t + 1 < n_frames; ++t)
      if (std::filesystem::file_size(d / flow_file_name(static_cast<int>(t)), ec) != expect || ec) return false;
    for (std::size_t t = 0; t + 2 < n_frames; ++t)
      if (std::filesystem::file_size(d / residual_file_name(static_cast<int>(t)), ec) != expect || ec) return false;
    return true;
  }

  std::vector<FlowField> read_flows(const std::string& id, std::size_t n_frames) const {
    std::vector<FlowField> out;
    for (std::size_t t = 0; t + 1 < n_frames; ++t) {
      out.push_back(read_flo(dir(id) / flow_file_name(static_cast<int>(t))));
      out.back().src_index = static_cast<int>(t);
    }
    return out;
  }

  std::vector<ResidualField> read_residuals(const std::string& id, std::size_t n_frames) const {
    std::vector<ResidualField> out;
    for (std::size_t t = 0; t + 2 < n_frames; ++t) {
      out.push_back(flow_as_residual(read_flo(dir(id) / residual_file_name(static_cast<int>(t)))));
      out.back().index = static_cast<int>(t);
    }
    return out;
  }

  void write(const std::string& id, const std::vector<FlowField>& flows,
             const std::vector<ResidualField>& residuals) const {
    const auto d = dir(id);
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + d.string() + ": " + ec.message());
    std::filesystem::remove(d / "config.hash", ec);
    for (std::size_t t = 0; t < flows.size(); ++t) write_flo(flows[t], d / flow_file_name(static_cast<int>(t)));
    for (std::size_t t = 0; t < residuals.size(); ++t)
      write_flo(residual_as_flow(residuals[t]), d / residual_file_name(static_cast<int>(t)));
    std::ofstream out(d / "config.hash", std::ios::trunc);
    out << key_ << "\n";
    if (!out) throw Error(Errc::IoError, "cannot write cache sidecar in " + d.string());
  }

  const std::string& key() const noexcept { return key_; }

 private:
  std::filesystem::path root_;
  std::string key_;
};

/// Encoded inputs of one video for each requested modality.
struct VideoInputs {
  std::vector<EncodedInput> rgb;
  std::vector<EncodedInput> flow;
  std::vector<EncodedInput> residual;

  const std::vector<EncodedInput>& get(InputKind k) const {
    switch (k) {
      case InputKind::RgbFrame: return rgb;
      case InputKind::FlowMap: return flow;
      case InputKind::FlowResidual: return residual;
    }
    return rgb;
  }
};

struct Pipeline {
  int input_size = 64;
  NormalizationSpec norm;
  std::size_t max_frames = 32;
  std::shared_ptr<const FlowSource> flow_source = std::make_shared<VariationalFlowSource>();
  std::shared_ptr<const FlowCache> cache;  // optional read-through cache
  unsigned workers = 1;

  json describe() const {
    return {{"input_size", input_size},
            {"normalization", norm},
            {"max_frames", max_frames},
            {"flow_source", flow_source->describe()}};
  }

  /// Cache key for the flow-producing part of the pipeline.
  std::string flow_key() const {
    return json_hash({{"max_frames", max_frames}, {"flow_source", flow_source->describe()}});
  }

  FrameSequence load(const VideoEntry& e) const { return sample_frames(load_frames(e), max_frames); }

  /// Flows and residuals of a sampled sequence, via the cache when present.
  std::pair<std::vector<FlowField>, std::vector<ResidualField>> motion(const FrameSequence& seq,
                                                                       bool need_residuals) const {
    if (seq.size() < 2)
      throw Error(Errc::SequenceTooShort, "video '" + seq.id + "' has " + std::to_string(seq.size()) + " frame(s)");
    if (need_residuals && seq.size() < 3)
      throw Error(Errc::SequenceTooShort, "video '" + seq.id + "' needs 3 frames for residuals");
    if (cache && cache->valid(seq.id, seq.size(), seq.width(), seq.height())) {
      auto flows = cache->read_flows(seq.id, seq.size());
      std::vector<ResidualField> res;
      if (need_residuals) res = cache->read_residuals(seq.id, seq.size());
      return {std::move(flows), std::move(res)};
    }
    auto flows = flow_source->flows(seq);
    std::vector<ResidualField> res;
    if (flows.size() >= 2) res = compute_residuals(flows);
    return {std::move(flows), std::move(res)};
  }

  VideoInputs encode(const VideoEntry& e, std::initializer_list<InputKind> kinds) const {
    const auto seq = load(e);
    VideoInputs out;
    bool want_flow = false, want_res = false;
    for (auto k : kinds) {
      if (k == InputKind::RgbFrame)
        for (const auto& f : seq.frames) out.rgb.push_back(encode_frame(f, input_size));
      want_flow = want_flow || k == InputKind::FlowMap;
      want_res = want_res || k == InputKind::FlowResidual;
    }
    if (want_flow || want_res) {
      const auto [flows, res] = motion(seq, want_res);
      if (want_flow)
        for (const auto& f : flows) out.flow.push_back(encode_flow(f, input_size, norm));
      if (want_res)
        for (const auto& r : res) out.residual.push_back(encode_residual(r, input_size, norm));
    }
    return out;
  }

  std::vector<EncodedInput> encode(const VideoEntry& e, InputKind kind) const {
    auto v = encode(e, {kind});
    switch (kind) {
      case InputKind::RgbFrame: return std::move(v.rgb);
      case InputKind::FlowMap: return std::move(v.flow);
      case InputKind::FlowResidual: return std::move(v.residual);
    }
    return {};
  }
};

/// Per-input examples of one modality for every video in the manifest, in
/// manifest order.
inline ExampleSet build_examples(const Manifest& m, const Pipeline& pipeline, InputKind kind) {
  std::vector<std::vector<EncodedInput>> per_video(m.entries.size());
  parallel_for(m.entries.size(), pipeline.workers,
               [&](std::size_t i) { per_video[i] = pipeline.encode(m.entries[i], kind); });
  ExampleSet set;
  for (std::size_t i = 0; i < per_video.size(); ++i)
    for (auto& in : per_video[i]) set.add(std::move(in), label_value(m.entries[i].label));
  return set;
}

struct TrainResult {
  BranchModel model;  // best validation epoch
  TrainLog log;
  TrainState state;
  BranchModel last;   // parameters after the final epoch
};

/// Encodes both splits with the pipeline and trains until the schedule ends.
inline TrainResult train_branch(BranchModel model, const Manifest& train, const Manifest& val,
                                const TrainConfig& cfg, const Pipeline& pipeline) {
  if (train.entries.empty()) throw Error(Errc::EmptySplit, "training manifest is empty");
  if (val.entries.empty()) throw Error(Errc::EmptySplit, "validation manifest is empty");
  for (const auto& t : train.entries)
    for (const auto& v : val.entries)
      if (t.id == v.id) throw Error(Errc::SplitLeak, "id '" + t.id + "' is in both training and validation");
  if (!(pipeline.norm == model.normalization()))
    throw Error(Errc::InvalidConfig, "pipeline normalization differs from the model's");
  if (pipeline.input_size != model.config().input_size)
    throw Error(Errc::ShapeMismatch, "pipeline input size differs from the model's");
  const auto tr = build_examples(train, pipeline, model.modality());
  const auto va = build_examples(val, pipeline, model.modality());
  Trainer trainer(std::move(model), cfg);
  trainer.run(tr, va);
  return {trainer.best_model(), trainer.log(), trainer.state(), trainer.model()};
}

}  // namespace resflow
