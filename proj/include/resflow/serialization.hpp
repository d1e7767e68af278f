#pragma once

// JSON mappings for every configuration type. Missing keys keep their
// defaults; unknown keys are rejected so typos in config files surface early.

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <string>

#include "resflow/dataset.hpp"
#include "resflow/error.hpp"
#include "resflow/flow.hpp"
#include "resflow/metrics.hpp"
#include "resflow/model.hpp"
#include "resflow/residual.hpp"
#include "resflow/training.hpp"

namespace resflow {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(Errc::InvalidConfig, std::string("unknown key '") + key + "' in " + what);
  }
}

template <typename T>
inline void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

}  // namespace detail

inline void to_json(json& j, const FlowEstimatorConfig& c) {
  j = json{{"smoothness_weight", c.smoothness_weight},
           {"iterations", c.iterations},
           {"convergence_eps", c.convergence_eps},
           {"pyramid_levels", c.pyramid_levels},
           {"max_displacement", c.max_displacement}};
}

inline void from_json(const json& j, FlowEstimatorConfig& c) {
  detail::reject_unknown_keys(
      j, {"smoothness_weight", "iterations", "convergence_eps", "pyramid_levels", "max_displacement"}, "flow");
  detail::read_opt(j, "smoothness_weight", c.smoothness_weight);
  detail::read_opt(j, "iterations", c.iterations);
  detail::read_opt(j, "convergence_eps", c.convergence_eps);
  detail::read_opt(j, "pyramid_levels", c.pyramid_levels);
  detail::read_opt(j, "max_displacement", c.max_displacement);
}

inline void to_json(json& j, const NormalizationSpec& n) { j = json{{"clip", n.clip}}; }

inline void from_json(const json& j, NormalizationSpec& n) {
  detail::reject_unknown_keys(j, {"clip"}, "normalization");
  detail::read_opt(j, "clip", n.clip);
}

inline void to_json(json& j, const StageSpec& s) {
  j = json::array({s.channels, s.blocks, s.stride});
}

inline void from_json(const json& j, StageSpec& s) {
  if (!j.is_array() || j.size() != 3)
    throw Error(Errc::InvalidConfig, "a stage is [channels, blocks, stride]");
  s = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

inline void to_json(json& j, const BackboneConfig& c) {
  j = json{{"input_size", c.input_size}, {"stages", c.stages}, {"head_hidden", c.head_hidden}, {"seed", c.seed}};
}

inline void from_json(const json& j, BackboneConfig& c) {
  detail::reject_unknown_keys(j, {"input_size", "stages", "head_hidden", "seed"}, "backbone");
  detail::read_opt(j, "input_size", c.input_size);
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j.at("stages")) c.stages.push_back(s.get<StageSpec>());
  }
  detail::read_opt(j, "head_hidden", c.head_hidden);
  detail::read_opt(j, "seed", c.seed);
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr_init", c.lr_init},       {"lr_factor", c.lr_factor},   {"patience_epochs", c.patience_epochs},
           {"lr_floor", c.lr_floor},     {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
           {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2}, {"adam_eps", c.adam_eps},
           {"seed", c.seed}};
}

inline void from_json(const json& j, TrainConfig& c) {
  detail::reject_unknown_keys(j,
                              {"lr_init", "lr_factor", "patience_epochs", "lr_floor", "batch_size", "max_epochs",
                               "adam_beta1", "adam_beta2", "adam_eps", "seed"},
                              "train");
  detail::read_opt(j, "lr_init", c.lr_init);
  detail::read_opt(j, "lr_factor", c.lr_factor);
  detail::read_opt(j, "patience_epochs", c.patience_epochs);
  detail::read_opt(j, "lr_floor", c.lr_floor);
  detail::read_opt(j, "batch_size", c.batch_size);
  detail::read_opt(j, "max_epochs", c.max_epochs);
  detail::read_opt(j, "adam_beta1", c.adam_beta1);
  detail::read_opt(j, "adam_beta2", c.adam_beta2);
  detail::read_opt(j, "adam_eps", c.adam_eps);
  detail::read_opt(j, "seed", c.seed);
}

inline void to_json(json& j, const FusionConfig& c) {
  j = json{{"alpha", c.alpha}, {"beta", c.beta}, {"threshold", c.threshold}};
}

inline void from_json(const json& j, FusionConfig& c) {
  detail::reject_unknown_keys(j, {"alpha", "beta", "threshold"}, "fusion");
  detail::read_opt(j, "alpha", c.alpha);
  detail::read_opt(j, "beta", c.beta);
  detail::read_opt(j, "threshold", c.threshold);
}

inline void to_json(json& j, const SyntheticConfig& c) {
  j = json{{"real", c.real},
           {"fake", c.fake},
           {"size", c.size},
           {"frames", c.frames},
           {"seed", c.seed},
           {"velocity_std", c.velocity_std},
           {"jitter_std", c.jitter_std},
           {"max_velocity", c.max_velocity},
           {"noise_std", c.noise_std},
           {"val_fraction", c.val_fraction},
           {"test_fraction", c.test_fraction},
           {"real_source", c.real_source},
           {"fake_source", c.fake_source}};
}

inline void from_json(const json& j, SyntheticConfig& c) {
  detail::reject_unknown_keys(j,
                              {"real", "fake", "size", "frames", "seed", "velocity_std", "jitter_std",
                               "max_velocity", "noise_std", "val_fraction", "test_fraction", "real_source",
                               "fake_source"},
                              "synth");
  detail::read_opt(j, "real", c.real);
  detail::read_opt(j, "fake", c.fake);
  detail::read_opt(j, "size", c.size);
  detail::read_opt(j, "frames", c.frames);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "velocity_std", c.velocity_std);
  detail::read_opt(j, "jitter_std", c.jitter_std);
  detail::read_opt(j, "max_velocity", c.max_velocity);
  detail::read_opt(j, "noise_std", c.noise_std);
  detail::read_opt(j, "val_fraction", c.val_fraction);
  detail::read_opt(j, "test_fraction", c.test_fraction);
  detail::read_opt(j, "real_source", c.real_source);
  detail::read_opt(j, "fake_source", c.fake_source);
}

/// Stable content hash of a JSON value (FNV-1a over its compact dump).
inline std::string json_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace resflow
