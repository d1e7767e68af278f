#pragma once

// Checkpoint container:
//
//   "RFLWCKPT"            8-byte magic
//   u32 format_version
//   u64 header_length     JSON header: configs, modality, normalisation,
//   header bytes          tensor directory, optimiser and schedule state
//   f64[] payload         tensor values in directory order
//   u64 FNV-1a            over everything above
//
// All integers and doubles little-endian. Round trips are value-exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/model.hpp"
#include "resflow/serialization.hpp"
#include "resflow/training.hpp"

namespace resflow {

inline constexpr char kCheckpointMagic[8] = {'R', 'F', 'L', 'W', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  BranchModel model;
  std::optional<TrainConfig> train_config;
  std::optional<TrainState> state;
  TrainLog log;
};

namespace detail {

inline void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline std::uint64_t fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 1099511628211ull;
  }
  return h;
}

struct TensorDirectory {
  json entries = json::array();
  std::vector<const Tensor*> order;

  void add(const std::string& group, const ParamStore& ps) {
    for (const auto& t : ps.tensors()) {
      entries.push_back({{"group", group}, {"name", t.name}, {"shape", t.shape}});
      order.push_back(&t);
    }
  }
};

inline ParamStore take_group(const json& dir, const std::string& group, const std::vector<double>& payload,
                             std::size_t& cursor) {
  ParamStore ps;
  for (const auto& e : dir) {
    if (e.at("group").get<std::string>() != group) continue;
    auto& t = ps.add(e.at("name").get<std::string>(), e.at("shape").get<std::vector<int>>());
    if (cursor + t.data.size() > payload.size()) throw Error(Errc::CorruptCheckpoint, "payload too short");
    std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(cursor), t.data.size(), t.data.begin());
    cursor += t.data.size();
  }
  return ps;
}

}  // namespace detail

inline std::vector<char> encode_checkpoint(const BranchModel& model, const TrainConfig* cfg,
                                           const TrainState* state, const TrainLog* log) {
  detail::TensorDirectory dir;
  dir.add("params", model.params());
  json header{{"backbone", model.config()},
              {"modality", std::string(input_kind_name(model.modality()))},
              {"normalization", model.normalization()}};
  if (state) {
    dir.add("adam_m", state->adam_m);
    dir.add("adam_v", state->adam_v);
    dir.add("best_params", state->best_params);
    header["train_state"] = {{"epoch", state->epoch},
                             {"lr", state->schedule.lr()},
                             {"best_val_acc", state->schedule.best()},
                             {"epochs_since_improvement", state->schedule.epochs_since_improvement()},
                             {"adam_steps", state->adam_steps},
                             {"rng", state->rng_state()},
                             {"finished", state->finished},
                             {"best_epoch", state->best_epoch}};
  }
  if (cfg) header["train_config"] = *cfg;
  if (log) header["train_log"] = log->to_text();
  header["tensors"] = dir.entries;

  // best_val_acc starts at -inf, which JSON cannot hold.
  if (state && !std::isfinite(state->schedule.best())) header["train_state"]["best_val_acc"] = nullptr;

  const std::string hs = header.dump();
  std::vector<char> out(kCheckpointMagic, kCheckpointMagic + 8);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((kCheckpointVersion >> (8 * i)) & 0xFFu));
  detail::put_u64(out, hs.size());
  out.insert(out.end(), hs.begin(), hs.end());
  for (const Tensor* t : dir.order)
    for (double v : t->data) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  detail::put_u64(out, detail::fnv1a(out.data(), out.size()));
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
  if (bytes.size() < 8 + 4 + 8 + 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw Error(Errc::CorruptCheckpoint, origin + ": not a checkpoint or truncated");
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (version != kCheckpointVersion)
    throw Error(Errc::VersionMismatch, origin + ": format version " + std::to_string(version) + ", expected " +
                                          std::to_string(kCheckpointVersion));
  const std::size_t body = bytes.size() - 8;
  if (detail::get_u64(bytes.data() + body) != detail::fnv1a(bytes.data(), body))
    throw Error(Errc::CorruptCheckpoint, origin + ": checksum mismatch");
  const std::uint64_t hlen = detail::get_u64(bytes.data() + 12);
  if (20 + hlen > body || (body - 20 - hlen) % 8 != 0)
    throw Error(Errc::CorruptCheckpoint, origin + ": inconsistent header length");

  try {
    const json header = json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(hlen));
    std::vector<double> payload((body - 20 - hlen) / 8);
    const char* p = bytes.data() + 20 + hlen;
    for (auto& v : payload) {
      v = std::bit_cast<double>(detail::get_u64(p));
      p += 8;
    }

    const auto backbone = header.at("backbone").get<BackboneConfig>();
    const auto modality = parse_input_kind(header.at("modality").get<std::string>());
    const auto norm = header.at("normalization").get<NormalizationSpec>();
    Checkpoint ck{BranchModel(backbone, modality, norm), std::nullopt, std::nullopt, {}};

    const auto& dir = header.at("tensors");
    std::size_t cursor = 0;
    auto params = detail::take_group(dir, "params", payload, cursor);
    if (!params.same_layout(ck.model.params()))
      throw Error(Errc::CorruptCheckpoint, origin + ": tensor layout does not match the backbone config");
    ck.model.params() = std::move(params);

    if (header.contains("train_config")) ck.train_config = header.at("train_config").get<TrainConfig>();
    if (header.contains("train_log")) ck.log = TrainLog::parse(header.at("train_log").get<std::string>());
    if (header.contains("train_state")) {
      const auto& s = header.at("train_state");
      TrainState st;
      st.adam_m = detail::take_group(dir, "adam_m", payload, cursor);
      st.adam_v = detail::take_group(dir, "adam_v", payload, cursor);
      st.best_params = detail::take_group(dir, "best_params", payload, cursor);
      st.epoch = s.at("epoch").get<int>();
      const TrainConfig tc = ck.train_config.value_or(TrainConfig{});
      st.schedule = PlateauSchedule(tc);
      const double best = s.at("best_val_acc").is_null() ? -std::numeric_limits<double>::infinity()
                                                          : s.at("best_val_acc").get<double>();
      st.schedule.restore(s.at("lr").get<double>(), best, s.at("epochs_since_improvement").get<int>());
      st.adam_steps = s.at("adam_steps").get<std::int64_t>();
      st.set_rng_state(s.at("rng").get<std::string>());
      st.finished = s.at("finished").get<bool>();
      st.best_epoch = s.at("best_epoch").get<int>();
      ck.state = std::move(st);
    }
    if (cursor != payload.size()) throw Error(Errc::CorruptCheckpoint, origin + ": unexpected trailing tensors");
    return ck;
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptCheckpoint, origin + ": " + e.what());
  }
}

inline void write_bytes(const std::vector<char>& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

inline void save_checkpoint(const BranchModel& model, const std::filesystem::path& path,
                            const TrainConfig* cfg = nullptr, const TrainState* state = nullptr,
                            const TrainLog* log = nullptr) {
  write_bytes(encode_checkpoint(model, cfg, state, log), path);
}

inline void save_checkpoint(const Trainer& trainer, const std::filesystem::path& path) {
  save_checkpoint(trainer.model(), path, &trainer.config(), &trainer.state(), &trainer.log());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

/// Model to score with: the best validation epoch when training state is
/// present, else the stored weights.
inline BranchModel inference_model(const Checkpoint& ck) {
  BranchModel m = ck.model;
  if (ck.state && ck.state->best_params.same_layout(m.params())) m.params() = ck.state->best_params;
  return m;
}

/// Rebuilds a Trainer from a checkpoint written mid-training.
inline Trainer resume_trainer(const Checkpoint& ck) {
  if (!ck.state || !ck.train_config)
    throw Error(Errc::CorruptCheckpoint, "checkpoint carries no training state");
  return Trainer(ck.model, *ck.train_config, *ck.state, ck.log);
}

}  // namespace resflow
