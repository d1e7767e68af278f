#pragma once

// Dataset-level evaluation: per-branch video scores, weighted fusion, metrics
// and report rendering (JSON document, fused-score TSV, text tables).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "resflow/dataset.hpp"
#include "resflow/error.hpp"
#include "resflow/metrics.hpp"
#include "resflow/model.hpp"
#include "resflow/parallel.hpp"
#include "resflow/pipeline.hpp"
#include "resflow/serialization.hpp"

namespace resflow {

using ordered_json = nlohmann::ordered_json;

struct FusedScore {
  std::string id;
  double p_ori = 0.0;
  double p_res = 0.0;
  double p = 0.0;
  Label label = Label::Real;
};

struct BranchMetrics {
  double acc = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();  // NaN when one class is absent
};

struct EvalReport {
  std::string dataset_tag;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  double acc = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  double f1 = 0.0;
  BranchMetrics ori;
  BranchMetrics res;
  std::string temporal_modality = "residual";
  FusionConfig fusion;
  Pooling pooling = Pooling::MeanProb;
  std::size_t skipped_short = 0;
  std::vector<FusedScore> fused_scores;  // sorted by id
};

namespace detail {

inline double auc_or_nan(std::span<const ScoredLabel> s) {
  bool real = false, fake = false;
  for (const auto& x : s) (x.label == Label::Fake ? fake : real) = true;
  return real && fake ? auc(s) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Recomputes every metric of the report from its fused_scores.
inline void recompute_metrics(EvalReport& r) {
  std::vector<ScoredLabel> fused, ori, res;
  r.n_real = r.n_fake = 0;
  for (const auto& s : r.fused_scores) {
    (s.label == Label::Fake ? r.n_fake : r.n_real)++;
    fused.push_back({s.p, s.label});
    ori.push_back({s.p_ori, s.label});
    res.push_back({s.p_res, s.label});
  }
  if (fused.empty()) throw Error(Errc::EmptyInput, "no scorable videos in '" + r.dataset_tag + "'");
  const double t = r.fusion.threshold;
  r.acc = accuracy(fused, t);
  r.f1 = f1(fused, t);
  r.auc = detail::auc_or_nan(fused);
  r.ori = {accuracy(ori, t), detail::auc_or_nan(ori)};
  r.res = {accuracy(res, t), detail::auc_or_nan(res)};
}

/// Builds a report from already computed branch scores.
inline EvalReport assemble_report(std::string tag, std::vector<FusedScore> scores, const FusionConfig& fusion,
                                  Pooling pooling = Pooling::MeanProb, std::size_t skipped = 0,
                                  std::string temporal_modality = "residual") {
  fusion.validate();
  EvalReport r;
  r.dataset_tag = std::move(tag);
  r.fusion = fusion;
  r.pooling = pooling;
  r.skipped_short = skipped;
  r.temporal_modality = std::move(temporal_modality);
  for (auto& s : scores) s.p = fuse(s.p_ori, s.p_res, fusion);
  std::sort(scores.begin(), scores.end(), [](const FusedScore& a, const FusedScore& b) { return a.id < b.id; });
  r.fused_scores = std::move(scores);
  recompute_metrics(r);
  return r;
}

/// Scores every test video with the appearance branch (`ori`) and the temporal
/// branch (`temporal`, residual or flow-map modality), fuses and reports.
/// Videos too short for the temporal branch are skipped and counted.
inline EvalReport evaluate_dataset(const BranchModel& ori, const BranchModel& temporal, const Manifest& manifest,
                                   const FusionConfig& fusion, const Pipeline& pipeline,
                                   const std::string& tag = "test", Pooling pooling = Pooling::MeanProb) {
  fusion.validate();
  if (ori.modality() != InputKind::RgbFrame)
    throw Error(Errc::ModalityMismatch, "appearance branch must take RGB frames");
  if (temporal.modality() == InputKind::RgbFrame)
    throw Error(Errc::ModalityMismatch, "temporal branch must take flow maps or residuals");
  for (const auto& e : manifest.entries)
    if (e.split != Split::Test)
      throw Error(Errc::InvalidConfig, "evaluation expects test entries, '" + e.id + "' is " +
                                           std::string(split_name(e.split)));

  const InputKind tk = temporal.modality();
  std::vector<std::optional<FusedScore>> slots(manifest.entries.size());
  parallel_for(manifest.entries.size(), pipeline.workers, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    VideoInputs in;
    try {
      in = pipeline.encode(e, {InputKind::RgbFrame, tk});
    } catch (const Error& err) {
      if (err.code() == Errc::SequenceTooShort || err.code() == Errc::TooFewFlows) return;
      throw;
    }
    if (in.get(tk).empty()) return;
    slots[i] = FusedScore{e.id, score_video(ori, in.rgb, pooling), score_video(temporal, in.get(tk), pooling),
                          0.0, e.label};
  });

  std::vector<FusedScore> scores;
  std::size_t skipped = 0;
  for (auto& s : slots) {
    if (s) scores.push_back(std::move(*s));
    else ++skipped;
  }
  return assemble_report(tag, std::move(scores), fusion, pooling, skipped, std::string(input_kind_name(tk)));
}

/// Single-branch video-level evaluation (scores land in p_ori; fusion weights 1/0).
inline EvalReport evaluate_branch(const BranchModel& model, const Manifest& manifest, const Pipeline& pipeline,
                                  const std::string& tag = "test", double threshold = 0.5,
                                  Pooling pooling = Pooling::MeanProb) {
  std::vector<std::optional<FusedScore>> slots(manifest.entries.size());
  parallel_for(manifest.entries.size(), pipeline.workers, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    std::vector<EncodedInput> in;
    try {
      in = pipeline.encode(e, model.modality());
    } catch (const Error& err) {
      if (err.code() == Errc::SequenceTooShort || err.code() == Errc::TooFewFlows) return;
      throw;
    }
    if (in.empty()) return;
    const double p = score_video(model, in, pooling);
    slots[i] = FusedScore{e.id, p, p, p, e.label};
  });
  std::vector<FusedScore> scores;
  std::size_t skipped = 0;
  for (auto& s : slots) {
    if (s) scores.push_back(std::move(*s));
    else ++skipped;
  }
  return assemble_report(tag, std::move(scores), FusionConfig{1.0, 0.0, threshold}, pooling, skipped,
                         std::string(input_kind_name(model.modality())));
}

// ---------------------------------------------------------------------------
// Serialisation

namespace detail {

inline ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

inline double number_from(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["dataset_tag"] = r.dataset_tag;
  j["n_real"] = r.n_real;
  j["n_fake"] = r.n_fake;
  j["acc"] = r.acc;
  j["auc"] = detail::number_or_null(r.auc);
  j["f1"] = r.f1;
  j["per_branch"] = {{"ori", {{"acc", r.ori.acc}, {"auc", detail::number_or_null(r.ori.auc)}}},
                     {"res", {{"acc", r.res.acc}, {"auc", detail::number_or_null(r.res.auc)}}}};
  j["temporal_modality"] = r.temporal_modality;
  j["fusion"] = {{"alpha", r.fusion.alpha}, {"beta", r.fusion.beta}, {"threshold", r.fusion.threshold}};
  j["video_pooling"] = std::string(pooling_name(r.pooling));
  j["skipped_short"] = r.skipped_short;
  ordered_json scores = ordered_json::array();
  for (const auto& s : r.fused_scores)
    scores.push_back({{"id", s.id}, {"p_ori", s.p_ori}, {"p_res", s.p_res}, {"p", s.p},
                      {"label", std::string(label_name(s.label))}});
  j["fused_scores"] = std::move(scores);
  return j;
}

inline EvalReport report_from_json(const ordered_json& j) {
  try {
    EvalReport r;
    r.dataset_tag = j.at("dataset_tag").get<std::string>();
    r.n_real = j.at("n_real").get<std::size_t>();
    r.n_fake = j.at("n_fake").get<std::size_t>();
    r.acc = j.at("acc").get<double>();
    r.auc = detail::number_from(j.at("auc"));
    r.f1 = j.at("f1").get<double>();
    r.ori = {j.at("per_branch").at("ori").at("acc").get<double>(),
             detail::number_from(j.at("per_branch").at("ori").at("auc"))};
    r.res = {j.at("per_branch").at("res").at("acc").get<double>(),
             detail::number_from(j.at("per_branch").at("res").at("auc"))};
    r.temporal_modality = j.at("temporal_modality").get<std::string>();
    r.fusion = {j.at("fusion").at("alpha").get<double>(), j.at("fusion").at("beta").get<double>(),
                j.at("fusion").at("threshold").get<double>()};
    r.pooling = parse_pooling(j.at("video_pooling").get<std::string>());
    r.skipped_short = j.at("skipped_short").get<std::size_t>();
    for (const auto& s : j.at("fused_scores"))
      r.fused_scores.push_back({s.at("id").get<std::string>(), s.at("p_ori").get<double>(),
                                s.at("p_res").get<double>(), s.at("p").get<double>(),
                                parse_label(s.at("label").get<std::string>())});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed report: ") + e.what());
  }
}

/// `id  p_ori  p_res  p  label` with a header line.
inline std::string fused_scores_tsv(const EvalReport& r) {
  std::string out = "id\tp_ori\tp_res\tp\tlabel\n";
  char buf[128];
  for (const auto& s : r.fused_scores) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%.17g\t", s.p_ori, s.p_res, s.p);
    out += s.id + buf + std::string(label_name(s.label)) + "\n";
  }
  return out;
}

/// Percentage with `decimals` places; a perfect score prints as "100".
inline std::string format_percent(double x, int decimals) {
  if (!std::isfinite(x)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x * 100.0);
  if (std::string(buf) == std::string("100") + (decimals > 0 ? "." + std::string(decimals, '0') : "")) return "100";
  return buf;
}

/// Fused detection results, one row per dataset: ACC, AUC, F1 (one decimal).
inline std::string render_detection_table(std::span<const EvalReport> reports) {
  std::string out = "| Dataset | ACC | AUC | F1 |\n|---|---|---|---|\n";
  for (const auto& r : reports)
    out += "| " + r.dataset_tag + " | " + format_percent(r.acc, 1) + " | " + format_percent(r.auc, 1) + " | " +
           format_percent(r.f1, 1) + " |\n";
  return out;
}

/// Flow-map vs residual branch, one row per dataset (two decimals).
inline std::string render_representation_table(std::span<const EvalReport> flow_reports,
                                               std::span<const EvalReport> residual_reports) {
  if (flow_reports.size() != residual_reports.size())
    throw Error(Errc::InvalidConfig, "need one flow-map report per residual report");
  std::string out =
      "| Dataset | Flow ACC | Flow AUC | Residual ACC | Residual AUC |\n|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < flow_reports.size(); ++i) {
    const auto& f = flow_reports[i];
    const auto& r = residual_reports[i];
    out += "| " + r.dataset_tag + " | " + format_percent(f.acc, 2) + " | " + format_percent(f.auc, 2) + " | " +
           format_percent(r.acc, 2) + " | " + format_percent(r.auc, 2) + " |\n";
  }
  return out;
}

}  // namespace resflow
