#pragma once

// Score fusion and binary classification metrics. Fake is the positive class
// and a score s is called fake when s >= threshold.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/frames.hpp"

namespace resflow {

inline constexpr double kFusionWeightTolerance = 1e-12;

struct FusionConfig {
  double alpha = 0.5;  // weight of the appearance (RGB) branch
  double beta = 0.5;   // weight of the residual branch
  double threshold = 0.5;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0))
      throw Error(Errc::InvalidWeights, "alpha and beta must lie in [0,1]");
    if (std::fabs(alpha + beta - 1.0) > kFusionWeightTolerance)
      throw Error(Errc::InvalidWeights, "alpha + beta must equal 1, got " + std::to_string(alpha + beta));
    if (!(threshold > 0.0 && threshold < 1.0))
      throw Error(Errc::InvalidConfig, "threshold must lie in (0,1)");
  }

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// P = alpha * P_ori + beta * P_res.
inline double fuse(double p_ori, double p_res, const FusionConfig& cfg) {
  cfg.validate();
  return cfg.alpha * p_ori + cfg.beta * p_res;
}

struct ScoredLabel {
  double score = 0.0;
  Label label = Label::Real;
};

inline bool predicted_fake(double score, double threshold) noexcept { return score >= threshold; }

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion(std::span<const ScoredLabel> scores, double threshold) {
  Confusion c;
  for (const auto& s : scores) {
    const bool pf = predicted_fake(s.score, threshold);
    const bool af = s.label == Label::Fake;
    if (pf && af) ++c.tp;
    else if (pf) ++c.fp;
    else if (af) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double accuracy(std::span<const ScoredLabel> scores, double threshold = 0.5) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "accuracy of an empty score set");
  const auto c = confusion(scores, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
}

/// F1 with Fake as positive; 0 when precision + recall = 0.
inline double f1(std::span<const ScoredLabel> scores, double threshold = 0.5) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "F1 of an empty score set");
  const auto c = confusion(scores, threshold);
  if (c.tp == 0) return 0.0;
  // 2PR / (P + R) with a single rounding.
  return static_cast<double>(2 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

/// Mann-Whitney AUC: probability that a fake outscores a real, ties count 1/2.
/// Rank-based, O(n log n).
inline double auc(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::size_t n_fake = 0, n_real = 0;
  for (const auto& s : sorted) (s.label == Label::Fake ? n_fake : n_real)++;
  if (n_fake == 0 || n_real == 0) throw Error(Errc::SingleClass, "AUC needs both real and fake samples");
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  // Count (real below fake) pairs, with 0.5 for ties, group by equal score.
  double wins = 0.0;
  std::size_t reals_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t g_real = 0, g_fake = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == Label::Fake ? g_fake : g_real)++;
      ++j;
    }
    wins += static_cast<double>(g_fake) * (static_cast<double>(reals_below) + 0.5 * static_cast<double>(g_real));
    reals_below += g_real;
    i = j;
  }
  return wins / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

}  // namespace resflow
