#pragma once

// Per-branch training: shuffled mini-batch Adam, validation accuracy after
// every epoch, and a reduce-on-plateau schedule that ends the run once the
// learning rate falls below its floor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/model.hpp"

namespace resflow {

struct TrainConfig {
  double lr_init = 1e-4;
  double lr_factor = 0.1;
  int patience_epochs = 5;
  double lr_floor = 1e-6;
  int batch_size = 32;
  int max_epochs = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lr_init > 0.0)) throw Error(Errc::InvalidConfig, "lr_init must be positive");
    if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw Error(Errc::InvalidConfig, "lr_factor must be in (0,1)");
    if (!(lr_floor < lr_init)) throw Error(Errc::InvalidConfig, "lr_floor must be below lr_init");
    if (patience_epochs < 1) throw Error(Errc::InvalidConfig, "patience_epochs must be >= 1");
    if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
    if (max_epochs < 1) throw Error(Errc::InvalidConfig, "max_epochs must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
      throw Error(Errc::InvalidConfig, "Adam betas must be in [0,1)");
    if (!(adam_eps > 0.0)) throw Error(Errc::InvalidConfig, "adam_eps must be positive");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Learning rates within this relative distance of the floor count as "at the
/// floor", so 1e-4 * 0.1 * 0.1 is not mistaken for something below 1e-6.
inline constexpr double kLrFloorTolerance = 1e-9;

struct ScheduleEvent {
  bool improved = false;
  bool lr_dropped = false;
  bool terminate = false;
};

/// Reduce-on-plateau over validation accuracy. A strict improvement resets the
/// stagnation counter; reaching `patience` stagnant epochs multiplies the rate
/// by `factor` and resets the counter; a rate below the floor ends training.
class PlateauSchedule {
 public:
  PlateauSchedule() = default;
  PlateauSchedule(double lr, double factor, int patience, double floor)
      : lr_(lr), factor_(factor), patience_(patience), floor_(floor) {}
  explicit PlateauSchedule(const TrainConfig& cfg)
      : PlateauSchedule(cfg.lr_init, cfg.lr_factor, cfg.patience_epochs, cfg.lr_floor) {}

  ScheduleEvent observe(double val_acc) {
    ScheduleEvent ev;
    if (val_acc > best_) {
      best_ = val_acc;
      since_ = 0;
      ev.improved = true;
      return ev;
    }
    if (++since_ >= patience_) {
      lr_ *= factor_;
      since_ = 0;
      ev.lr_dropped = true;
      ev.terminate = lr_ < floor_ * (1.0 - kLrFloorTolerance);
    }
    return ev;
  }

  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }
  int epochs_since_improvement() const noexcept { return since_; }
  int patience() const noexcept { return patience_; }

  void restore(double lr, double best, int since) {
    lr_ = lr;
    best_ = best;
    since_ = since;
  }

 private:
  double lr_ = 1e-4;
  double factor_ = 0.1;
  int patience_ = 5;
  double floor_ = 1e-6;
  double best_ = -std::numeric_limits<double>::infinity();
  int since_ = 0;
};

struct TrainState {
  int epoch = 0;  // completed epochs
  PlateauSchedule schedule;
  ParamStore adam_m;
  ParamStore adam_v;
  std::int64_t adam_steps = 0;
  std::mt19937_64 rng;
  bool finished = false;
  int best_epoch = 0;
  ParamStore best_params;

  double lr() const noexcept { return schedule.lr(); }

  std::string rng_state() const {
    std::ostringstream os;
    os << rng;
    return os.str();
  }
  void set_rng_state(const std::string& s) {
    std::istringstream is(s);
    is >> rng;
    if (!is) throw Error(Errc::CorruptCheckpoint, "unreadable rng state");
  }
};

inline TrainState make_train_state(const BranchModel& model, const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.schedule = PlateauSchedule(cfg);
  st.adam_m = model.params().zeros_like();
  st.adam_v = model.params().zeros_like();
  st.rng.seed(cfg.seed);
  st.best_params = model.params();
  return st;
}

/// One bias-corrected Adam update at the state's current learning rate.
inline void adam_step(ParamStore& params, const ParamStore& grads, TrainState& st, const TrainConfig& cfg) {
  if (!params.same_layout(grads) || !params.same_layout(st.adam_m) || !params.same_layout(st.adam_v))
    throw Error(Errc::ShapeMismatch, "params, grads and Adam moments disagree in layout");
  ++st.adam_steps;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.adam_steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.adam_steps));
  const double lr = st.lr();
  for (std::size_t t = 0; t < params.count(); ++t) {
    auto& p = params[t].data;
    const auto& g = grads[t].data;
    auto& m = st.adam_m[t].data;
    auto& v = st.adam_v[t].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;  // rate used during the epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// `epoch <TAB> train_loss <TAB> val_acc <TAB> lr`, one line per epoch.
  std::string to_text() const {
    std::string out;
    char buf[160];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\n", e.epoch, e.train_loss, e.val_acc, e.lr);
      out += buf;
    }
    return out;
  }

  static TrainLog parse(const std::string& text) {
    TrainLog log;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line.front() == '#') continue;
      std::istringstream ls(line);
      EpochRecord r;
      if (!(ls >> r.epoch >> r.train_loss >> r.val_acc >> r.lr))
        throw Error(Errc::ParseError, "bad train log line '" + line + "'");
      log.epochs.push_back(r);
    }
    return log;
  }

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

/// Encoded training examples with 0/1 labels.
struct ExampleSet {
  std::vector<EncodedInput> inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return inputs.size(); }
  void add(EncodedInput in, int label) {
    inputs.push_back(std::move(in));
    labels.push_back(label);
  }
};

/// Fraction of inputs whose thresholded prediction (prob >= threshold means
/// fake) matches the label.
inline double example_accuracy(const BranchModel& model, const ExampleSet& set, double threshold = 0.5) {
  if (set.size() == 0) throw Error(Errc::EmptySplit, "validation set is empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int pred = model.forward(set.inputs[i]).prob >= threshold ? 1 : 0;
    if (pred == set.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

/// Drives epochs over pre-encoded examples; resumable from a TrainState.
class Trainer {
 public:
  Trainer(BranchModel model, TrainConfig cfg)
      : model_(std::move(model)), cfg_(cfg), state_(make_train_state(model_, cfg_)) {}
  Trainer(BranchModel model, TrainConfig cfg, TrainState state, TrainLog log)
      : model_(std::move(model)), cfg_(cfg), state_(std::move(state)), log_(std::move(log)) {
    cfg_.validate();
  }

  /// Runs one epoch; returns false once training has finished.
  bool run_epoch(const ExampleSet& train, const ExampleSet& val) {
    if (state_.finished) return false;
    if (train.size() == 0) throw Error(Errc::EmptySplit, "training set is empty");
    if (val.size() == 0) throw Error(Errc::EmptySplit, "validation set is empty");
    for (const auto* set : {&train, &val})
      for (const auto& in : set->inputs) model_.check_input(in);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), state_.rng);

    const double lr_used = state_.lr();
    double loss_sum = 0.0;
    std::vector<LabeledInput> batch;
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i)
        batch.push_back({&train.inputs[order[i]], train.labels[order[i]]});
      auto lg = loss_and_grad(model_, batch);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      adam_step(model_.params(), lg.grads, state_, cfg_);
    }

    const double val_acc = example_accuracy(model_, val);
    ++state_.epoch;
    log_.epochs.push_back({state_.epoch, loss_sum / static_cast<double>(train.size()), val_acc, lr_used});

    const auto ev = state_.schedule.observe(val_acc);
    if (ev.improved) {
      state_.best_params = model_.params();
      state_.best_epoch = state_.epoch;
    }
    if (ev.terminate || state_.epoch >= cfg_.max_epochs) state_.finished = true;
    return !state_.finished;
  }

  /// Runs until finished, or for at most `epoch_budget` more epochs when >= 0.
  void run(const ExampleSet& train, const ExampleSet& val, int epoch_budget = -1) {
    for (int n = 0; epoch_budget < 0 || n < epoch_budget; ++n)
      if (!run_epoch(train, val)) break;
  }

  /// Model holding the parameters of the best validation epoch (earliest on ties).
  BranchModel best_model() const {
    BranchModel m = model_;
    m.params() = state_.best_params;
    return m;
  }

  const BranchModel& model() const noexcept { return model_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  const TrainState& state() const noexcept { return state_; }
  const TrainLog& log() const noexcept { return log_; }
  bool finished() const noexcept { return state_.finished; }

 private:
  BranchModel model_;
  TrainConfig cfg_;
  TrainState state_;
  TrainLog log_;
};

}  // namespace resflow
