#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "resflow/training.hpp"

using namespace resflow;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::IoError;
}

BackboneConfig tiny_config() {
  BackboneConfig c;
  c.input_size = 8;
  c.stages = {{4, 1, 2}};
  c.head_hidden = 4;
  c.seed = 2;
  return c;
}

// Fakes are brighter in channel 0; a linearly separable toy problem.
ExampleSet toy_set(std::uint64_t seed, int per_class) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  ExampleSet s;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    EncodedInput e{InputKind::FlowResidual, 8, std::vector<float>(3 * 64)};
    for (std::size_t k = 0; k < e.data.size(); ++k)
      e.data[k] = std::clamp((k < 64 ? (label ? 0.75f : 0.25f) : 0.5f) + noise(rng), 0.0f, 1.0f);
    s.add(std::move(e), label);
  }
  return s;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.lr_init = 3e-3;
  c.lr_floor = 3e-5;
  c.patience_epochs = 4;
  c.batch_size = 4;
  c.max_epochs = 20;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Schedule, DropsOnFifthStagnantEpoch) {
  PlateauSchedule s(1e-4, 0.1, 5, 1e-6);
  EXPECT_TRUE(s.observe(0.5).improved);
  for (int i = 0; i < 4; ++i) {
    const auto ev = s.observe(0.5);
    EXPECT_FALSE(ev.lr_dropped);
    EXPECT_EQ(s.lr(), 1e-4);
  }
  const auto ev = s.observe(0.5);
  EXPECT_TRUE(ev.lr_dropped);
  EXPECT_FALSE(ev.terminate);
  EXPECT_DOUBLE_EQ(s.lr(), 1e-5);
  EXPECT_EQ(s.epochs_since_improvement(), 0);
}

TEST(Schedule, ImprovementResetsCounter) {
  PlateauSchedule s(1e-4, 0.1, 5, 1e-6);
  s.observe(0.5);
  for (int i = 0; i < 3; ++i) s.observe(0.5);
  EXPECT_EQ(s.epochs_since_improvement(), 3);
  EXPECT_TRUE(s.observe(0.6).improved);
  EXPECT_EQ(s.epochs_since_improvement(), 0);
  for (int i = 0; i < 4; ++i) EXPECT_FALSE(s.observe(0.6).lr_dropped);
  EXPECT_EQ(s.lr(), 1e-4);
  EXPECT_TRUE(s.observe(0.55).lr_dropped);
}

TEST(Schedule, TerminatesOnlyBelowFloor) {
  PlateauSchedule s(1e-4, 0.1, 5, 1e-6);
  s.observe(0.9);
  int stagnant = 0;
  ScheduleEvent ev;
  do {
    ev = s.observe(0.9);
    ++stagnant;
    if (stagnant == 10) {
      // 1e-4 * 0.1 * 0.1 sits at the floor, which is not below it.
      EXPECT_TRUE(ev.lr_dropped);
      EXPECT_FALSE(ev.terminate);
    }
  } while (!ev.terminate && stagnant < 100);
  EXPECT_EQ(stagnant, 15);
  EXPECT_LT(s.lr(), 1e-6);
}

TEST(Schedule, InvariantsUnderRandomAccuracies) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> acc(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    PlateauSchedule s(1e-3, 0.5, 3, 1e-5);
    double prev_lr = s.lr();
    double best = -1;
    for (int e = 0; e < 60; ++e) {
      const double a = acc(rng) / 10.0;
      const auto ev = s.observe(a);
      ASSERT_EQ(ev.improved, a > best);
      best = std::max(best, a);
      ASSERT_LT(s.epochs_since_improvement(), s.patience());
      ASSERT_LE(s.lr(), prev_lr);
      ASSERT_TRUE(s.lr() == prev_lr || std::fabs(s.lr() - prev_lr * 0.5) < 1e-18);
      ASSERT_EQ(ev.lr_dropped, s.lr() != prev_lr);
      prev_lr = s.lr();
      if (ev.terminate) {
        ASSERT_LT(s.lr(), 1e-5);
        break;
      }
    }
  }
}

namespace {

ParamStore scalar_store(double v) {
  ParamStore ps;
  ps.add("theta", {1}).data[0] = v;
  return ps;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  const auto m = init_model(tiny_config(), InputKind::FlowResidual);
  TrainConfig cfg;
  auto st = make_train_state(m, cfg);
  auto params = m.params();
  adam_step(params, params.zeros_like(), st, cfg);
  EXPECT_EQ(params, m.params());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  TrainState st;
  st.schedule = PlateauSchedule(cfg);
  auto p = scalar_store(0.0);
  st.adam_m = p.zeros_like();
  st.adam_v = p.zeros_like();
  auto g = scalar_store(1.0);
  adam_step(p, g, st, cfg);
  EXPECT_NEAR(p[0].data[0], -1e-4, 1e-10);
}

TEST(Adam, MatchesScalarRecursionOnQuadratic) {
  TrainConfig cfg;
  cfg.lr_init = 0.1;
  TrainState st;
  st.schedule = PlateauSchedule(cfg);
  auto p = scalar_store(1.0);
  st.adam_m = p.zeros_like();
  st.adam_v = p.zeros_like();

  double theta = 1.0, m = 0.0, v = 0.0;
  double prev = std::fabs(p[0].data[0]);
  for (int t = 1; t <= 10; ++t) {
    const double g = 2.0 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    theta -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);

    auto grad = scalar_store(2.0 * p[0].data[0]);
    adam_step(p, grad, st, cfg);
    EXPECT_NEAR(p[0].data[0], theta, 1e-12) << "step " << t;
    EXPECT_LT(std::fabs(p[0].data[0]), prev);
    prev = std::fabs(p[0].data[0]);
  }
  EXPECT_EQ(st.adam_steps, 10);
}

TEST(Adam, LayoutMismatchRejected) {
  TrainConfig cfg;
  TrainState st;
  auto p = scalar_store(1.0);
  st.adam_m = p.zeros_like();
  st.adam_v = p.zeros_like();
  ParamStore g;
  g.add("theta", {2});
  EXPECT_EQ(code_of([&] { adam_step(p, g, st, cfg); }), Errc::ShapeMismatch);
}

TEST(TrainConfigCheck, Validation) {
  TrainConfig c;
  c.lr_factor = 1.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidConfig);
  c = {};
  c.lr_floor = 1e-3;
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidConfig);
  c = {};
  c.batch_size = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidConfig);
}

TEST(Trainer, LearnsSeparableToyProblem) {
  const auto train = toy_set(1, 32), val = toy_set(2, 6);
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  t.run(train, val);
  ASSERT_FALSE(t.log().epochs.empty());
  EXPECT_GE(t.state().schedule.best(), 0.9);
  EXPECT_LT(t.log().epochs.back().train_loss, t.log().epochs.front().train_loss);
}

TEST(Trainer, ReturnsEarliestBestValidationEpoch) {
  const auto train = toy_set(1, 32), val = toy_set(2, 6);
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  t.run(train, val);
  const auto& log = t.log().epochs;
  std::size_t best = 0;
  for (std::size_t i = 1; i < log.size(); ++i)
    if (log[i].val_acc > log[best].val_acc) best = i;
  EXPECT_EQ(t.state().best_epoch, log[best].epoch);
  const auto m = t.best_model();
  EXPECT_EQ(m.params(), t.state().best_params);
  EXPECT_EQ(example_accuracy(m, val), log[best].val_acc);
}

TEST(Trainer, SameSeedReproducesRunExactly) {
  const auto train = toy_set(1, 8), val = toy_set(2, 4);
  Trainer a(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  Trainer b(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  a.run(train, val);
  b.run(train, val);
  EXPECT_EQ(a.log().to_text(), b.log().to_text());
  EXPECT_EQ(a.model().params().checksum(), b.model().params().checksum());
  auto other = quick_config();
  other.seed = 99;
  Trainer c(init_model(tiny_config(), InputKind::FlowResidual), other);
  c.run(train, val);
  EXPECT_NE(a.log().to_text(), c.log().to_text());
}

TEST(Trainer, EpochBudgetSplitsEqualOneRun) {
  const auto train = toy_set(1, 8), val = toy_set(2, 4);
  Trainer a(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  a.run(train, val);
  Trainer b(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  b.run(train, val, 3);
  EXPECT_EQ(b.log().epochs.size(), 3u);
  b.run(train, val);
  EXPECT_EQ(a.log(), b.log());
  EXPECT_EQ(a.model().params(), b.model().params());
}

TEST(Trainer, MaxEpochsBounds) {
  const auto train = toy_set(1, 4), val = toy_set(2, 2);
  auto cfg = quick_config();
  cfg.max_epochs = 3;
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), cfg);
  t.run(train, val);
  EXPECT_EQ(t.log().epochs.size(), 3u);
  EXPECT_TRUE(t.finished());
  EXPECT_FALSE(t.run_epoch(train, val));
}

TEST(Trainer, PlateauTerminationWithinBound) {
  // Accuracy over n inputs takes n+1 values, so at most n+1 improving epochs;
  // reaching termination needs 3 drops of `patience` stagnant epochs each.
  const auto train = toy_set(1, 4), val = toy_set(2, 2);
  TrainConfig cfg = quick_config();
  cfg.lr_init = 1e-4;
  cfg.lr_floor = 1e-6;
  cfg.patience_epochs = 1;
  cfg.max_epochs = 1000;
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), cfg);
  t.run(train, val);
  EXPECT_TRUE(t.finished());
  EXPECT_LE(t.log().epochs.size(), val.size() + 1 + 3 * 1);
  EXPECT_LT(t.state().lr(), 1e-6);
  // The logged rate is the one used during each epoch.
  EXPECT_EQ(t.log().epochs.front().lr, 1e-4);
}

TEST(Trainer, EmptySplitsRejected) {
  const auto s = toy_set(1, 2);
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  EXPECT_EQ(code_of([&] { t.run_epoch(ExampleSet{}, s); }), Errc::EmptySplit);
  EXPECT_EQ(code_of([&] { t.run_epoch(s, ExampleSet{}); }), Errc::EmptySplit);
}

TEST(Trainer, WrongModalityRejected) {
  auto s = toy_set(1, 2);
  for (auto& in : s.inputs) in.kind = InputKind::RgbFrame;
  Trainer t(init_model(tiny_config(), InputKind::FlowResidual), quick_config());
  EXPECT_EQ(code_of([&] { t.run_epoch(s, s); }), Errc::ModalityMismatch);
}

TEST(TrainLogText, RoundTrip) {
  TrainLog log;
  log.epochs.push_back({1, 0.6931471805599453, 0.5, 1e-4});
  log.epochs.push_back({2, 0.1 + 0.2, 2.0 / 3.0, 1e-5});
  EXPECT_EQ(TrainLog::parse(log.to_text()), log);
  EXPECT_EQ(code_of([] { TrainLog::parse("1\tabc\n"); }), Errc::ParseError);
}
