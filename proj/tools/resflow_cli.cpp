// resflow command-line tool: synth, preprocess, train, eval, report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
// Settings resolve as CLI flag > --config JSON file > built-in default, and
// every command prints the resolved configuration before it starts.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "resflow/resflow.hpp"

namespace fs = std::filesystem;
using namespace resflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr const char* kCacheEnv = "RESFLOW_CACHE";

/// Raised while resolving arguments; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::vector<std::string> manifests;
  std::string out;
  std::string cache_dir = "resflow_cache";
  std::string flow_dir;
  std::size_t max_frames = 32;
  unsigned workers = default_workers();
  std::string pooling = "mean_prob";
  std::string branch;
  bool force = false;
  bool per_source = false;
  std::vector<std::string> tags;
  std::string ori_checkpoint, res_checkpoint, model_checkpoint;
  std::vector<std::string> detection_reports, flow_reports, residual_reports;
  FlowEstimatorConfig flow;
  BackboneConfig backbone;
  TrainConfig train;
  FusionConfig fusion;
  NormalizationSpec normalization;
  SyntheticConfig synth;
};

json to_json_value(const RunConfig& c) {
  json j{{"command", c.command}};
  auto put = [&](const char* k, const auto& v) { j[k] = v; };
  if (c.command == "synth") {
    put("out", c.out);
    put("synth", c.synth);
    return j;
  }
  if (c.command == "report") {
    put("detection_reports", c.detection_reports);
    put("flow_reports", c.flow_reports);
    put("residual_reports", c.residual_reports);
    put("out", c.out);
    return j;
  }
  put("manifests", c.manifests);
  put("cache_dir", c.cache_dir);
  put("flow_dir", c.flow_dir);
  put("max_frames", c.max_frames);
  put("workers", c.workers);
  put("flow", c.flow);
  if (c.command == "preprocess") return j;
  put("out", c.out);
  put("normalization", c.normalization);
  put("pooling", c.pooling);
  if (c.command == "train") {
    put("branch", c.branch);
    put("force", c.force);
    put("backbone", c.backbone);
    put("train", c.train);
  } else {
    put("ori_checkpoint", c.ori_checkpoint);
    put("res_checkpoint", c.res_checkpoint);
    put("model_checkpoint", c.model_checkpoint);
    put("tags", c.tags);
    put("per_source", c.per_source);
    put("fusion", c.fusion);
  }
  return j;
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config key '") + key + "': " + e.what());
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
}

void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  static const std::vector<std::string> known{
      "manifests", "manifest", "out",     "cache_dir", "flow_dir",      "max_frames", "workers",
      "pooling",   "seed",     "flow",    "backbone",  "train",         "fusion",     "normalization",
      "synth",     "branch",   "tags",    "per_source", "ori_checkpoint", "res_checkpoint"};
  for (const auto& [k, _] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw UsageError("unknown key '" + k + "' in config file " + path);
  if (j.contains("manifest")) c.manifests = {j["manifest"].get<std::string>()};
  take(j, "manifests", c.manifests);
  take(j, "out", c.out);
  take(j, "cache_dir", c.cache_dir);
  take(j, "flow_dir", c.flow_dir);
  take(j, "max_frames", c.max_frames);
  take(j, "workers", c.workers);
  take(j, "pooling", c.pooling);
  take(j, "flow", c.flow);
  take(j, "backbone", c.backbone);
  take(j, "train", c.train);
  take(j, "fusion", c.fusion);
  take(j, "normalization", c.normalization);
  take(j, "synth", c.synth);
  take(j, "branch", c.branch);
  take(j, "tags", c.tags);
  take(j, "per_source", c.per_source);
  take(j, "ori_checkpoint", c.ori_checkpoint);
  take(j, "res_checkpoint", c.res_checkpoint);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    take(j, "seed", s);
    c.synth.seed = c.backbone.seed = c.train.seed = s;
  }
}

/// "16:2:2,32:2:2" -> stages.
std::vector<StageSpec> parse_stages(const std::string& s) {
  std::vector<StageSpec> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    StageSpec st;
    char a = 0, b = 0;
    std::istringstream is(item);
    if (!(is >> st.channels >> a >> st.blocks >> b >> st.stride) || a != ':' || b != ':' || !is.eof())
      throw UsageError("bad stage '" + item + "', expected channels:blocks:stride");
    out.push_back(st);
  }
  if (out.empty()) throw UsageError("--stages needs at least one stage");
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
}

void echo_config(const RunConfig& c) { std::cout << "resolved config:\n" << to_json_value(c).dump(2) << "\n"; }

void save_config(const RunConfig& c, const fs::path& p) { write_text(p, to_json_value(c).dump(2) + "\n"); }

InputKind branch_kind(const std::string& b) {
  if (b == "ori") return InputKind::RgbFrame;
  if (b == "res") return InputKind::FlowResidual;
  if (b == "flow") return InputKind::FlowMap;
  throw UsageError("--branch must be ori, res or flow");
}

std::shared_ptr<const FlowSource> make_flow_source(const RunConfig& c) {
  if (!c.flow_dir.empty()) return std::make_shared<PrecomputedFlowSource>(c.flow_dir);
  return std::make_shared<VariationalFlowSource>(c.flow);
}

/// Pipeline reading through the cache when the cache root exists.
Pipeline make_pipeline(const RunConfig& c, int input_size, const NormalizationSpec& norm) {
  Pipeline p;
  p.input_size = input_size;
  p.norm = norm;
  p.max_frames = c.max_frames;
  p.flow_source = make_flow_source(c);
  p.workers = c.workers;
  if (fs::is_directory(c.cache_dir)) p.cache = std::make_shared<FlowCache>(c.cache_dir, p.flow_key());
  return p;
}

Manifest load_all(const std::vector<std::string>& paths) {
  Manifest all;
  for (const auto& p : paths) {
    auto m = load_manifest(p);
    all.seed = m.seed;
    for (auto& e : m.entries) all.entries.push_back(std::move(e));
  }
  validate_manifest_ids(all);
  return all;
}

// ---------------------------------------------------------------------------

int run_synth(const RunConfig& c) {
  const auto m = make_synthetic_corpus(c.synth, c.out);
  save_config(c, fs::path(c.out) / "run_config.json");
  std::cout << "wrote " << m.entries.size() << " videos\n" << (fs::path(c.out) / "manifest.tsv").string() << "\n";
  return kExitOk;
}

int run_preprocess(const RunConfig& c) {
  const auto m = load_all(c.manifests);
  Pipeline p = make_pipeline(c, 64, c.normalization);
  const FlowCache cache(c.cache_dir, p.flow_key());
  std::error_code ec;
  fs::create_directories(c.cache_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create cache root " + c.cache_dir + ": " + ec.message());
  save_config(c, fs::path(c.cache_dir) / "run_config.json");

  std::atomic<std::size_t> computed{0}, reused{0}, skipped{0};
  std::vector<std::string> failures(m.entries.size());
  parallel_for(m.entries.size(), c.workers, [&](std::size_t i) {
    const auto& e = m.entries[i];
    try {
      const auto seq = p.load(e);
      if (seq.size() < 2) {
        ++skipped;
        return;
      }
      if (cache.valid(e.id, seq.size(), seq.width(), seq.height())) {
        ++reused;
        return;
      }
      Pipeline fresh = p;
      fresh.cache.reset();
      const auto [flows, res] = fresh.motion(seq, false);
      cache.write(e.id, flows, res);
      ++computed;
    } catch (const std::exception& ex) {
      failures[i] = e.id + ": " + ex.what();
    }
  });

  std::size_t failed = 0;
  for (const auto& f : failures)
    if (!f.empty()) {
      std::cerr << "error: " << f << "\n";
      ++failed;
    }
  std::cout << "preprocess: computed " << computed << ", reused " << reused << ", skipped " << skipped
            << ", failed " << failed << "\n";
  return failed ? kExitFailure : kExitOk;
}

int run_train(const RunConfig& c) {
  const InputKind kind = branch_kind(c.branch);
  const fs::path out(c.out);
  const fs::path ckpt = out / (c.branch + ".ckpt");
  if (fs::exists(ckpt) && !c.force) {
    std::cerr << "error: " << ckpt.string() << " exists; pass --force to overwrite\n";
    return kExitFailure;
  }
  const auto m = load_all(c.manifests);
  const auto train = m.subset(Split::Train), val = m.subset(Split::Val);
  const Pipeline p = make_pipeline(c, c.backbone.input_size, c.normalization);
  std::cout << "training " << c.branch << " on " << train.entries.size() << " videos, validating on "
            << val.entries.size() << "\n";

  auto r = train_branch(init_model(c.backbone, kind, c.normalization), train, val, c.train, p);

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out.string() + ": " + ec.message());
  save_checkpoint(r.last, ckpt, &c.train, &r.state, &r.log);
  write_text(out / (c.branch + "_trainlog.tsv"), "# epoch\ttrain_loss\tval_acc\tlr\n" + r.log.to_text());
  save_config(c, out / (c.branch + "_run_config.json"));

  const auto& last = r.log.epochs.back();
  std::cout << "epochs " << r.log.epochs.size() << ", final val_acc " << last.val_acc << ", best val_acc "
            << r.state.schedule.best() << " at epoch " << r.state.best_epoch << "\n"
            << ckpt.string() << "\n";
  return kExitOk;
}

std::string default_tag(const std::string& manifest) {
  const auto parent = fs::absolute(manifest).parent_path().filename().string();
  return parent.empty() ? "test" : parent;
}

std::string file_stem_for(const std::string& tag) {
  std::string s = tag;
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  return s;
}

void emit_report(const EvalReport& r, const fs::path& out) {
  const auto stem = file_stem_for(r.dataset_tag);
  write_text(out / (stem + "_report.json"), report_to_json(r).dump(2) + "\n");
  write_text(out / (stem + "_fused_scores.tsv"), fused_scores_tsv(r));
  std::cout << r.dataset_tag << ": videos " << r.fused_scores.size() << " (skipped " << r.skipped_short
            << ")  ACC " << format_percent(r.acc, 2) << "  AUC " << format_percent(r.auc, 2) << "  F1 "
            << format_percent(r.f1, 2) << "\n";
}

int run_eval(const RunConfig& c) {
  const bool single = !c.model_checkpoint.empty();
  const Pooling pooling = parse_pooling(c.pooling);
  std::optional<BranchModel> ori, temporal, model;
  if (single) {
    model = inference_model(load_checkpoint(c.model_checkpoint));
  } else {
    ori = inference_model(load_checkpoint(c.ori_checkpoint));
    temporal = inference_model(load_checkpoint(c.res_checkpoint));
    if (ori->config().input_size != temporal->config().input_size)
      throw Error(Errc::ShapeMismatch, "branch checkpoints disagree on input size");
  }
  const BranchModel& ref = single ? *model : *temporal;
  const Pipeline p = make_pipeline(c, ref.config().input_size, ref.normalization());

  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out.string() + ": " + ec.message());
  save_config(c, out / "eval_run_config.json");

  auto evaluate = [&](const Manifest& m, const std::string& tag) {
    return single ? evaluate_branch(*model, m, p, tag, c.fusion.threshold, pooling)
                  : evaluate_dataset(*ori, *temporal, m, c.fusion, p, tag, pooling);
  };

  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < c.manifests.size(); ++i) {
    const auto test = load_manifest(c.manifests[i]).subset(Split::Test);
    if (test.entries.empty()) throw Error(Errc::EmptySplit, c.manifests[i] + " has no test entries");
    const std::string tag = i < c.tags.size() ? c.tags[i] : default_tag(c.manifests[i]);
    reports.push_back(evaluate(test, tag));
    emit_report(reports.back(), out);

    if (c.per_source) {
      std::map<std::string, Manifest> by_source;
      for (const auto& e : test.entries)
        if (e.label == Label::Fake) by_source[e.source_tag].entries.push_back(e);
      for (auto& [source, sub] : by_source) {
        for (const auto& e : test.entries)
          if (e.label == Label::Real) sub.entries.push_back(e);
        reports.push_back(evaluate(sub, tag + "/" + source));
        emit_report(reports.back(), out);
      }
    }
  }
  std::cout << "\n" << render_detection_table(reports);
  return kExitOk;
}

std::vector<EvalReport> read_reports(const std::vector<std::string>& paths) {
  std::vector<EvalReport> out;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw Error(Errc::MissingFile, "cannot open report " + p);
    try {
      out.push_back(report_from_json(ordered_json::parse(in)));
    } catch (const ordered_json::exception& e) {
      throw Error(Errc::ParseError, p + ": " + e.what());
    }
  }
  return out;
}

int run_report(const RunConfig& c) {
  std::string text;
  if (!c.detection_reports.empty()) {
    text += render_detection_table(read_reports(c.detection_reports));
  }
  if (!c.flow_reports.empty() || !c.residual_reports.empty()) {
    if (!text.empty()) text += "\n";
    text += render_representation_table(read_reports(c.flow_reports), read_reports(c.residual_reports));
  }
  std::cout << text;
  if (!c.out.empty()) write_text(c.out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect generated video from RGB frames and optical-flow residuals"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with run settings")->check(CLI::ExistingFile);

  // Flag storage; applied over the config file only when given.
  std::vector<std::string> manifests, tags, detection, flows, residuals;
  std::string out, cache, flow_dir, branch, pooling, ori, res, model_ckpt, stages;
  std::size_t max_frames = 0;
  unsigned workers = 0;
  int real = 0, fake = 0, size = 0, frames = 0, input_size = 0, head_hidden = 0, epochs = 0, batch = 0;
  int patience = 0, iterations = 0;
  std::uint64_t seed = 0;
  double jitter = 0, velocity = 0, noise = 0, val_fraction = 0, test_fraction = 0, lr = 0, lr_floor = 0;
  double alpha = 0, beta = 0, threshold = 0, clip = 0, smoothness = 0;
  bool force = false, per_source = false;

  auto* synth = app.add_subcommand("synth", "Render a synthetic real/jitter corpus");
  synth->add_option("--out", out, "Output directory");
  synth->add_option("--real", real, "Real videos");
  synth->add_option("--fake", fake, "Fake videos");
  synth->add_option("--seed", seed, "Corpus seed");
  synth->add_option("--size", size, "Frame width and height");
  synth->add_option("--frames", frames, "Frames per video");
  synth->add_option("--jitter", jitter, "Per-frame velocity jitter of fakes (px)");
  synth->add_option("--velocity-std", velocity, "Per-frame velocity spread (px)");
  synth->add_option("--noise", noise, "Sensor noise std (0-255 scale)");
  synth->add_option("--val-fraction", val_fraction);
  synth->add_option("--test-fraction", test_fraction);

  auto* pre = app.add_subcommand("preprocess", "Compute or import flows and residuals into the cache");
  auto* train = app.add_subcommand("train", "Train one branch");
  auto* eval = app.add_subcommand("eval", "Score test videos and write reports");
  auto* report = app.add_subcommand("report", "Render tables from report files");

  for (auto* sc : {pre, train, eval}) {
    sc->add_option("--manifest", manifests, "Manifest file (repeatable)");
    sc->add_option("--cache", cache, std::string("Cache root (env ") + kCacheEnv + ")");
    sc->add_option("--flow-dir", flow_dir, "Import flow_NNNN.flo files from <dir>/<id>/ instead of solving");
    sc->add_option("--max-frames", max_frames, "Frames sampled per video");
    sc->add_option("--workers", workers, "Worker threads");
    sc->add_option("--iterations", iterations, "Flow solver iterations per level");
    sc->add_option("--smoothness", smoothness, "Flow smoothness weight");
  }
  for (auto* sc : {train, eval}) {
    sc->add_option("--out", out, "Output directory");
    sc->add_option("--pooling", pooling, "Video pooling: mean_prob, mean_logit or max");
  }
  train->add_option("--branch", branch, "ori, res or flow");
  train->add_flag("--force", force, "Overwrite an existing checkpoint");
  train->add_option("--seed", seed, "Initialisation and shuffling seed");
  train->add_option("--epochs", epochs, "Maximum epochs");
  train->add_option("--batch", batch, "Batch size");
  train->add_option("--lr", lr, "Initial learning rate");
  train->add_option("--lr-floor", lr_floor, "Stop once the rate falls below this");
  train->add_option("--patience", patience, "Stagnant epochs before a rate drop");
  train->add_option("--input-size", input_size, "Encoded input size");
  train->add_option("--stages", stages, "Backbone stages as channels:blocks:stride,...");
  train->add_option("--head-hidden", head_hidden, "Hidden units in the head (0 = linear)");
  train->add_option("--clip", clip, "Flow/residual normalisation clip (px)");

  eval->add_option("--ori", ori, "Appearance branch checkpoint");
  eval->add_option("--res", res, "Temporal branch checkpoint (residual or flow)");
  eval->add_option("--model", model_ckpt, "Score with this single checkpoint instead of fusing");
  eval->add_option("--alpha", alpha, "Appearance weight");
  eval->add_option("--beta", beta, "Temporal weight");
  eval->add_option("--threshold", threshold, "Fake when the score reaches this");
  eval->add_option("--tag", tags, "Dataset tag per manifest");
  eval->add_flag("--per-source", per_source, "Also report each fake source against all reals");

  report->add_option("--detection", detection, "Fused report JSON files");
  report->add_option("--flow", flows, "Flow-map branch report JSON files");
  report->add_option("--residual", residuals, "Residual branch report JSON files");
  report->add_option("--out", out, "Also write the tables here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  RunConfig c;
  CLI::App* sc = app.get_subcommands().front();
  c.command = sc->get_name();
  auto given = [&](const char* name) {
    auto* o = sc->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };

  try {
    if (!config_path.empty()) apply_config_file(config_path, c);
    if (const char* env = std::getenv(kCacheEnv); env && *env) c.cache_dir = env;

    if (given("--manifest")) c.manifests = manifests;
    if (given("--out")) c.out = out;
    if (given("--cache")) c.cache_dir = cache;
    if (given("--flow-dir")) c.flow_dir = flow_dir;
    if (given("--max-frames")) c.max_frames = max_frames;
    if (given("--workers")) c.workers = workers;
    if (given("--iterations")) c.flow.iterations = iterations;
    if (given("--smoothness")) c.flow.smoothness_weight = smoothness;
    if (given("--pooling")) c.pooling = pooling;
    if (given("--seed")) c.synth.seed = c.backbone.seed = c.train.seed = seed;
    if (given("--real")) c.synth.real = real;
    if (given("--fake")) c.synth.fake = fake;
    if (given("--size")) c.synth.size = size;
    if (given("--frames")) c.synth.frames = frames;
    if (given("--jitter")) c.synth.jitter_std = jitter;
    if (given("--velocity-std")) c.synth.velocity_std = velocity;
    if (given("--noise")) c.synth.noise_std = noise;
    if (given("--val-fraction")) c.synth.val_fraction = val_fraction;
    if (given("--test-fraction")) c.synth.test_fraction = test_fraction;
    if (given("--branch")) c.branch = branch;
    if (given("--force")) c.force = force;
    if (given("--epochs")) c.train.max_epochs = epochs;
    if (given("--batch")) c.train.batch_size = batch;
    if (given("--lr")) c.train.lr_init = lr;
    if (given("--lr-floor")) c.train.lr_floor = lr_floor;
    if (given("--patience")) c.train.patience_epochs = patience;
    if (given("--input-size")) c.backbone.input_size = input_size;
    if (given("--stages")) c.backbone.stages = parse_stages(stages);
    if (given("--head-hidden")) c.backbone.head_hidden = head_hidden;
    if (given("--clip")) c.normalization.clip = clip;
    if (given("--ori")) c.ori_checkpoint = ori;
    if (given("--res")) c.res_checkpoint = res;
    if (given("--model")) c.model_checkpoint = model_ckpt;
    if (given("--alpha")) c.fusion.alpha = alpha;
    if (given("--beta")) c.fusion.beta = beta;
    if (given("--threshold")) c.fusion.threshold = threshold;
    if (given("--tag")) c.tags = tags;
    if (given("--per-source")) c.per_source = per_source;
    if (given("--detection")) c.detection_reports = detection;
    if (given("--flow")) c.flow_reports = flows;
    if (given("--residual")) c.residual_reports = residuals;

    // Command-specific requirements.
    const auto& cmd = c.command;
    if ((cmd == "synth" || cmd == "train" || cmd == "eval") && c.out.empty()) throw UsageError("--out is required");
    if ((cmd == "preprocess" || cmd == "train" || cmd == "eval") && c.manifests.empty())
      throw UsageError("--manifest is required");
    if (cmd == "synth") c.synth.validate();
    if (cmd == "preprocess" || cmd == "train" || cmd == "eval") {
      c.flow.validate();
      c.normalization.validate();
      if (c.workers < 1) throw UsageError("--workers must be >= 1");
    }
    if (cmd == "train") {
      branch_kind(c.branch);
      c.backbone.validate();
      c.train.validate();
      parse_pooling(c.pooling);
    }
    if (cmd == "eval") {
      c.fusion.validate();
      parse_pooling(c.pooling);
      const bool single = !c.model_checkpoint.empty();
      if (single && (!c.ori_checkpoint.empty() || !c.res_checkpoint.empty()))
        throw UsageError("--model cannot be combined with --ori/--res");
      if (!single && (c.ori_checkpoint.empty() || c.res_checkpoint.empty()))
        throw UsageError("eval needs --ori and --res, or --model");
      if (c.tags.size() > c.manifests.size()) throw UsageError("more --tag values than manifests");
    }
    if (cmd == "report" && c.detection_reports.empty() && c.flow_reports.empty() && c.residual_reports.empty())
      throw UsageError("report needs --detection, or --flow with --residual");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << sc->help();
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  echo_config(c);
  try {
    if (c.command == "synth") return run_synth(c);
    if (c.command == "preprocess") return run_preprocess(c);
    if (c.command == "train") return run_train(c);
    if (c.command == "eval") return run_eval(c);
    return run_report(c);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
