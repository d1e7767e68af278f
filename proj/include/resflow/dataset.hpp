#pragma once

// Corpus layout: one directory of zero-padded PNG frames per video plus a
// tab-separated manifest
//
//   id <TAB> frame_dir <TAB> label <TAB> source_tag <TAB> frame_count <TAB> split
//
// '#' starts a comment line. A comment of the form "# seed: N" records the
// corpus seed. Relative frame_dirs resolve against the manifest's directory.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/frames.hpp"
#include "resflow/grid.hpp"
#include "resflow/png_io.hpp"

namespace resflow {

namespace fs = std::filesystem;

enum class Split { Train, Val, Test };

inline std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

inline std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train" || s == "Train") return Split::Train;
  if (s == "val" || s == "Val") return Split::Val;
  if (s == "test" || s == "Test") return Split::Test;
  return std::nullopt;
}

struct VideoEntry {
  std::string id;
  fs::path frame_dir;
  Label label = Label::Real;
  std::string source_tag;
  int frame_count = 0;
  Split split = Split::Train;

  friend bool operator==(const VideoEntry&, const VideoEntry&) = default;
};

struct Manifest {
  std::vector<VideoEntry> entries;
  std::optional<Split> split;  // set when every entry belongs to one split
  std::uint64_t seed = 0;

  Manifest subset(Split s) const {
    Manifest m{{}, s, seed};
    for (const auto& e : entries)
      if (e.split == s) m.entries.push_back(e);
    return m;
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [l](const VideoEntry& e) { return e.label == l; }));
  }
};

/// PNG files of a frame directory in lexicographic order.
inline std::vector<fs::path> list_frame_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    auto ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

namespace detail {

inline std::vector<std::pair<std::string, std::size_t>> split_tabs(const std::string& line) {
  std::vector<std::pair<std::string, std::size_t>> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.emplace_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start),
                        start + 1);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline Error parse_error(const fs::path& path, std::size_t line, std::size_t col, const std::string& what) {
  return Error(Errc::ParseError,
               path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
}

}  // namespace detail

/// Validates that splits partition the ids; throws DuplicateId / SplitLeak.
inline void validate_manifest_ids(const Manifest& m) {
  std::map<std::string, Split> seen;
  for (const auto& e : m.entries) {
    auto [it, inserted] = seen.emplace(e.id, e.split);
    if (inserted) continue;
    if (it->second == e.split) throw Error(Errc::DuplicateId, "id '" + e.id + "' appears twice");
    throw Error(Errc::SplitLeak, "id '" + e.id + "' appears in splits " +
                                     std::string(split_name(it->second)) + " and " +
                                     std::string(split_name(e.split)));
  }
}

/// Parses and validates a manifest. With check_frames, every frame_dir must
/// exist and hold exactly frame_count PNG files.
inline Manifest load_manifest(const fs::path& path, bool check_frames = true) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();

  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') {
      const auto p = line.find("seed:");
      if (p != std::string::npos) {
        std::istringstream ss(line.substr(p + 5));
        std::uint64_t s = 0;
        if (!(ss >> s)) throw detail::parse_error(path, lineno, p + 6, "bad seed directive");
        m.seed = s;
      }
      continue;
    }
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 6)
      throw detail::parse_error(path, lineno, 1,
                                "expected 6 tab-separated fields, got " + std::to_string(fields.size()));
    VideoEntry e;
    e.id = fields[0].first;
    if (e.id.empty()) throw detail::parse_error(path, lineno, fields[0].second, "empty id");
    if (fields[1].first.empty()) throw detail::parse_error(path, lineno, fields[1].second, "empty frame_dir");
    e.frame_dir = fs::path(fields[1].first);
    if (e.frame_dir.is_relative()) e.frame_dir = base / e.frame_dir;
    try {
      e.label = parse_label(fields[2].first);
    } catch (const Error&) {
      throw detail::parse_error(path, lineno, fields[2].second, "bad label '" + fields[2].first + "'");
    }
    e.source_tag = fields[3].first;
    const auto& fc = fields[4].first;
    auto [ptr, ec] = std::from_chars(fc.data(), fc.data() + fc.size(), e.frame_count);
    if (ec != std::errc{} || ptr != fc.data() + fc.size() || e.frame_count < 0)
      throw detail::parse_error(path, lineno, fields[4].second, "bad frame_count '" + fc + "'");
    const auto sp = parse_split(fields[5].first);
    if (!sp) throw detail::parse_error(path, lineno, fields[5].second, "bad split '" + fields[5].first + "'");
    e.split = *sp;
    m.entries.push_back(std::move(e));
  }

  validate_manifest_ids(m);
  if (!m.entries.empty() &&
      std::all_of(m.entries.begin(), m.entries.end(),
                  [&](const VideoEntry& e) { return e.split == m.entries.front().split; }))
    m.split = m.entries.front().split;

  if (check_frames) {
    for (const auto& e : m.entries) {
      if (!fs::is_directory(e.frame_dir))
        throw Error(Errc::MissingFile, "frame_dir of '" + e.id + "' not found: " + e.frame_dir.string());
      const auto n = list_frame_files(e.frame_dir).size();
      if (n != static_cast<std::size_t>(e.frame_count))
        throw Error(Errc::FrameCountMismatch, "'" + e.id + "' declares " + std::to_string(e.frame_count) +
                                                  " frames but " + e.frame_dir.string() + " holds " +
                                                  std::to_string(n));
    }
  }
  return m;
}

inline void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write manifest " + path.string());
  const fs::path base = path.parent_path();
  out << "# id\tframe_dir\tlabel\tsource_tag\tframe_count\tsplit\n";
  out << "# seed: " << m.seed << "\n";
  for (const auto& e : m.entries) {
    fs::path dir = e.frame_dir;
    if (!base.empty()) {
      const auto rel = dir.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") dir = rel;
    }
    out << e.id << '\t' << dir.generic_string() << '\t' << label_name(e.label) << '\t' << e.source_tag
        << '\t' << e.frame_count << '\t' << split_name(e.split) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

/// Decodes a video's frames in filename order.
inline FrameSequence load_frames(const VideoEntry& entry) {
  if (!fs::is_directory(entry.frame_dir))
    throw Error(Errc::MissingFile, "frame_dir not found: " + entry.frame_dir.string());
  FrameSequence seq;
  seq.id = entry.id;
  seq.label = entry.label;
  for (const auto& f : list_frame_files(entry.frame_dir)) seq.frames.push_back(read_png(f));
  validate_sequence(seq);
  return seq;
}

/// All frames when n <= max_frames, else max_frames evenly strided frames.
inline std::vector<std::size_t> sample_frame_indices(std::size_t n, std::size_t max_frames) {
  std::vector<std::size_t> idx;
  if (n <= max_frames || max_frames == 0) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t i = 0; i < max_frames; ++i) idx.push_back(i * n / max_frames);
  return idx;
}

inline FrameSequence sample_frames(const FrameSequence& seq, std::size_t max_frames) {
  if (seq.size() <= max_frames || max_frames == 0) return seq;
  FrameSequence out{{}, seq.id, seq.label};
  for (auto i : sample_frame_indices(seq.size(), max_frames)) out.frames.push_back(seq.frames[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Real videos translate a sinusoidal texture at constant velocity; fake videos
/// perturb the velocity every frame. Fake base velocities are drawn with
/// variance velocity_std^2 - jitter_std^2 so both classes share the same
/// per-frame velocity distribution and differ only in its temporal structure.
struct SyntheticConfig {
  int real = 4;
  int fake = 4;
  int size = 64;
  int frames = 8;
  std::uint64_t seed = 7;
  double velocity_std = 1.0;  // per axis, px/frame
  double jitter_std = 1.0;    // per axis, px/frame
  double max_velocity = 3.0;
  double noise_std = 2.0;     // per-frame sensor noise, 0-255 scale
  double val_fraction = 0.25;
  double test_fraction = 0.25;
  std::string real_source = "synthetic-real";
  std::string fake_source = "jitter";

  void validate() const {
    if (real < 0 || fake < 0) throw Error(Errc::InvalidConfig, "video counts must be non-negative");
    if (size < 8) throw Error(Errc::InvalidConfig, "frame size must be >= 8");
    if (frames < 1) throw Error(Errc::InvalidConfig, "frames must be >= 1");
    if (velocity_std < 0 || jitter_std < 0 || noise_std < 0 || max_velocity <= 0)
      throw Error(Errc::InvalidConfig, "motion parameters must be non-negative");
    if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction > 1)
      throw Error(Errc::InvalidConfig, "split fractions must be in [0,1] and sum to <= 1");
  }
};

namespace detail {

struct Wave {
  double kx, ky, phase, amp;
  double colour[3];
};

struct VideoPlan {
  double base[3];
  std::vector<Wave> waves;
  std::vector<std::pair<double, double>> offsets;  // texture offset per frame
};

inline VideoPlan plan_video(const SyntheticConfig& cfg, std::mt19937_64& rng, bool fake) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VideoPlan p;
  for (double& b : p.base) b = 100.0 + 56.0 * uni(rng);
  for (int k = 0; k < 4; ++k) {
    const double wavelength = 8.0 + 16.0 * uni(rng);
    const double theta = 2.0 * M_PI * uni(rng);
    Wave w{2.0 * M_PI / wavelength * std::cos(theta), 2.0 * M_PI / wavelength * std::sin(theta),
           2.0 * M_PI * uni(rng), 12.0 + 14.0 * uni(rng), {}};
    for (double& c : w.colour) c = 0.4 + 0.6 * uni(rng);
    p.waves.push_back(w);
  }
  const double base_std = fake ? std::sqrt(std::max(0.0, cfg.velocity_std * cfg.velocity_std -
                                                             cfg.jitter_std * cfg.jitter_std))
                               : cfg.velocity_std;
  const double vx = base_std * gauss(rng);
  const double vy = base_std * gauss(rng);
  double x = 100.0 * uni(rng), y = 100.0 * uni(rng);
  for (int t = 0; t < cfg.frames; ++t) {
    p.offsets.emplace_back(x, y);
    double sx = vx, sy = vy;
    if (fake) {
      sx += cfg.jitter_std * gauss(rng);
      sy += cfg.jitter_std * gauss(rng);
    }
    x += std::clamp(sx, -cfg.max_velocity, cfg.max_velocity);
    y += std::clamp(sy, -cfg.max_velocity, cfg.max_velocity);
  }
  return p;
}

inline RgbImage render_frame(const SyntheticConfig& cfg, const VideoPlan& p, int t, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  RgbImage img(cfg.size, cfg.size);
  const auto [ox, oy] = p.offsets[static_cast<std::size_t>(t)];
  for (int y = 0; y < cfg.size; ++y) {
    for (int x = 0; x < cfg.size; ++x) {
      const double X = x - ox, Y = y - oy;
      double val[3] = {p.base[0], p.base[1], p.base[2]};
      for (const auto& w : p.waves) {
        const double s = w.amp * std::sin(w.kx * X + w.ky * Y + w.phase);
        for (int c = 0; c < 3; ++c) val[c] += w.colour[c] * s;
      }
      for (int c = 0; c < 3; ++c) {
        const double n = cfg.noise_std > 0 ? cfg.noise_std * noise(rng) : 0.0;
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(val[c] + n), 0L, 255L));
      }
    }
  }
  return img;
}

inline std::string frame_name(int t, int frames) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(std::max(frames - 1, 0)).size()));
  std::string s = std::to_string(t);
  return std::string(static_cast<std::size_t>(std::max<int>(0, width - static_cast<int>(s.size()))), '0') + s +
         ".png";
}

inline Split assign_split(int index, int count, const SyntheticConfig& cfg) {
  const int n_test = static_cast<int>(std::lround(count * cfg.test_fraction));
  const int n_val = static_cast<int>(std::lround(count * cfg.val_fraction));
  const int n_train = std::max(0, count - n_test - n_val);
  if (index < n_train) return Split::Train;
  if (index < n_train + n_val) return Split::Val;
  return Split::Test;
}

}  // namespace detail

inline std::string synthetic_id(Label label, int index) {
  std::string n = std::to_string(index);
  return std::string(label_name(label)) + "_" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

/// Renders frames of one synthetic video without touching disk.
inline FrameSequence render_synthetic_video(const SyntheticConfig& cfg, Label label, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(label_value(label)), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const auto plan = detail::plan_video(cfg, rng, label == Label::Fake);
  FrameSequence out;
  out.label = label;
  out.id = synthetic_id(label, index);
  for (int t = 0; t < cfg.frames; ++t) out.frames.push_back(detail::render_frame(cfg, plan, t, rng));
  return out;
}

/// Writes <out_dir>/<id>/NNN.png and <out_dir>/manifest.tsv.
inline Manifest make_synthetic_corpus(const SyntheticConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.seed = cfg.seed;
  for (Label label : {Label::Real, Label::Fake}) {
    const int count = label == Label::Real ? cfg.real : cfg.fake;
    for (int i = 0; i < count; ++i) {
      const auto seq = render_synthetic_video(cfg, label, i);
      VideoEntry e;
      e.id = synthetic_id(label, i);
      e.frame_dir = out_dir / e.id;
      e.label = label;
      e.source_tag = label == Label::Real ? cfg.real_source : cfg.fake_source;
      e.frame_count = cfg.frames;
      e.split = detail::assign_split(i, count, cfg);
      fs::create_directories(e.frame_dir, ec);
      if (ec) throw Error(Errc::IoError, "cannot create " + e.frame_dir.string() + ": " + ec.message());
      for (const auto& old : list_frame_files(e.frame_dir)) fs::remove(old);
      for (int t = 0; t < cfg.frames; ++t)
        write_png(seq.frames[static_cast<std::size_t>(t)], e.frame_dir / detail::frame_name(t, cfg.frames));
      m.entries.push_back(std::move(e));
    }
  }
  write_manifest(m, out_dir / "manifest.tsv");
  return m;
}

}  // namespace resflow
