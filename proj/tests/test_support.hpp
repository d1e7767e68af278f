#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "resflow/flow_field.hpp"
#include "resflow/grid.hpp"

namespace resflow::testkit {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "resflow") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

/// Periodic texture on an n x n torus, translated by (sx, sy) with wrap-around:
/// out(x, y) = texture(x - sx, y - sy).
inline GrayImage periodic_texture(int n, int sx, int sy, unsigned variant = 0) {
  GrayImage g(n, n);
  const double tw = 2.0 * M_PI / n;
  const double ph = 0.7 * variant;
  const int f1 = 2 + static_cast<int>(variant % 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int X = ((x - sx) % n + n) % n;
      const int Y = ((y - sy) % n + n) % n;
      g(x, y) = static_cast<float>(128.0 + 40.0 * std::sin(tw * f1 * X + 0.3 + ph) +
                                   30.0 * std::cos(tw * 2 * Y + 1.1 - ph) +
                                   25.0 * std::sin(tw * (4 * X + 5 * Y) + ph) +
                                   20.0 * std::cos(tw * (7 * X - 3 * Y) + 0.5));
    }
  return g;
}

inline FlowField random_flow(std::mt19937_64& rng, int w, int h, float scale = 5.0f) {
  std::uniform_real_distribution<float> d(-scale, scale);
  FlowField f(w, h);
  for (auto& x : f.u.values()) x = d(rng);
  for (auto& x : f.v.values()) x = d(rng);
  return f;
}

}  // namespace resflow::testkit
