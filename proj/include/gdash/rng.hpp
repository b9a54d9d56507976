#pragma once

#include <cstdint>
#include <random>

#include "gdash/geometry.hpp"

namespace gdash {

/// Single random stream threaded through every stochastic component so a
/// seed fully determines planner behavior.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  int uniformInt(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  /// Uniform point in the disk of given radius around a center.
  Vec2 inDisk(const Vec2& center, double radius) {
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    const double r = radius * std::sqrt(uniform(0.0, 1.0));
    return {center.x + r * std::cos(a), center.y + r * std::sin(a)};
  }

  Vec2 inRect(const Rect& r) {
    return {uniform(r.xmin, r.xmax), uniform(r.ymin, r.ymax)};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gdash
