#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

namespace gdash {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  [[nodiscard]] double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  [[nodiscard]] double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  [[nodiscard]] double squaredNorm() const { return x * x + y * y; }
  [[nodiscard]] double norm() const { return std::sqrt(squaredNorm()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline double squaredDistance(const Vec2& a, const Vec2& b) {
  return (a - b).squaredNorm();
}

/// Axis-aligned rectangle, used for workspace bounds.
struct Rect {
  double xmin{0.0};
  double ymin{0.0};
  double xmax{0.0};
  double ymax{0.0};

  [[nodiscard]] double width() const { return xmax - xmin; }
  [[nodiscard]] double height() const { return ymax - ymin; }

  [[nodiscard]] bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }

  /// Distance from an interior point to the nearest boundary wall.
  [[nodiscard]] double interiorClearance(const Vec2& p) const {
    return std::min(std::min(p.x - xmin, xmax - p.x),
                    std::min(p.y - ymin, ymax - p.y));
  }
};

/// Simple polygon given as a counter-clockwise or clockwise vertex ring.
using Polygon = std::vector<Vec2>;

inline double pointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

inline double pointPolygonBoundaryDistance(const Vec2& p, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    best = std::min(best, pointSegmentDistance(p, a, b));
  }
  return best;
}

/// Even-odd rule point-in-polygon test.  Boundary points may land on either
/// side; callers that care use the boundary distance as well.
inline bool pointInPolygon(const Vec2& p, const Polygon& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    const bool crosses = (a.y > p.y) != (b.y > p.y);
    if (crosses && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
      inside = !inside;
  }
  return inside;
}

inline Polygon rectPolygon(double xmin, double ymin, double xmax, double ymax) {
  return {{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}};
}

inline double polylineLength(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

/// Point at arc length s along a polyline, clamped to its extent.
inline Vec2 polylinePointAt(const std::vector<Vec2>& pts, double s) {
  if (pts.empty()) return {};
  if (s <= 0.0) return pts.front();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    if (s <= seg) {
      if (seg <= 0.0) return pts[i];
      return pts[i - 1] + (pts[i] - pts[i - 1]) * (s / seg);
    }
    s -= seg;
  }
  return pts.back();
}

/// Wraps an angle into (-pi, pi].
inline double normalizeAngle(double a) {
  constexpr double twoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, twoPi);
  if (a <= -std::numbers::pi) a += twoPi;
  if (a > std::numbers::pi) a -= twoPi;
  return a;
}

}  // namespace gdash
