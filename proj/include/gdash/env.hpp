#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdash/geometry.hpp"

namespace gdash {

/// Planar workspace: rectangular bounds minus a set of polygonal obstacles.
struct Workspace {
  Rect bounds;
  std::vector<Polygon> obstacles;

  [[nodiscard]] bool inBounds(const Vec2& p) const { return bounds.contains(p); }

  [[nodiscard]] bool insideObstacle(const Vec2& p) const {
    for (const auto& poly : obstacles)
      if (pointInPolygon(p, poly)) return true;
    return false;
  }

  /// Distance from p to the nearest obstacle edge or workspace wall.
  /// Zero inside an obstacle.  Throws for points outside the bounds.
  [[nodiscard]] double clearance(const Vec2& p) const {
    if (!inBounds(p))
      throw std::domain_error("clearance query outside workspace bounds");
    double best = bounds.interiorClearance(p);
    for (const auto& poly : obstacles) {
      if (pointInPolygon(p, poly)) return 0.0;
      best = std::min(best, pointPolygonBoundaryDistance(p, poly));
    }
    return best;
  }
};

/// Bicycle-model parameters for a second-order car.
struct CarModel {
  double wheelbase{0.25};
  double maxAccel{1.0};
  double maxSteer{0.6};
};

/// A disk robot; kinodynamic when a car model is attached.
struct Robot {
  int id{0};
  double radius{0.2};
  double maxSpeed{1.0};
  std::optional<CarModel> car;

  [[nodiscard]] bool kinodynamic() const { return car.has_value(); }
};

/// Single-robot configuration.  Holonomic robots use only the position;
/// car robots also carry heading and signed speed.
struct Configuration {
  Vec2 position;
  double heading{0.0};
  double speed{0.0};
};

/// Configurations of several robots at one instant, aligned by index.
struct CompositeConfiguration {
  std::vector<Configuration> configs;

  [[nodiscard]] std::size_t size() const { return configs.size(); }
  Configuration& operator[](std::size_t i) { return configs[i]; }
  const Configuration& operator[](std::size_t i) const { return configs[i]; }
};

/// Acceleration and steering command for a car robot.
struct Control {
  double accel{0.0};
  double steer{0.0};
};

inline bool configValid(const Workspace& ws, const Robot& robot,
                        const Configuration& q) {
  if (!ws.inBounds(q.position)) return false;
  return ws.clearance(q.position) >= robot.radius;
}

/// Checks the straight segment between two configurations at the given
/// sampling resolution, endpoints included.
inline bool localPathValid(const Workspace& ws, const Robot& robot,
                           const Configuration& a, const Configuration& b,
                           double resolution) {
  const double len = distance(a.position, b.position);
  const int n = std::max(1, static_cast<int>(std::ceil(len / resolution)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    Configuration q;
    q.position = a.position + (b.position - a.position) * t;
    if (!configValid(ws, robot, q)) return false;
  }
  return true;
}

inline bool robotsCollide(const Robot& ra, const Configuration& qa,
                          const Robot& rb, const Configuration& qb) {
  return distance(qa.position, qb.position) < ra.radius + rb.radius;
}

namespace detail {

struct CarState {
  double x, y, theta, v;
};

inline CarState carDerivative(const CarState& s, const Control& u,
                              const CarModel& car) {
  return {s.v * std::cos(s.theta), s.v * std::sin(s.theta),
          s.v / car.wheelbase * std::tan(u.steer), u.accel};
}

}  // namespace detail

/// One RK4 step of the second-order car model.  Speed is clamped to the
/// robot's limit after the step and the heading renormalized.  Throws for
/// robots without dynamics and for out-of-range controls.
inline Configuration integrate(const Robot& robot, const Configuration& q,
                               const Control& u, double dt) {
  if (!robot.car)
    throw std::domain_error("integrate requires a robot with car dynamics");
  const CarModel& car = *robot.car;
  if (std::abs(u.accel) > car.maxAccel + 1e-12)
    throw std::domain_error("acceleration exceeds limit");
  if (std::abs(u.steer) > car.maxSteer + 1e-12)
    throw std::domain_error("steering exceeds limit");
  if (dt <= 0.0) throw std::domain_error("integration step must be positive");

  using detail::CarState;
  const CarState s0{q.position.x, q.position.y, q.heading, q.speed};
  const CarState k1 = detail::carDerivative(s0, u, car);
  const CarState s1{s0.x + 0.5 * dt * k1.x, s0.y + 0.5 * dt * k1.y,
                    s0.theta + 0.5 * dt * k1.theta, s0.v + 0.5 * dt * k1.v};
  const CarState k2 = detail::carDerivative(s1, u, car);
  const CarState s2{s0.x + 0.5 * dt * k2.x, s0.y + 0.5 * dt * k2.y,
                    s0.theta + 0.5 * dt * k2.theta, s0.v + 0.5 * dt * k2.v};
  const CarState k3 = detail::carDerivative(s2, u, car);
  const CarState s3{s0.x + dt * k3.x, s0.y + dt * k3.y,
                    s0.theta + dt * k3.theta, s0.v + dt * k3.v};
  const CarState k4 = detail::carDerivative(s3, u, car);

  Configuration out;
  out.position.x = s0.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.position.y = s0.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  out.heading = normalizeAngle(
      s0.theta + dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta));
  out.speed = std::clamp(s0.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
                         -robot.maxSpeed, robot.maxSpeed);
  return out;
}

/// Applies the same control over several consecutive RK4 steps of size dt.
inline Configuration integrateSteps(const Robot& robot, Configuration q,
                                    const Control& u, int steps, double dt) {
  for (int i = 0; i < steps; ++i) q = integrate(robot, q, u, dt);
  return q;
}

}  // namespace gdash
