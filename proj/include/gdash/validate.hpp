#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gdash/scenario.hpp"
#include "gdash/solution.hpp"

namespace gdash {

/// One validation failure at a specific time.
struct Violation {
  std::string kind;   // structure | obstacle | separation | velocity |
                      // control-bounds | dynamics | endpoint
  double time{0.0};
  int robotA{-1};
  int robotB{-1};
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  [[nodiscard]] bool clean() const { return violations.empty(); }

  [[nodiscard]] std::string summary() const {
    std::ostringstream out;
    for (const Violation& v : violations) {
      out << "t=" << v.time << ' ' << v.kind << " robot " << v.robotA;
      if (v.robotB >= 0) out << '/' << v.robotB;
      if (!v.detail.empty()) out << ": " << v.detail;
      out << '\n';
    }
    out << (violations.empty()
                ? "valid"
                : "invalid (" + std::to_string(violations.size()) +
                      " violations)")
        << '\n';
    return out.str();
  }
};

/// Re-checks a solution against its scenario from first principles: structure,
/// obstacle clearance and pairwise separation at every grid instant, endpoint
/// attainment, and per-robot motion feasibility (velocity bounds for holonomic
/// robots, exact control replay for kinodynamic ones).  Independent of how the
/// solution was produced.
[[nodiscard]] inline ValidationReport validateSolution(
    const Solution& sol, const Scenario& scen, double goalTolerance = 0.1) {
  ValidationReport rep;
  auto flag = [&](std::string kind, double t, int a, int b,
                  const std::string& detail) {
    rep.violations.push_back({std::move(kind), t, a, b, detail});
  };

  const std::size_t n = scen.robots.size();
  if (sol.robots.size() != n) {
    flag("structure", 0.0, -1, -1, "robot count mismatch");
    return rep;
  }
  if (!(sol.dt > 0.0)) {
    flag("structure", 0.0, -1, -1, "non-positive dt");
    return rep;
  }
  std::size_t steps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const RobotTrajectory& rt = sol.robots[i];
    if (rt.id != static_cast<int>(i))
      flag("structure", 0.0, static_cast<int>(i), -1, "robot id out of order");
    if (rt.states.empty()) {
      flag("structure", 0.0, static_cast<int>(i), -1, "empty trajectory");
      return rep;
    }
    if (i == 0) steps = rt.states.size();
    if (rt.states.size() != steps) {
      flag("structure", 0.0, static_cast<int>(i), -1,
           "trajectory lengths differ");
      return rep;
    }
    if (scen.robots[i].kinodynamic() &&
        rt.controls.size() != rt.states.size() - 1) {
      flag("structure", 0.0, static_cast<int>(i), -1,
           "control tape does not cover the trajectory");
      return rep;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Robot& robot = scen.robots[i];
    const RobotTrajectory& rt = sol.robots[i];
    const int id = static_cast<int>(i);

    if (distance(rt.states.front().position, scen.starts[i].position) >
        goalTolerance)
      flag("endpoint", 0.0, id, -1, "does not begin at the start");
    if (distance(rt.states.back().position, scen.goals[i].position) >
        goalTolerance)
      flag("endpoint", sol.dt * static_cast<double>(steps - 1), id, -1,
           "does not reach the goal");

    for (std::size_t k = 0; k < steps; ++k)
      if (!configValid(scen.workspace, robot, rt.states[k]))
        flag("obstacle", sol.dt * static_cast<double>(k), id, -1,
             "clearance below the robot radius");

    if (!robot.kinodynamic()) {
      const double bound = robot.maxSpeed * sol.dt + 1e-9;
      for (std::size_t k = 0; k + 1 < steps; ++k) {
        const double move =
            distance(rt.states[k].position, rt.states[k + 1].position);
        if (move > bound)
          flag("velocity", sol.dt * static_cast<double>(k), id, -1,
               "step displacement exceeds max speed");
      }
    } else {
      const CarModel& car = *robot.car;
      Configuration q = rt.states.front();
      for (std::size_t k = 0; k + 1 < steps; ++k) {
        const Control& u = rt.controls[k];
        const double t = sol.dt * static_cast<double>(k);
        if (std::abs(u.accel) > car.maxAccel + 1e-9 ||
            std::abs(u.steer) > car.maxSteer + 1e-9) {
          flag("control-bounds", t, id, -1, "control outside actuator limits");
          break;
        }
        q = integrate(robot, q, u, sol.dt);
        const Configuration& want = rt.states[k + 1];
        const double dev = std::max(
            {std::abs(q.position.x - want.position.x),
             std::abs(q.position.y - want.position.y),
             std::abs(q.heading - want.heading), std::abs(q.speed - want.speed)});
        if (dev > 1e-6) {
          flag("dynamics", t, id, -1,
               "state does not follow from the recorded control");
          break;
        }
      }
    }
  }

  for (std::size_t k = 0; k < steps; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (robotsCollide(scen.robots[i], sol.robots[i].states[k],
                          scen.robots[j], sol.robots[j].states[k]))
          flag("separation", sol.dt * static_cast<double>(k),
               static_cast<int>(i), static_cast<int>(j),
               "robots closer than the sum of radii");

  return rep;
}

}  // namespace gdash
