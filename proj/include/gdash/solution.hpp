#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gdash/io.hpp"

namespace gdash {

/// One robot's dense trajectory: states at i*dt from t=0 to the makespan.
/// Kinodynamic robots also carry the control applied over each interval
/// (controls.size() == states.size() - 1), allowing exact replay.
struct RobotTrajectory {
  int id{0};
  std::vector<Configuration> states;
  std::vector<Control> controls;
};

/// Counters describing how a plan was produced.  planningSeconds is wall
/// clock and is deliberately kept out of solution files (which must be
/// byte-identical across reruns of the same seed); it is reported through
/// run records instead.
struct PlanStats {
  long iterations{0};              // guide-search node expansions, all restarts
  int restarts{0};
  int constraints{0};
  double planningSeconds{0.0};
  double makespanSeconds{0.0};
  long collisionPairsChecked{0};   // overlapping path pairs sampled
  long disjointPairsSampled{0};    // must stay 0: disjoint windows are skipped
};

/// A full multi-robot answer on a shared dt grid.
struct Solution {
  double dt{0.1};
  std::vector<RobotTrajectory> robots;
  PlanStats stats;

  [[nodiscard]] double makespan() const {
    return robots.empty() ? 0.0 : dt * (robots.front().states.size() - 1);
  }
};

inline json solutionToJson(const Solution& sol) {
  json robots = json::array();
  for (const RobotTrajectory& rt : sol.robots) {
    const bool kino = !rt.controls.empty();
    json traj = json::array();
    for (std::size_t k = 0; k < rt.states.size(); ++k) {
      const Configuration& q = rt.states[k];
      const double t = sol.dt * static_cast<double>(k);
      if (kino)
        traj.push_back({t, q.position.x, q.position.y, q.heading, q.speed});
      else
        traj.push_back({t, q.position.x, q.position.y});
    }
    json jr{{"id", rt.id}, {"trajectory", traj}};
    if (kino) {
      json controls = json::array();
      for (const Control& u : rt.controls)
        controls.push_back({u.accel, u.steer});
      jr["controls"] = controls;
    }
    robots.push_back(std::move(jr));
  }
  return json{{"dt", sol.dt},
              {"robots", robots},
              {"stats",
               {{"iterations", sol.stats.iterations},
                {"restarts", sol.stats.restarts},
                {"constraints", sol.stats.constraints},
                {"makespan_s", sol.stats.makespanSeconds},
                {"collision_pairs", sol.stats.collisionPairsChecked},
                {"disjoint_pairs_sampled", sol.stats.disjointPairsSampled}}}};
}

inline Solution solutionFromJson(const json& j) {
  Solution sol;
  for (const json& jr : j.at("robots")) {
    RobotTrajectory rt;
    rt.id = jr.at("id").get<int>();
    for (const json& row : jr.at("trajectory")) {
      Configuration q;
      q.position = {row.at(1).get<double>(), row.at(2).get<double>()};
      if (row.size() >= 5) {
        q.heading = row.at(3).get<double>();
        q.speed = row.at(4).get<double>();
      }
      rt.states.push_back(q);
    }
    if (jr.contains("controls"))
      for (const json& row : jr.at("controls"))
        rt.controls.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
    sol.robots.push_back(std::move(rt));
  }
  if (j.contains("dt")) {
    sol.dt = j.at("dt").get<double>();
  } else {
    // Infer the grid from the first robot's timestamps.
    for (const json& jr : j.at("robots")) {
      const json& traj = jr.at("trajectory");
      if (traj.size() >= 2) {
        sol.dt = traj.at(1).at(0).get<double>() - traj.at(0).at(0).get<double>();
        break;
      }
    }
  }
  if (j.contains("stats")) {
    const json& st = j.at("stats");
    sol.stats.iterations = st.value("iterations", 0L);
    sol.stats.restarts = st.value("restarts", 0);
    sol.stats.constraints = st.value("constraints", 0);
    sol.stats.makespanSeconds = st.value("makespan_s", 0.0);
    sol.stats.collisionPairsChecked = st.value("collision_pairs", 0L);
    sol.stats.disjointPairsSampled = st.value("disjoint_pairs_sampled", 0L);
  }
  return sol;
}

}  // namespace gdash
