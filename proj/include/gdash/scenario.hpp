#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdash/io.hpp"

namespace gdash {

/// A complete planning problem: workspace, fleet, endpoints, and the seed
/// every downstream random decision flows from.
struct Scenario {
  std::string name;
  Workspace workspace;
  std::vector<Robot> robots;             // ids are dense 0..n-1
  std::vector<Configuration> starts;     // aligned with robots
  std::vector<Configuration> goals;      // aligned with robots
  std::optional<WorkspaceSkeleton> skeleton;  // pre-built guide, if any
  std::uint64_t seed{0};

  [[nodiscard]] bool kinodynamic() const {
    return !robots.empty() && robots.front().kinodynamic();
  }
};

/// Throws std::invalid_argument when the scenario is malformed: misaligned
/// arrays, non-dense ids, mixed dynamics, invalid or pairwise-colliding
/// endpoint configurations, or a moving kinodynamic start/goal.
inline void checkScenario(const Scenario& s) {
  const std::size_t n = s.robots.size();
  if (n == 0) throw std::invalid_argument("scenario has no robots");
  if (s.starts.size() != n || s.goals.size() != n)
    throw std::invalid_argument("starts/goals do not match the robot list");
  for (std::size_t i = 0; i < n; ++i) {
    if (s.robots[i].id != static_cast<int>(i))
      throw std::invalid_argument("robot ids must be dense and ordered");
    if (s.robots[i].kinodynamic() != s.robots.front().kinodynamic())
      throw std::invalid_argument("mixed dynamics in one scenario");
    if (s.robots[i].radius <= 0.0 || s.robots[i].maxSpeed <= 0.0)
      throw std::invalid_argument("robot radius and max speed must be positive");
    for (const Configuration* q : {&s.starts[i], &s.goals[i]}) {
      if (!configValid(s.workspace, s.robots[i], *q))
        throw std::invalid_argument("endpoint configuration is not valid");
      if (s.robots[i].kinodynamic() && q->speed != 0.0)
        throw std::invalid_argument("kinodynamic endpoints must be at rest");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (robotsCollide(s.robots[i], s.starts[i], s.robots[j], s.starts[j]))
        throw std::invalid_argument("start configurations overlap");
      if (robotsCollide(s.robots[i], s.goals[i], s.robots[j], s.goals[j]))
        throw std::invalid_argument("goal configurations overlap");
    }
}

namespace detail {

inline json configurationToJson(const Configuration& q, bool kino) {
  if (kino) return json{q.position.x, q.position.y, q.heading, q.speed};
  return json{q.position.x, q.position.y};
}

inline Configuration configurationFromJson(const json& j) {
  Configuration q;
  q.position = {j.at(0).get<double>(), j.at(1).get<double>()};
  if (j.size() >= 4) {
    q.heading = j.at(2).get<double>();
    q.speed = j.at(3).get<double>();
  }
  return q;
}

}  // namespace detail

inline json robotToJson(const Robot& r) {
  json j{{"id", r.id}, {"radius", r.radius}, {"max_speed", r.maxSpeed}};
  if (r.car)
    j["car"] = {{"wheelbase", r.car->wheelbase},
                {"max_accel", r.car->maxAccel},
                {"max_steer", r.car->maxSteer}};
  return j;
}

inline Robot robotFromJson(const json& j) {
  Robot r;
  r.id = j.at("id").get<int>();
  r.radius = j.at("radius").get<double>();
  r.maxSpeed = j.at("max_speed").get<double>();
  if (j.contains("car")) {
    const json& c = j.at("car");
    r.car = CarModel{c.at("wheelbase").get<double>(),
                     c.at("max_accel").get<double>(),
                     c.at("max_steer").get<double>()};
  }
  return r;
}

inline json scenarioToJson(const Scenario& s) {
  json robots = json::array();
  json starts = json::array();
  json goals = json::array();
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    robots.push_back(robotToJson(s.robots[i]));
    const bool kino = s.robots[i].kinodynamic();
    starts.push_back(detail::configurationToJson(s.starts[i], kino));
    goals.push_back(detail::configurationToJson(s.goals[i], kino));
  }
  json j{{"name", s.name},          {"seed", s.seed},
         {"workspace", workspaceToJson(s.workspace)},
         {"robots", robots},        {"starts", starts},
         {"goals", goals}};
  if (s.skeleton) j["skeleton"] = skeletonToJson(*s.skeleton);
  return j;
}

inline Scenario scenarioFromJson(const json& j) {
  Scenario s;
  s.name = j.value("name", std::string{});
  s.seed = j.value("seed", std::uint64_t{0});
  s.workspace = workspaceFromJson(j.at("workspace"));
  for (const json& jr : j.at("robots")) s.robots.push_back(robotFromJson(jr));
  for (const json& jq : j.at("starts"))
    s.starts.push_back(detail::configurationFromJson(jq));
  for (const json& jq : j.at("goals"))
    s.goals.push_back(detail::configurationFromJson(jq));
  if (j.contains("skeleton")) s.skeleton = skeletonFromJson(j.at("skeleton"));
  checkScenario(s);
  return s;
}

}  // namespace gdash
