#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace gdash {

/// How many robots a passage of a given clearance admits.
enum class CapacityRule {
  PerRadius,    // floor(clearance / radius): radii between centerline and wall
  PerDiameter,  // floor(clearance / (2 radius)): reserves opposing widths
};

/// How prohibition constraints match robot groups.
enum class ProhibitionMatch {
  Exact,   // the listed set and nothing else
  Subset,  // any superset of the listed set
};

/// Every tunable of the pipeline, loadable from a JSON config file.
/// Factors are expressed relative to the robot radius or derived quantities
/// so one config works across robot sizes.
struct PlannerConfig {
  // Discretization.
  double dtGrid{0.1};               // trajectory timestep, seconds
  double skeletonCellFactor{0.5};   // grid cell = factor * robot radius
  double collisionResFactor{0.5};   // validity sampling = factor * radius

  // Heuristic search.
  double mapfStepSeconds{1.0};      // duration of one MAPF timestep
  int mapfHorizon{256};             // low-level time horizon, steps
  int cbsNodeBudget{10000};         // high-level expansions before giving up
  CapacityRule capacityRule{CapacityRule::PerRadius};
  ProhibitionMatch prohibitionMatch{ProhibitionMatch::Exact};

  // Region-guided planners.
  double regionRadiusFactor{2.0};    // region radius = factor * robot radius
  double deltaFactor{2.0};           // delta = factor * region radius
  double advanceStepFactor{0.5};     // region advance = factor * region radius
  double advanceThresholdFactor{1.0};
  double stepSizeFactor{1.0};        // RRT extension = factor * robot radius
  double goalTolerance{0.1};         // meters
  int nFail{300};                    // consecutive failures before giving up
  double transitionBallFactor{3.0};  // sampling ball = factor * delta
  double transitionGoalBias{0.1};
  int transitionGoalRetry{25};       // failures before resampling the goal

  // Kinodynamic extension.
  int kControls{16};
  double controlDtMin{0.2};  // seconds, rounded to the dtGrid internally
  double controlDtMax{1.0};
  double vStop{0.05};        // |v| below this counts as stopped

  // Orchestrator.
  int restartBudget{50};
  double timeoutSeconds{600.0};

  // Baselines.
  long baselineMaxIterations{100000000};
  double baselineGoalBias{0.1};
  double baselineStepFactor{2.0};       // joint-space step = factor * radius
  double prioritizedHorizonSeconds{240.0};

  [[nodiscard]] double regionRadius(double robotRadius) const {
    return regionRadiusFactor * robotRadius;
  }
  [[nodiscard]] double delta(double robotRadius) const {
    return deltaFactor * regionRadius(robotRadius);
  }
  [[nodiscard]] double stepSize(double robotRadius) const {
    return stepSizeFactor * robotRadius;
  }
  [[nodiscard]] double collisionResolution(double robotRadius) const {
    return collisionResFactor * robotRadius;
  }
  [[nodiscard]] double skeletonCell(double robotRadius) const {
    return skeletonCellFactor * robotRadius;
  }
};

inline void from_json(const nlohmann::json& j, PlannerConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("dt_grid", c.dtGrid);
  get("skeleton_cell_factor", c.skeletonCellFactor);
  get("collision_res_factor", c.collisionResFactor);
  get("mapf_step_seconds", c.mapfStepSeconds);
  get("mapf_horizon", c.mapfHorizon);
  get("cbs_node_budget", c.cbsNodeBudget);
  if (j.contains("capacity_rule")) {
    const std::string s = j.at("capacity_rule").get<std::string>();
    c.capacityRule = s == "diameter" ? CapacityRule::PerDiameter
                                     : CapacityRule::PerRadius;
  }
  if (j.contains("prohibition_match")) {
    const std::string s = j.at("prohibition_match").get<std::string>();
    c.prohibitionMatch =
        s == "subset" ? ProhibitionMatch::Subset : ProhibitionMatch::Exact;
  }
  get("region_radius_factor", c.regionRadiusFactor);
  get("delta_factor", c.deltaFactor);
  get("advance_step_factor", c.advanceStepFactor);
  get("advance_threshold_factor", c.advanceThresholdFactor);
  get("step_size_factor", c.stepSizeFactor);
  get("goal_tolerance", c.goalTolerance);
  get("n_fail", c.nFail);
  get("transition_ball_factor", c.transitionBallFactor);
  get("transition_goal_bias", c.transitionGoalBias);
  get("transition_goal_retry", c.transitionGoalRetry);
  get("k_controls", c.kControls);
  get("control_dt_min", c.controlDtMin);
  get("control_dt_max", c.controlDtMax);
  get("v_stop", c.vStop);
  get("restart_budget", c.restartBudget);
  get("timeout_seconds", c.timeoutSeconds);
  get("baseline_max_iterations", c.baselineMaxIterations);
  get("baseline_goal_bias", c.baselineGoalBias);
  get("baseline_step_factor", c.baselineStepFactor);
  get("prioritized_horizon_seconds", c.prioritizedHorizonSeconds);
}

inline void to_json(nlohmann::json& j, const PlannerConfig& c) {
  j = nlohmann::json{
      {"dt_grid", c.dtGrid},
      {"skeleton_cell_factor", c.skeletonCellFactor},
      {"collision_res_factor", c.collisionResFactor},
      {"mapf_step_seconds", c.mapfStepSeconds},
      {"mapf_horizon", c.mapfHorizon},
      {"cbs_node_budget", c.cbsNodeBudget},
      {"capacity_rule",
       c.capacityRule == CapacityRule::PerDiameter ? "diameter" : "radius"},
      {"prohibition_match",
       c.prohibitionMatch == ProhibitionMatch::Subset ? "subset" : "exact"},
      {"region_radius_factor", c.regionRadiusFactor},
      {"delta_factor", c.deltaFactor},
      {"advance_step_factor", c.advanceStepFactor},
      {"advance_threshold_factor", c.advanceThresholdFactor},
      {"step_size_factor", c.stepSizeFactor},
      {"goal_tolerance", c.goalTolerance},
      {"n_fail", c.nFail},
      {"transition_ball_factor", c.transitionBallFactor},
      {"transition_goal_bias", c.transitionGoalBias},
      {"transition_goal_retry", c.transitionGoalRetry},
      {"k_controls", c.kControls},
      {"control_dt_min", c.controlDtMin},
      {"control_dt_max", c.controlDtMax},
      {"v_stop", c.vStop},
      {"restart_budget", c.restartBudget},
      {"timeout_seconds", c.timeoutSeconds},
      {"baseline_max_iterations", c.baselineMaxIterations},
      {"baseline_goal_bias", c.baselineGoalBias},
      {"baseline_step_factor", c.baselineStepFactor},
      {"prioritized_horizon_seconds", c.prioritizedHorizonSeconds},
  };
}

}  // namespace gdash
