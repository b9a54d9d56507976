#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gdash/env.hpp"
#include "gdash/hypergraph.hpp"
#include "gdash/params.hpp"
#include "gdash/rng.hpp"
#include "gdash/skeleton.hpp"

namespace gdash {

/// Sampling ball that slides along a skeleton edge to sweep a corridor.
/// `offset` is arc length from the robot's entry end of the edge.
struct DynamicRegion {
  int edge{-1};
  bool forward{true};
  double offset{0.0};
  double radius{0.0};  // configured radius, before the clearance clamp
};

[[nodiscard]] inline Vec2 regionCenter(const WorkspaceSkeleton& sk,
                                       const DynamicRegion& r) {
  return sk.pointAlong(r.edge, r.offset, r.forward);
}

/// Sampling radius at the region's current center: the configured radius
/// clamped by the local clearance so samples stay near free space.
[[nodiscard]] inline double regionSamplingRadius(const Workspace& ws,
                                                 const Vec2& center,
                                                 double configured) {
  if (!ws.inBounds(center)) return 0.0;
  return std::max(0.0, std::min(configured, ws.clearance(center)));
}

/// One piecewise-constant control held for `steps` integration substeps.
struct ControlSegment {
  Control control;
  int steps{0};
};

/// Trajectory of one robot group on a fixed timestep grid.  states[i] holds
/// the group's configurations at time i*dt.  Kinodynamic paths also carry
/// the per-robot control tape that reproduces the states exactly.
struct LocalPath {
  std::vector<int> robots;  // ids, aligned with each state's configurations
  double dt{0.1};
  std::vector<CompositeConfiguration> states;
  bool kinodynamic{false};
  std::vector<std::vector<ControlSegment>> controls;  // per robot, kino only

  [[nodiscard]] double duration() const {
    return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1);
  }
};

/// Arc length travelled by one member of the group across the whole path.
[[nodiscard]] inline double pathLength(const LocalPath& path, std::size_t robotIdx) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.states.size(); ++i)
    len += distance(path.states[i - 1][robotIdx].position,
                    path.states[i][robotIdx].position);
  return len;
}

/// Re-integrates a kinodynamic path from its first state and returns the
/// largest per-component deviation against the stored states.  Holonomic
/// paths trivially replay to zero.
[[nodiscard]] inline double replayDeviation(const LocalPath& path,
                                            const std::vector<Robot>& robots) {
  if (!path.kinodynamic || path.states.empty()) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < path.robots.size(); ++i) {
    const Robot& robot = robots[path.robots[i]];
    Configuration q = path.states.front()[i];
    std::size_t at = 0;
    for (const ControlSegment& seg : path.controls[i]) {
      for (int s = 0; s < seg.steps; ++s) {
        q = integrate(robot, q, seg.control, path.dt);
        ++at;
        const Configuration& want = path.states[at][i];
        worst = std::max({worst, std::abs(q.position.x - want.position.x),
                          std::abs(q.position.y - want.position.y),
                          std::abs(q.heading - want.heading),
                          std::abs(q.speed - want.speed)});
      }
    }
    if (at + 1 != path.states.size())
      throw std::logic_error("control tape does not cover the path states");
  }
  return worst;
}

/// Search tree over composite configurations.  Each non-root node stores the
/// collision-checked segment from its parent: a straight motion for holonomic
/// groups, or one control per robot held for `steps` substeps.
struct MotionTreeNode {
  CompositeConfiguration q;
  int parent{-1};
  std::vector<Control> controls;  // kino only, aligned with the group
  int steps{0};                   // kino only: dt substeps from the parent
};

struct MotionTree {
  std::vector<MotionTreeNode> nodes;
};

namespace detail {

[[nodiscard]] inline double compositeDist2(const CompositeConfiguration& q,
                                           const std::vector<Vec2>& targets) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vec2 d = q[i].position - targets[i];
    d2 += d.x * d.x + d.y * d.y;
  }
  return d2;
}

[[nodiscard]] inline int nearestNode(const MotionTree& tree,
                                     const std::vector<Vec2>& targets) {
  int best = 0;
  double bestD = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    const double d = compositeDist2(tree.nodes[n].q, targets);
    if (d < bestD) {
      bestD = d;
      best = static_cast<int>(n);
    }
  }
  return best;
}

[[nodiscard]] inline bool pairwiseClear(const std::vector<Robot>& robots,
                                        const std::vector<int>& group,
                                        const CompositeConfiguration& q) {
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j)
      if (robotsCollide(robots[group[i]], q[i], robots[group[j]], q[j]))
        return false;
  return true;
}

/// Straight composite motion check: every robot's segment stays obstacle
/// valid and the group stays pairwise separated at interpolated samples.
[[nodiscard]] inline bool segmentValid(const Workspace& ws,
                                       const std::vector<Robot>& robots,
                                       const std::vector<int>& group,
                                       const CompositeConfiguration& from,
                                       const CompositeConfiguration& to,
                                       const PlannerConfig& cfg) {
  double resolution = std::numeric_limits<double>::infinity();
  double maxMove = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Robot& robot = robots[group[i]];
    const double res = cfg.collisionResolution(robot.radius);
    resolution = std::min(resolution, res);
    const double move = distance(from[i].position, to[i].position);
    maxMove = std::max(maxMove, move);
    // Samples are padded by half the spacing: the clearance field is
    // 1-Lipschitz, so every point of the segment (in particular the grid
    // states a later resampling emits) then clears the exact radius.
    const int n = std::max(1, static_cast<int>(std::ceil(move / res)));
    const double pad = 0.5 * move / n;
    for (int s = 0; s <= n; ++s) {
      const double t = static_cast<double>(s) / n;
      const Vec2 p = from[i].position + (to[i].position - from[i].position) * t;
      if (!ws.inBounds(p) || ws.clearance(p) < robot.radius + pad)
        return false;
    }
  }
  if (group.size() < 2) return true;
  const int n = std::max(1, static_cast<int>(std::ceil(maxMove / resolution)));
  for (int s = 0; s <= n; ++s) {
    const double t = static_cast<double>(s) / n;
    CompositeConfiguration q;
    q.configs.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      q[i].position = from[i].position + (to[i].position - from[i].position) * t;
    if (!pairwiseClear(robots, group, q)) return false;
  }
  return true;
}

/// Grows the tree one holonomic extension: a composite straight step of the
/// group's smallest step size from the nearest node toward `targets`.
[[nodiscard]] inline std::optional<int> holonomicExtend(
    const Workspace& ws, const std::vector<Robot>& robots,
    const std::vector<int>& group, MotionTree& tree,
    const std::vector<Vec2>& targets, const PlannerConfig& cfg) {
  const int from = nearestNode(tree, targets);
  const CompositeConfiguration& q0 = tree.nodes[from].q;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Vec2 d = targets[i] - q0[i].position;
    norm2 += d.x * d.x + d.y * d.y;
  }
  const double norm = std::sqrt(norm2);
  if (norm <= 1e-12) return std::nullopt;
  double step = std::numeric_limits<double>::infinity();
  for (int r : group) step = std::min(step, cfg.stepSize(robots[r].radius));
  const double scale = std::min(1.0, step / norm);
  CompositeConfiguration q1 = q0;
  for (std::size_t i = 0; i < group.size(); ++i)
    q1[i].position = q0[i].position + (targets[i] - q0[i].position) * scale;
  if (!segmentValid(ws, robots, group, q0, q1, cfg)) return std::nullopt;
  tree.nodes.push_back({std::move(q1), from, {}, 0});
  return static_cast<int>(tree.nodes.size()) - 1;
}

/// Heading of the edge tangent at the given arc offset, in travel direction.
[[nodiscard]] inline double headingAlong(const WorkspaceSkeleton& sk, int edge,
                                         double offset, bool fromU) {
  const double len = sk.edges[edge].length;
  const double h = std::min(0.05, 0.5 * len);
  const Vec2 a = sk.pointAlong(edge, std::max(0.0, offset - h), fromU);
  const Vec2 b = sk.pointAlong(edge, std::min(len, offset + h), fromU);
  if (distance(a, b) < 1e-12) return 0.0;
  return std::atan2(b.y - a.y, b.x - a.x);
}

[[nodiscard]] inline std::vector<CompositeConfiguration> chainToRoot(
    const MotionTree& tree, int leaf) {
  std::vector<CompositeConfiguration> chain;
  for (int n = leaf; n >= 0; n = tree.nodes[n].parent)
    chain.push_back(tree.nodes[n].q);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

/// Greedy waypoint pruning: from each kept waypoint jump to the farthest
/// later one reachable by a valid straight composite motion.  Deterministic,
/// endpoint preserving, and never worse than the input chain.
[[nodiscard]] inline std::vector<CompositeConfiguration> shortcutChain(
    const Workspace& ws, const std::vector<Robot>& robots,
    const std::vector<int>& group,
    const std::vector<CompositeConfiguration>& chain,
    const PlannerConfig& cfg) {
  if (chain.size() <= 2) return chain;
  std::vector<CompositeConfiguration> out{chain.front()};
  std::size_t i = 0;
  while (i + 1 < chain.size()) {
    std::size_t next = i + 1;
    for (std::size_t j = chain.size() - 1; j > i + 1; --j)
      if (segmentValid(ws, robots, group, chain[i], chain[j], cfg)) {
        next = j;
        break;
      }
    out.push_back(chain[next]);
    i = next;
  }
  return out;
}

/// Times a holonomic waypoint chain so every robot moves at most at its top
/// speed, then resamples it onto the dt grid (piecewise linear in time).
[[nodiscard]] inline LocalPath parameterizeHolonomic(
    const std::vector<Robot>& robots, const std::vector<int>& group,
    const std::vector<CompositeConfiguration>& chain, double dt) {
  LocalPath path;
  path.robots = group;
  path.dt = dt;
  std::vector<double> times{0.0};
  for (std::size_t s = 1; s < chain.size(); ++s) {
    double dur = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const double d = distance(chain[s - 1][i].position, chain[s][i].position);
      dur = std::max(dur, d / robots[group[i]].maxSpeed);
    }
    times.push_back(times.back() + dur);
  }
  const double total = times.back();
  const int n = std::max(1, static_cast<int>(std::ceil(total / dt - 1e-9)));
  path.states.reserve(static_cast<std::size_t>(n) + 1);
  std::size_t seg = 1;
  for (int j = 0; j <= n; ++j) {
    const double t = std::min(total, j * dt);
    while (seg + 1 < times.size() && times[seg] < t) ++seg;
    const double t0 = times[seg - 1];
    const double t1 = times[seg];
    const double a = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
    CompositeConfiguration q;
    q.configs.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      q[i].position = chain[seg - 1][i].position +
                      (chain[seg][i].position - chain[seg - 1][i].position) * a;
    path.states.push_back(std::move(q));
  }
  return path;
}

/// Exact re-check of the states a path exposes on the grid -- the same
/// predicate an independent check of the final trajectory applies.
[[nodiscard]] inline bool emittedStatesValid(const Workspace& ws,
                                             const std::vector<Robot>& robots,
                                             const std::vector<int>& group,
                                             const LocalPath& path) {
  for (const CompositeConfiguration& q : path.states) {
    for (std::size_t i = 0; i < group.size(); ++i)
      if (!configValid(ws, robots[group[i]], q[i])) return false;
    if (!pairwiseClear(robots, group, q)) return false;
  }
  return true;
}

/// Replays the tree branch ending at `leaf` substep by substep.
[[nodiscard]] inline LocalPath extractKinodynamic(
    const std::vector<Robot>& robots, const std::vector<int>& group,
    const MotionTree& tree, int leaf, double dt) {
  std::vector<int> branch;
  for (int n = leaf; n >= 0; n = tree.nodes[n].parent) branch.push_back(n);
  std::reverse(branch.begin(), branch.end());

  LocalPath path;
  path.robots = group;
  path.dt = dt;
  path.kinodynamic = true;
  path.controls.resize(group.size());
  path.states.push_back(tree.nodes[branch.front()].q);
  CompositeConfiguration q = tree.nodes[branch.front()].q;
  for (std::size_t b = 1; b < branch.size(); ++b) {
    const MotionTreeNode& node = tree.nodes[branch[b]];
    for (std::size_t i = 0; i < group.size(); ++i)
      path.controls[i].push_back({node.controls[i], node.steps});
    for (int s = 0; s < node.steps; ++s) {
      for (std::size_t i = 0; i < group.size(); ++i)
        q[i] = integrate(robots[group[i]], q[i], node.controls[i], dt);
      path.states.push_back(q);
    }
  }
  return path;
}

/// Uniform-deceleration straight-line stop: each robot holds steer 0 and
/// brakes at constant rate until rest.  Appends one node per substep and
/// returns the stopped leaf when the maneuver stays valid and every robot
/// halts within reach of its target; otherwise leaves the tree untouched.
[[nodiscard]] inline std::optional<int> brakeToStop(
    const Workspace& ws, const std::vector<Robot>& robots,
    const std::vector<int>& group, MotionTree& tree, int leaf,
    const std::vector<Vec2>& targets, const std::vector<double>& reach,
    const PlannerConfig& cfg) {
  const CompositeConfiguration& q0 = tree.nodes[leaf].q;
  std::vector<int> brakeSteps(group.size(), 0);
  std::vector<double> accel(group.size(), 0.0);
  int total = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double v = q0[i].speed;
    if (v == 0.0) continue;  // brake to exact rest so later holds do not drift
    const double a = robots[group[i]].car->maxAccel;
    brakeSteps[i] =
        static_cast<int>(std::ceil(std::abs(v) / (a * cfg.dtGrid) - 1e-12));
    accel[i] = -v / (brakeSteps[i] * cfg.dtGrid);
    total = std::max(total, brakeSteps[i]);
  }

  std::vector<CompositeConfiguration> states;
  std::vector<std::vector<Control>> controls;
  CompositeConfiguration q = q0;
  for (int s = 0; s < total; ++s) {
    std::vector<Control> us(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      us[i] = {s < brakeSteps[i] ? accel[i] : 0.0, 0.0};
      q[i] = integrate(robots[group[i]], q[i], us[i], cfg.dtGrid);
      if (!configValid(ws, robots[group[i]], q[i])) return std::nullopt;
    }
    if (!pairwiseClear(robots, group, q)) return std::nullopt;
    states.push_back(q);
    controls.push_back(std::move(us));
  }
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (std::abs(q[i].speed) > cfg.vStop) return std::nullopt;
    if (distance(q[i].position, targets[i]) > reach[i]) return std::nullopt;
  }
  int node = leaf;
  for (int s = 0; s < total; ++s) {
    tree.nodes.push_back({states[s], node, std::move(controls[s]), 1});
    node = static_cast<int>(tree.nodes.size()) - 1;
  }
  return node;
}

}  // namespace detail

/// Grows the tree one kinodynamic extension.  The node nearest `samples`
/// is expanded (random samples keep the search exploring); for each robot a
/// zero control plus random controls are integrated over a shared random
/// duration, and the valid candidate ending closest to the robot's entry in
/// `targets` is kept.  Returns the new node id, or nothing when no
/// collision-free extension exists.
[[nodiscard]] inline std::optional<int> kinoExtend(
    const Workspace& ws, const std::vector<Robot>& robots,
    const std::vector<int>& group, MotionTree& tree,
    const std::vector<Vec2>& samples, const std::vector<Vec2>& targets,
    const PlannerConfig& cfg, Rng& rng) {
  const int stepsMin =
      std::max(1, static_cast<int>(std::lround(cfg.controlDtMin / cfg.dtGrid)));
  const int stepsMax = std::max(
      stepsMin, static_cast<int>(std::lround(cfg.controlDtMax / cfg.dtGrid)));
  const int steps = rng.uniformInt(stepsMin, stepsMax);
  const int from = detail::nearestNode(tree, samples);

  // Pick the best obstacle-valid candidate per robot, tracking its substeps.
  std::vector<Control> chosen(group.size());
  std::vector<std::vector<Configuration>> trajectories(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Robot& robot = robots[group[i]];
    const CarModel& car = *robot.car;
    double bestD = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int c = 0; c < cfg.kControls; ++c) {
      Control u;
      if (c > 0) {
        u.accel = rng.uniform(-car.maxAccel, car.maxAccel);
        u.steer = rng.uniform(-car.maxSteer, car.maxSteer);
      }
      std::vector<Configuration> traj;
      traj.reserve(static_cast<std::size_t>(steps));
      Configuration q = tree.nodes[from].q[i];
      bool valid = true;
      for (int s = 0; s < steps; ++s) {
        q = integrate(robot, q, u, cfg.dtGrid);
        if (!configValid(ws, robot, q)) {
          valid = false;
          break;
        }
        traj.push_back(q);
      }
      if (!valid) continue;
      const double d = distance(q.position, targets[i]);
      if (d < bestD) {
        bestD = d;
        chosen[i] = u;
        trajectories[i] = std::move(traj);
        found = true;
      }
    }
    if (!found) return std::nullopt;
  }

  // The group must stay pairwise separated at every substep.
  for (int s = 0; s < steps; ++s) {
    CompositeConfiguration q;
    q.configs.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) q[i] = trajectories[i][s];
    if (!detail::pairwiseClear(robots, group, q)) return std::nullopt;
  }

  MotionTreeNode node;
  node.parent = from;
  node.controls = std::move(chosen);
  node.steps = steps;
  node.q.configs.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i)
    node.q[i] = trajectories[i].back();
  tree.nodes.push_back(std::move(node));
  return static_cast<int>(tree.nodes.size()) - 1;
}

namespace detail {

/// Per-robot geometry of one edge traversal: direction, reach target, and
/// the clearance-aware spacing from the edge ends.
struct EdgeLane {
  bool forward{true};
  double side{0.0};  // signed lane: +1/-1 in mixed-direction groups, else 0
  double delta{0.0};
  double goalOffset{0.0};
  double regionRadius{0.0};
  double advanceStep{0.0};
  double advanceThreshold{0.0};
};

[[nodiscard]] inline EdgeLane makeLane(const Robot& robot, double edgeLength,
                                       bool forward, const PlannerConfig& cfg) {
  EdgeLane lane;
  lane.forward = forward;
  // Short edges get a proportional spacing so a start-to-goal run remains.
  lane.delta = std::min(cfg.delta(robot.radius), 0.4 * edgeLength);
  lane.goalOffset = edgeLength - lane.delta;
  lane.regionRadius = cfg.regionRadius(robot.radius);
  lane.advanceStep = cfg.advanceStepFactor * lane.regionRadius;
  lane.advanceThreshold = cfg.advanceThresholdFactor * lane.regionRadius;
  return lane;
}

}  // namespace detail

/// Sliding-region RRT across one skeleton edge for every robot of an edge
/// element.  Starts are aligned with element.group and expected near each
/// robot's entry-side region.  Returns a dt-grid path, or nothing once
/// n_fail consecutive extensions fail (or the iteration cap is hit).
[[nodiscard]] inline std::optional<LocalPath> regionRrtEdge(
    const Workspace& ws, const WorkspaceSkeleton& sk,
    const std::vector<Robot>& robots, const TaskSpaceElement& element,
    const CompositeConfiguration& starts, const PlannerConfig& cfg, Rng& rng) {
  if (element.idle)
    throw std::invalid_argument("edge planner invoked on an idle element");
  const std::vector<int>& group = element.group;
  if (starts.size() != group.size())
    throw std::invalid_argument("start configurations do not match the group");
  const SkeletonEdge& edge = sk.edges[element.locus];

  const bool kino = robots[group.front()].kinodynamic();
  for (int r : group)
    if (robots[r].kinodynamic() != kino)
      throw std::invalid_argument("mixed dynamics within one group");

  // One lane and one region per robot; a robot listed twice keeps its first
  // traversal direction.
  std::vector<detail::EdgeLane> lanes(group.size());
  std::vector<DynamicRegion> regions(group.size());
  bool hasForward = false, hasBackward = false;
  for (const ElementMember& m : element.members)
    (m.forward ? hasForward : hasBackward) = true;
  const bool mixed = hasForward && hasBackward;
  for (std::size_t i = 0; i < group.size(); ++i) {
    bool forward = true;
    for (const ElementMember& m : element.members)
      if (m.robot == group[i]) {
        forward = m.forward;
        break;
      }
    lanes[i] = detail::makeLane(robots[group[i]], edge.length, forward, cfg);
    // Opposite flows keep to signed lanes off the ridge so they meet
    // side-by-side instead of head-on in the corridor.
    if (mixed) lanes[i].side = forward ? 1.0 : -1.0;
    regions[i] = {element.locus, forward, lanes[i].delta, lanes[i].regionRadius};
  }

  MotionTree tree;
  tree.nodes.push_back({starts, -1, {}, 0});

  auto centers = [&]() {
    std::vector<Vec2> c(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      Vec2 p = regionCenter(sk, regions[i]);
      if (lanes[i].side != 0.0) {
        const double offsetFromU = lanes[i].forward
                                       ? regions[i].offset
                                       : edge.length - regions[i].offset;
        const double h =
            detail::headingAlong(sk, element.locus, offsetFromU, true);
        const double room =
            std::max(0.0, ws.clearance(p) - robots[group[i]].radius);
        const double shift =
            lanes[i].side * 0.8 * std::min(room, lanes[i].regionRadius);
        p = {p.x - std::sin(h) * shift, p.y + std::cos(h) * shift};
      }
      c[i] = p;
    }
    return c;
  };
  auto offsetsDone = [&]() {
    for (std::size_t i = 0; i < group.size(); ++i)
      if (regions[i].offset < lanes[i].goalOffset - 1e-9) return false;
    return true;
  };

  int failures = 0;
  const long maxIterations = static_cast<long>(cfg.nFail) * 50;
  for (long iter = 0; iter < maxIterations && failures < cfg.nFail; ++iter) {
    const std::vector<Vec2> cs = centers();
    std::vector<Vec2> sample(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      sample[i] =
          rng.inDisk(cs[i], regionSamplingRadius(ws, cs[i], regions[i].radius));
    const std::optional<int> added =
        kino ? kinoExtend(ws, robots, group, tree, sample, cs, cfg, rng)
             : detail::holonomicExtend(ws, robots, group, tree, sample, cfg);
    if (!added) {
      ++failures;
      continue;
    }
    failures = 0;
    const CompositeConfiguration& q = tree.nodes[*added].q;

    // Each robot's region slides on its own once that robot catches up to
    // its center.  Opposite-direction traversals must not be synchronized:
    // their centers cross mid-edge, and a lockstep advance would pin both
    // robots to one point at the crossing instant.
    for (std::size_t i = 0; i < group.size(); ++i)
      if (distance(q[i].position, cs[i]) <= lanes[i].advanceThreshold)
        regions[i].offset = std::min(lanes[i].goalOffset,
                                     regions[i].offset + lanes[i].advanceStep);

    if (!offsetsDone()) continue;
    const std::vector<Vec2> goal = centers();
    // Robots finish inside the final region ball: a shared center cannot
    // demand point convergence of a pairwise-separated group.
    std::vector<double> reach(group.size());
    for (std::size_t i = 0; i < group.size(); ++i)
      reach[i] = std::max(cfg.goalTolerance,
                          regionSamplingRadius(ws, goal[i], regions[i].radius));
    if (kino) {
      // Cars must come to rest: append a straight uniform brake when it
      // lands the group inside the goal region.
      const auto stopped = detail::brakeToStop(ws, robots, group, tree,
                                               *added, goal, reach, cfg);
      if (stopped)
        return detail::extractKinodynamic(robots, group, tree, *stopped,
                                          cfg.dtGrid);
      continue;
    }
    bool atGoal = true;
    for (std::size_t i = 0; i < group.size(); ++i)
      if (distance(q[i].position, goal[i]) > reach[i]) {
        atGoal = false;
        break;
      }
    if (atGoal) {
      LocalPath path = detail::parameterizeHolonomic(
          robots, group,
          detail::shortcutChain(ws, robots, group,
                                detail::chainToRoot(tree, *added), cfg),
          cfg.dtGrid);
      if (detail::emittedStatesValid(ws, robots, group, path)) return path;
      ++failures;  // a grid state grazed a margin; keep searching
    }
  }
  return std::nullopt;
}

/// Composite RRT moving a transit group through a skeleton vertex: sampling
/// is confined to a ball around the vertex and aimed at a sampled goal where
/// every robot sits at least delta along its outgoing edge (robots retiring
/// to idle aim at the vertex itself).  The goal is resampled after every
/// goal_retry consecutive failures.  Returns nothing once n_fail consecutive
/// extensions fail or no collision-free goal placement exists.
[[nodiscard]] inline std::optional<LocalPath> rrtTransition(
    const Workspace& ws, const WorkspaceSkeleton& sk,
    const std::vector<Robot>& robots, int vertex,
    const std::vector<TransitRecord>& transits,
    const CompositeConfiguration& starts, const PlannerConfig& cfg, Rng& rng) {
  if (transits.empty())
    throw std::invalid_argument("transition requires at least one transit");
  std::vector<int> group;
  group.reserve(transits.size());
  for (const TransitRecord& t : transits) group.push_back(t.robot);
  if (starts.size() != group.size())
    throw std::invalid_argument("start configurations do not match the group");

  const bool kino = robots[group.front()].kinodynamic();
  for (int r : group)
    if (robots[r].kinodynamic() != kino)
      throw std::invalid_argument("mixed dynamics within one group");

  const Vec2 center = sk.vertices[vertex].position;
  double ballRadius = 0.0;
  for (int r : group)
    ballRadius = std::max(ballRadius,
                          cfg.transitionBallFactor * cfg.delta(robots[r].radius));

  // Draw one candidate goal composite: each robot a point at [delta, 2*delta]
  // along its outgoing edge (or the vertex when it retires to idle).
  auto sampleGoal = [&]() -> std::optional<CompositeConfiguration> {
    for (int attempt = 0; attempt < 200; ++attempt) {
      CompositeConfiguration goal;
      goal.configs.resize(group.size());
      bool ok = true;
      for (std::size_t i = 0; i < group.size(); ++i) {
        const Robot& robot = robots[group[i]];
        Configuration g;
        if (transits[i].outEdge >= 0) {
          const SkeletonEdge& out = sk.edges[transits[i].outEdge];
          const bool fromU = out.u == vertex;
          const double delta = std::min(cfg.delta(robot.radius), 0.4 * out.length);
          const double hi = std::min(2.0 * delta, out.length - delta);
          const double off = rng.uniform(delta, std::max(delta, hi));
          g.position = sk.pointAlong(out.id, off, fromU);
          g.heading = detail::headingAlong(sk, out.id, off, fromU);
        } else {
          g.position = center;
          g.heading = starts[i].heading;
        }
        g.speed = 0.0;
        if (!configValid(ws, robot, g)) {
          ok = false;
          break;
        }
        goal[i] = g;
      }
      if (ok && detail::pairwiseClear(robots, group, goal)) return goal;
    }
    return std::nullopt;
  };

  std::optional<CompositeConfiguration> goal = sampleGoal();
  if (!goal) return std::nullopt;
  auto goalTargets = [&]() {
    std::vector<Vec2> t(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) t[i] = (*goal)[i].position;
    return t;
  };

  MotionTree tree;
  tree.nodes.push_back({starts, -1, {}, 0});

  int failures = 0;
  int sinceGoalResample = 0;
  const long maxIterations = static_cast<long>(cfg.nFail) * 50;
  for (long iter = 0; iter < maxIterations && failures < cfg.nFail; ++iter) {
    std::vector<Vec2> targets;
    if (rng.chance(cfg.transitionGoalBias)) {
      targets = goalTargets();
    } else {
      targets.resize(group.size());
      for (auto& t : targets) t = rng.inDisk(center, ballRadius);
    }

    const std::optional<int> added =
        kino ? kinoExtend(ws, robots, group, tree, targets, targets, cfg, rng)
             : detail::holonomicExtend(ws, robots, group, tree, targets, cfg);
    if (!added) {
      ++failures;
      if (++sinceGoalResample >= cfg.transitionGoalRetry) {
        sinceGoalResample = 0;
        if (auto g = sampleGoal()) goal = std::move(g);
      }
      continue;
    }
    failures = 0;

    if (kino) {
      const std::vector<double> reach(group.size(), cfg.goalTolerance);
      const auto stopped = detail::brakeToStop(ws, robots, group, tree, *added,
                                               goalTargets(), reach, cfg);
      if (stopped)
        return detail::extractKinodynamic(robots, group, tree, *stopped,
                                          cfg.dtGrid);
      continue;
    }
    const CompositeConfiguration& q = tree.nodes[*added].q;
    bool atGoal = true;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (distance(q[i].position, (*goal)[i].position) > cfg.goalTolerance) {
        atGoal = false;
        break;
      }
    }
    if (atGoal) {
      LocalPath path = detail::parameterizeHolonomic(
          robots, group,
          detail::shortcutChain(ws, robots, group,
                                detail::chainToRoot(tree, *added), cfg),
          cfg.dtGrid);
      if (detail::emittedStatesValid(ws, robots, group, path)) return path;
      ++failures;  // a grid state grazed a margin; keep searching
    }
  }
  return std::nullopt;
}

/// Point-to-point composite RRT stitching exact configurations together
/// (start/goal attachment moves).  Sampling uses per-robot disks spanning the
/// start-goal gap with a bias toward the goal; kinodynamic robots finish at
/// rest via a straight brake.
[[nodiscard]] inline std::optional<LocalPath> rrtConnect(
    const Workspace& ws, const std::vector<Robot>& robots,
    const std::vector<int>& group, const CompositeConfiguration& starts,
    const CompositeConfiguration& goals, const PlannerConfig& cfg, Rng& rng) {
  if (group.empty())
    throw std::invalid_argument("attachment requires at least one robot");
  if (starts.size() != group.size() || goals.size() != group.size())
    throw std::invalid_argument("configurations do not match the group");
  const bool kino = robots[group.front()].kinodynamic();
  for (int r : group)
    if (robots[r].kinodynamic() != kino)
      throw std::invalid_argument("mixed dynamics within one group");

  std::vector<Vec2> goalTargets(group.size());
  for (std::size_t i = 0; i < group.size(); ++i)
    goalTargets[i] = goals[i].position;

  auto finished = [&](const CompositeConfiguration& q) {
    for (std::size_t i = 0; i < group.size(); ++i)
      if (distance(q[i].position, goalTargets[i]) > cfg.goalTolerance)
        return false;
    return true;
  };

  // Degenerate request: already at the goal (kinodynamic starts are at rest).
  if (finished(starts) && (!kino || [&] {
        for (std::size_t i = 0; i < group.size(); ++i)
          if (std::abs(starts[i].speed) > cfg.vStop) return false;
        return true;
      }())) {
    LocalPath path;
    path.robots = group;
    path.dt = cfg.dtGrid;
    path.states = {starts};
    path.kinodynamic = kino;
    path.controls.resize(group.size());
    return path;
  }

  // One sampling disk per robot, covering its own start-goal gap.
  std::vector<Vec2> diskCenter(group.size());
  std::vector<double> diskRadius(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    diskCenter[i] = (starts[i].position + goalTargets[i]) * 0.5;
    diskRadius[i] = 0.75 * distance(starts[i].position, goalTargets[i]) +
                    cfg.transitionBallFactor * cfg.delta(robots[group[i]].radius);
  }

  MotionTree tree;
  tree.nodes.push_back({starts, -1, {}, 0});

  int failures = 0;
  const long maxIterations = static_cast<long>(cfg.nFail) * 50;
  for (long iter = 0; iter < maxIterations && failures < cfg.nFail; ++iter) {
    std::vector<Vec2> targets;
    if (rng.chance(cfg.transitionGoalBias)) {
      targets = goalTargets;
    } else {
      targets.resize(group.size());
      for (std::size_t i = 0; i < group.size(); ++i)
        targets[i] = rng.inDisk(diskCenter[i], diskRadius[i]);
    }

    const std::optional<int> added =
        kino ? kinoExtend(ws, robots, group, tree, targets, goalTargets, cfg,
                          rng)
             : detail::holonomicExtend(ws, robots, group, tree, targets, cfg);
    if (!added) {
      ++failures;
      continue;
    }
    failures = 0;

    if (kino) {
      const std::vector<double> reach(group.size(), cfg.goalTolerance);
      const auto stopped = detail::brakeToStop(ws, robots, group, tree, *added,
                                               goalTargets, reach, cfg);
      if (stopped)
        return detail::extractKinodynamic(robots, group, tree, *stopped,
                                          cfg.dtGrid);
      continue;
    }
    if (finished(tree.nodes[*added].q)) {
      LocalPath path = detail::parameterizeHolonomic(
          robots, group,
          detail::shortcutChain(ws, robots, group,
                                detail::chainToRoot(tree, *added), cfg),
          cfg.dtGrid);
      if (detail::emittedStatesValid(ws, robots, group, path)) return path;
      ++failures;  // a grid state grazed a margin; keep searching
    }
  }
  return std::nullopt;
}

}  // namespace gdash
