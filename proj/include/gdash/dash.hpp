#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gdash/hypergraph.hpp"
#include "gdash/planners.hpp"
#include "gdash/scenario.hpp"
#include "gdash/solution.hpp"

namespace gdash {

/// A pairwise collision between two scheduled paths, earliest instant first.
struct MotionConflict {
  int itemA{-1};  // entry ids inside the motion hypergraph
  int itemB{-1};
  double time{0.0};
  int robotA{-1};
  int robotB{-1};
};

/// One planned motion placed on the global step grid.
struct ScheduledPath {
  int id{-1};
  std::string label;
  std::vector<int> robots;  // aligned with path.robots
  long startStep{0};
  LocalPath path;
  // Constraint to inject when this item collides or proves unplannable.
  // Absent for motions pinned to fixed endpoints (waiting at the start).
  std::optional<Prohibition> origin;

  [[nodiscard]] long endStep() const {
    return startStep + static_cast<long>(path.states.size()) - 1;
  }
  [[nodiscard]] double t0() const { return path.dt * startStep; }
  [[nodiscard]] double t1() const { return path.dt * endStep(); }
};

/// The growing composite plan: scheduled paths plus each robot's frontier
/// (where and when its last scheduled motion ends).
struct MotionHypergraph {
  std::vector<ScheduledPath> entries;
  std::map<int, long> completionStep;
  std::map<int, Configuration> frontier;
};

/// Checks a candidate path against every scheduled path whose step window
/// overlaps it, sampling shared grid instants only; disjoint windows are
/// skipped outright.  Returns at most one conflict per existing entry,
/// earliest first.
[[nodiscard]] inline std::vector<MotionConflict> findCollisions(
    const MotionHypergraph& mh, const ScheduledPath& cand,
    const std::vector<Robot>& robots, PlanStats* stats = nullptr) {
  std::vector<MotionConflict> out;
  const long c0 = cand.startStep;
  const long c1 = cand.endStep();
  for (const ScheduledPath& e : mh.entries) {
    const long e0 = e.startStep;
    const long e1 = e.endStep();
    const long lo = std::max(c0, e0);
    const long hi = std::min(c1, e1);
    if (lo > hi) continue;  // disjoint windows are never sampled
    if (stats) ++stats->collisionPairsChecked;
    bool hit = false;
    for (long k = lo; k <= hi && !hit; ++k) {
      const CompositeConfiguration& qa = e.path.states[k - e0];
      const CompositeConfiguration& qb = cand.path.states[k - c0];
      for (std::size_t ia = 0; ia < e.robots.size() && !hit; ++ia)
        for (std::size_t ib = 0; ib < cand.robots.size(); ++ib) {
          if (e.robots[ia] == cand.robots[ib]) continue;
          if (robotsCollide(robots[e.robots[ia]], qa[ia],
                            robots[cand.robots[ib]], qb[ib])) {
            out.push_back({e.id, cand.id, cand.path.dt * k, e.robots[ia],
                           cand.robots[ib]});
            hit = true;
            break;
          }
        }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MotionConflict& a, const MotionConflict& b) {
              return a.time < b.time;
            });
  return out;
}

namespace detail {

[[nodiscard]] inline bool sameProhibition(const Prohibition& a,
                                          const Prohibition& b) {
  return a.kind == b.kind && a.locus == b.locus && a.robots == b.robots &&
         a.inEdges == b.inEdges && a.outEdges == b.outEdges &&
         a.timed == b.timed && a.begin == b.begin && a.end == b.end;
}

[[nodiscard]] inline Prohibition prohibitionForElement(
    const TaskSpaceElement& el, bool timed) {
  Prohibition p;
  p.kind = el.idle ? Prohibition::Kind::VertexOccupancy
                   : Prohibition::Kind::EdgeGroup;
  p.locus = el.locus;
  p.robots = el.group;
  p.timed = timed;
  p.begin = el.begin;
  p.end = el.end;
  return p;
}

[[nodiscard]] inline Prohibition prohibitionForArc(const Hyperarc& arc) {
  Prohibition p;
  p.kind = Prohibition::Kind::VertexGroup;
  p.locus = arc.vertex;
  for (const TransitRecord& t : arc.transits) {
    p.robots.push_back(t.robot);
    p.inEdges.push_back(t.inEdge);
    p.outEdges.push_back(t.outEdge);
  }
  p.timed = true;
  p.begin = arc.step;
  p.end = arc.step + 1;
  return p;
}

/// Constraint charged to an element when one of its motions offends.  Idle
/// stretches pinned to a fixed endpoint (waiting at the start before moving,
/// or parked at the goal) cannot be forbidden outright -- every plan must
/// contain them -- so the robot's adjacent traverse is charged instead.
[[nodiscard]] inline std::optional<Prohibition> originForElement(
    const TaskSpaceHypergraph& tsh, const TaskSpaceElement& el) {
  if (!el.idle) return prohibitionForElement(el, true);
  const bool pinnedStart = el.begin == 0;
  const bool pinnedEnd = el.end >= tsh.makespan;
  if (!pinnedStart && !pinnedEnd) return prohibitionForElement(el, true);
  const int robot = el.group.front();
  const TaskSpaceElement* adjacent = nullptr;
  for (const TaskSpaceElement& other : tsh.elements) {
    if (other.idle) continue;
    bool mine = false;
    for (int r : other.group) mine |= r == robot;
    if (!mine) continue;
    if (!adjacent || (pinnedStart ? other.begin < adjacent->begin
                                  : other.end > adjacent->end))
      adjacent = &other;
  }
  if (!adjacent) return std::nullopt;  // the robot never moves
  return prohibitionForElement(*adjacent, true);
}

/// A stationary single-robot path of the given number of grid steps.
[[nodiscard]] inline LocalPath holdPath(int robot, const Configuration& q,
                                        int steps, bool kino, double dt) {
  LocalPath p;
  p.robots = {robot};
  p.dt = dt;
  p.kinodynamic = kino;
  p.states.assign(static_cast<std::size_t>(steps) + 1,
                  CompositeConfiguration{{q}});
  p.controls.resize(1);
  if (kino && steps > 0) p.controls[0].push_back({{0.0, 0.0}, steps});
  return p;
}

}  // namespace detail

/// Everything plan() reports: the solution when one was found, effort
/// counters, the constraints accumulated across restarts, and one log line
/// per restart describing its cause.
struct PlanOutcome {
  std::optional<Solution> solution;
  PlanStats stats;
  std::vector<Prohibition> constraints;
  std::vector<std::string> log;

  [[nodiscard]] bool success() const { return solution.has_value(); }
  [[nodiscard]] std::string logText() const {
    std::string text;
    for (const std::string& line : log) {
      text += line;
      text += '\n';
    }
    return text;
  }
};

/// One guide-search round: the constraint set it ran under and the routes it
/// produced.  Collected (optionally) so callers can audit that every round
/// honored every active prohibition.
struct GuideStep {
  std::vector<Prohibition> constraints;
  MapfSolution routes;
};

/// Hybrid planner: a capacity-constrained skeleton search supplies each
/// robot's route; routes are grouped into shared-edge elements and boundary
/// transitions; each item is realized by a region-guided local planner in
/// dependency order, with stationary holds synchronizing group starts.
/// Cross-item collisions and planner failures become prohibition constraints
/// on the skeleton search, and the whole pipeline restarts until it composes
/// a conflict-free solution or exhausts its restart budget.
[[nodiscard]] inline PlanOutcome plan(const Scenario& scenario,
                                      const PlannerConfig& cfg,
                                      std::vector<GuideStep>* guideTrace = nullptr) {
  checkScenario(scenario);
  const auto wallStart = std::chrono::steady_clock::now();
  PlanOutcome out;
  const std::vector<Robot>& robots = scenario.robots;
  const Workspace& ws = scenario.workspace;
  const double dt = cfg.dtGrid;
  Rng rng(scenario.seed);

  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         wallStart)
        .count();
  };
  auto finishStats = [&]() {
    out.stats.constraints = static_cast<int>(out.constraints.size());
    out.stats.planningSeconds = elapsed();
  };
  auto fail = [&](const std::string& why) {
    out.log.push_back("failure: " + why);
    finishStats();
    return out;
  };

  double minRadius = std::numeric_limits<double>::infinity();
  for (const Robot& r : robots) minRadius = std::min(minRadius, r.radius);
  WorkspaceSkeleton sk =
      scenario.skeleton
          ? *scenario.skeleton
          : buildGridSkeleton(ws, cfg.skeletonCell(minRadius));
  if (sk.vertices.empty()) return fail("workspace admits no skeleton");

  const MapfProblem prob = makeMapfProblem(sk, robots, cfg);
  std::vector<SkeletonQuery> queries(robots.size());
  for (std::size_t i = 0; i < robots.size(); ++i) {
    queries[i].robot = static_cast<int>(i);
    queries[i].startVertex = projectToVertex(sk, scenario.starts[i].position);
    queries[i].goalVertex = projectToVertex(sk, scenario.goals[i].position);
  }

  const bool kino = scenario.kinodynamic();
  // True when the constraint was not already present.
  auto addConstraint = [&](const Prohibition& p) {
    for (const Prohibition& q : out.constraints)
      if (detail::sameProhibition(p, q)) return false;
    out.constraints.push_back(p);
    return true;
  };

  for (int attempt = 0; attempt <= cfg.restartBudget; ++attempt) {
    if (elapsed() > cfg.timeoutSeconds) return fail("timeout");
    out.stats.restarts = attempt;

    const CbsResult guide = cbs(prob, queries, out.constraints, cfg);
    out.stats.iterations += guide.expansions;
    if (!guide.success)
      return fail("skeleton search infeasible under " +
                  std::to_string(out.constraints.size()) +
                  " constraints: " + guide.failure);
    if (guideTrace) guideTrace->push_back({out.constraints, guide.solution});

    const TaskSpaceHypergraph tsh = buildTsh(sk, guide.solution);
    std::vector<OrderedItem> order;
    try {
      order = orderByDependency(tsh);
    } catch (const std::runtime_error&) {
      const std::vector<int> stuck = dependencyCycleElements(tsh);
      std::vector<int> chosen;
      for (int e : stuck)
        if (!tsh.elements[e].idle && tsh.elements[e].group.size() >= 2)
          chosen.push_back(e);
      if (chosen.empty())
        for (int e : stuck)
          if (!tsh.elements[e].idle) chosen.push_back(e);
      if (chosen.empty())
        return fail("dependency cycle without chargeable elements");
      for (int e : chosen)
        addConstraint(detail::prohibitionForElement(tsh.elements[e], true));
      out.log.push_back(
          "restart " + std::to_string(attempt + 1) + ": dependency cycle over " +
          std::to_string(stuck.size()) + " elements; constraints=" +
          std::to_string(out.constraints.size()));
      continue;
    }

    // Fresh motion hypergraph for this attempt.
    MotionHypergraph mh;
    std::vector<bool> attached(robots.size(), false);
    std::vector<std::optional<Prohibition>> lastOrigin(robots.size());
    std::map<int, long> elementEndStep;
    std::string cause;

    auto describeConflict = [&](const MotionConflict& c,
                                const ScheduledPath& cand) {
      std::ostringstream s;
      s << "conflict " << mh.entries[c.itemA].label << " x " << cand.label
        << " at t=" << c.time << " robots " << c.robotA << "/" << c.robotB;
      return s.str();
    };

    // Schedules one path; on collision charges both parties and reports
    // the restart cause.
    auto addEntry = [&](std::string label, std::vector<int> group,
                        long startStep, LocalPath path,
                        std::optional<Prohibition> origin) {
      ScheduledPath cand;
      cand.id = static_cast<int>(mh.entries.size());
      cand.label = std::move(label);
      cand.robots = std::move(group);
      cand.startStep = startStep;
      cand.path = std::move(path);
      cand.origin = std::move(origin);
      const std::vector<MotionConflict> conflicts =
          findCollisions(mh, cand, robots, &out.stats);
      if (!conflicts.empty()) {
        const MotionConflict& c = conflicts.front();
        cause = describeConflict(c, cand);
        if (cand.origin) addConstraint(*cand.origin);
        if (mh.entries[c.itemA].origin)
          addConstraint(*mh.entries[c.itemA].origin);
        return false;
      }
      for (std::size_t i = 0; i < cand.robots.size(); ++i) {
        mh.completionStep[cand.robots[i]] = cand.endStep();
        mh.frontier[cand.robots[i]] = cand.path.states.back()[i];
      }
      mh.entries.push_back(std::move(cand));
      return true;
    };

    // Brings every robot of a group to the given start step by holding it
    // in place at its frontier.
    auto ensureArrival = [&](const std::vector<int>& group, long startStep,
                             const std::optional<Prohibition>& origin) {
      for (int r : group) {
        const long gap = startStep - mh.completionStep[r];
        if (gap <= 0) continue;
        if (!addEntry("hold " + std::to_string(r), {r}, mh.completionStep[r],
                      detail::holdPath(r, mh.frontier[r],
                                       static_cast<int>(gap), kino, dt),
                      origin ? origin : lastOrigin[r]))
          return false;
      }
      return true;
    };

    auto groupStartStep = [&](const std::vector<int>& group) {
      long s = 0;
      for (int r : group) s = std::max(s, mh.completionStep[r]);
      return s;
    };

    for (int r = 0; r < static_cast<int>(robots.size()); ++r) {
      mh.completionStep[r] = 0;
      mh.frontier[r] = scenario.starts[r];
    }

    bool restart = false;
    bool hardFail = false;
    std::string hardWhy;

    // Entry point for a robot's first traverse: the near-side spacing
    // offset along that edge, facing travel.
    auto edgeEntry = [&](const TaskSpaceElement& el, int robot) {
      const SkeletonEdge& edge = sk.edges[el.locus];
      bool forward = true;
      for (const ElementMember& m : el.members)
        if (m.robot == robot) {
          forward = m.forward;
          break;
        }
      const double delta =
          std::min(cfg.delta(robots[robot].radius), 0.4 * edge.length);
      Configuration q;
      q.position = sk.pointAlong(el.locus, delta, forward);
      q.heading = detail::headingAlong(sk, el.locus, delta, forward);
      q.speed = 0.0;
      return q;
    };

    // Stitches a robot's true start onto its first edge's entry point.
    auto attachStart = [&](int robot, const TaskSpaceElement& firstElement) {
      if (attached[robot]) return true;
      const Configuration target = edgeEntry(firstElement, robot);
      CompositeConfiguration from, to;
      from.configs = {mh.frontier[robot]};
      to.configs = {target};
      std::optional<LocalPath> path =
          rrtConnect(ws, robots, {robot}, from, to, cfg, rng);
      if (!path) {
        addConstraint(detail::prohibitionForElement(firstElement, false));
        cause = "start attachment for robot " + std::to_string(robot) +
                " unplannable";
        return false;
      }
      attached[robot] = true;
      if (path->states.size() <= 1) return true;  // already at the entry
      return addEntry("start " + std::to_string(robot), {robot},
                      mh.completionStep[robot], std::move(*path),
                      detail::prohibitionForElement(firstElement, true));
    };

    // --- main ordered sweep ---
    for (const OrderedItem& item : order) {
      if (restart || hardFail) break;
      if (elapsed() > cfg.timeoutSeconds) return fail("timeout");

      if (item.isElement) {
        const TaskSpaceElement& el = tsh.elements[item.id];
        if (el.idle) continue;  // realized by holds and terminal padding
        const std::optional<Prohibition> origin =
            detail::originForElement(tsh, el);

        for (int r : el.group)
          if (!attached[r]) {
            if (!attachStart(r, el)) {
              restart = true;
              break;
            }
          }
        if (restart) break;

        const long startStep = groupStartStep(el.group);
        if (!ensureArrival(el.group, startStep, origin)) {
          restart = true;
          break;
        }
        CompositeConfiguration starts;
        for (int r : el.group) starts.configs.push_back(mh.frontier[r]);
        std::optional<LocalPath> path =
            regionRrtEdge(ws, sk, robots, el, starts, cfg, rng);
        std::ostringstream label;
        label << "element " << el.id << " [edge " << el.locus << "]";
        if (!path) {
          addConstraint(detail::prohibitionForElement(el, false));
          cause = label.str() + " unplannable";
          restart = true;
          break;
        }
        if (!addEntry(label.str(), el.group, startStep, std::move(*path),
                      origin)) {
          restart = true;
          break;
        }
        elementEndStep[el.id] = mh.completionStep[el.group.front()];
        for (int r : el.group) lastOrigin[r] = origin;
      } else {
        const Hyperarc& arc = tsh.hyperarcs[item.id];
        if (arc.kind == Hyperarc::Kind::Composition)
          continue;  // a group change carries no motion of its own
        std::vector<int> group;
        for (const TransitRecord& t : arc.transits) group.push_back(t.robot);

        long startStep = groupStartStep(group);
        if (arc.kind == Hyperarc::Kind::TransitionVertex)
          // Synchronization barrier: wait for every tail element to finish.
          for (int e : arc.tail) {
            const auto it = elementEndStep.find(e);
            if (it != elementEndStep.end())
              startStep = std::max(startStep, it->second);
            else
              for (const ElementMember& m : tsh.elements[e].members)
                startStep = std::max(startStep, mh.completionStep[m.robot]);
          }

        const Prohibition origin = detail::prohibitionForArc(arc);
        if (!ensureArrival(group, startStep, origin)) {
          restart = true;
          break;
        }
        CompositeConfiguration starts;
        for (int r : group) starts.configs.push_back(mh.frontier[r]);
        std::optional<LocalPath> path = rrtTransition(
            ws, sk, robots, arc.vertex, arc.transits, starts, cfg, rng);
        std::ostringstream label;
        label << "arc " << arc.id << " [vertex " << arc.vertex << "]";
        if (!path) {
          Prohibition timeless = origin;
          timeless.timed = false;
          addConstraint(timeless);
          cause = label.str() + " unplannable";
          restart = true;
          break;
        }
        if (!addEntry(label.str(), group, startStep, std::move(*path),
                      origin)) {
          restart = true;
          break;
        }
        for (int r : group) {
          attached[r] = true;  // the arc rooted at its true start counts
          lastOrigin[r] = origin;
        }
      }
    }

    // --- goal attachments ---
    if (!restart && !hardFail) {
      for (int r = 0; r < static_cast<int>(robots.size()); ++r) {
        if (elapsed() > cfg.timeoutSeconds) return fail("timeout");
        if (distance(mh.frontier[r].position, scenario.goals[r].position) <=
            cfg.goalTolerance)
          continue;
        CompositeConfiguration from, to;
        from.configs = {mh.frontier[r]};
        to.configs = {scenario.goals[r]};
        std::optional<LocalPath> path =
            rrtConnect(ws, robots, {r}, from, to, cfg, rng);
        if (!path) {
          if (lastOrigin[r]) {
            Prohibition timeless = *lastOrigin[r];
            timeless.timed = false;
            addConstraint(timeless);
            cause = "goal attachment for robot " + std::to_string(r) +
                    " unplannable";
            restart = true;
          } else {
            hardFail = true;
            hardWhy = "robot " + std::to_string(r) +
                      " cannot reach its goal from its start";
          }
          break;
        }
        if (path->states.size() <= 1) continue;
        if (!addEntry("goal " + std::to_string(r), {r}, mh.completionStep[r],
                      std::move(*path), lastOrigin[r])) {
          restart = true;
          break;
        }
      }
    }

    // --- terminal padding to the global makespan ---
    if (!restart && !hardFail) {
      long makespanStep = 0;
      for (const auto& [r, s] : mh.completionStep)
        makespanStep = std::max(makespanStep, s);
      for (int r = 0; r < static_cast<int>(robots.size()); ++r)
        if (!ensureArrival({r}, makespanStep, lastOrigin[r])) {
          restart = true;
          break;
        }
      if (!restart) {
        // --- extraction ---
        Solution sol;
        sol.dt = dt;
        sol.robots.resize(robots.size());
        bool wellFormed = true;
        for (int r = 0; r < static_cast<int>(robots.size()); ++r) {
          RobotTrajectory& rt = sol.robots[r];
          rt.id = r;
          std::vector<const ScheduledPath*> mine;
          for (const ScheduledPath& e : mh.entries)
            for (int q : e.robots)
              if (q == r) mine.push_back(&e);
          std::sort(mine.begin(), mine.end(),
                    [](const ScheduledPath* a, const ScheduledPath* b) {
                      return a->startStep < b->startStep;
                    });
          long at = 0;
          rt.states.push_back(scenario.starts[r]);
          for (const ScheduledPath* e : mine) {
            if (e->startStep != at) {
              wellFormed = false;
              break;
            }
            std::size_t idx = 0;
            for (std::size_t i = 0; i < e->robots.size(); ++i)
              if (e->robots[i] == r) idx = i;
            for (std::size_t k = 1; k < e->path.states.size(); ++k)
              rt.states.push_back(e->path.states[k][idx]);
            if (kino)
              for (const ControlSegment& seg : e->path.controls[idx])
                for (int s = 0; s < seg.steps; ++s)
                  rt.controls.push_back(seg.control);
            at = e->endStep();
          }
          if (at != makespanStep) wellFormed = false;
          if (!wellFormed) break;
        }
        if (!wellFormed)
          return fail("internal error: composed timeline has gaps");
        out.stats.makespanSeconds = dt * makespanStep;
        finishStats();
        sol.stats = out.stats;
        out.log.push_back(
            "success after " + std::to_string(attempt) + " restarts: makespan " +
            std::to_string(sol.stats.makespanSeconds) + "s, " +
            std::to_string(out.constraints.size()) + " constraints");
        out.solution = std::move(sol);
        return out;
      }
    }

    if (hardFail) return fail(hardWhy);
    out.log.push_back("restart " + std::to_string(attempt + 1) + ": " + cause +
                      "; constraints=" + std::to_string(out.constraints.size()));
  }
  return fail("restart budget exhausted (" + std::to_string(cfg.restartBudget) +
              ")");
}

}  // namespace gdash
