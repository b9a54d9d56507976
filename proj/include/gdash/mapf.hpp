#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gdash/env.hpp"
#include "gdash/params.hpp"
#include "gdash/skeleton.hpp"

namespace gdash {

/// One robot's routing request between skeleton vertices.
struct SkeletonQuery {
  int robot{0};
  int startVertex{-1};
  int goalVertex{-1};
};

enum class MoveKind { Traverse, Wait };

/// A timed action on the skeleton.  Steps are half-open: a traverse
/// occupies its edge on [enter, exit) and stamps the endpoint vertices at
/// the enter and exit instants; a wait occupies its vertex on [enter, exit].
struct Move {
  MoveKind kind{MoveKind::Wait};
  int locus{-1};       // edge id (traverse) or vertex id (wait)
  bool forward{true};  // traverse direction u -> v
  int enter{0};
  int exit{0};
};

struct TimedSkeletonPath {
  int robot{0};
  int startVertex{-1};
  int goalVertex{-1};
  std::vector<Move> moves;  // contiguous in time, waits merged

  [[nodiscard]] int arrival() const {
    return moves.empty() ? 0 : moves.back().exit;
  }
};

struct MapfSolution {
  std::vector<TimedSkeletonPath> paths;
  int makespan{0};

  void recomputeMakespan() {
    makespan = 0;
    for (const auto& p : paths) makespan = std::max(makespan, p.arrival());
  }
};

/// Per-robot ban from a locus over a half-open step window.
struct CbsConstraint {
  int robot{0};
  bool onEdge{true};
  int locus{-1};
  int begin{0};
  int end{0};  // exclusive
};

/// A forbidden grouping injected by the motion layer.  Failure-derived
/// prohibitions are timeless; conflict-derived ones carry a step window.
struct Prohibition {
  enum class Kind { EdgeGroup, VertexGroup, VertexOccupancy };
  Kind kind{Kind::EdgeGroup};
  int locus{-1};
  std::vector<int> robots;   // sorted ascending, non-empty
  std::vector<int> inEdges;  // VertexGroup only, aligned with robots, -1 none
  std::vector<int> outEdges;
  bool timed{false};
  int begin{0};
  int end{0};  // half-open window when timed

  [[nodiscard]] bool inWindow(int step) const {
    return !timed || (step >= begin && step < end);
  }
};

struct CapacityConflict {
  bool onEdge{true};
  int locus{-1};
  int step{0};
  std::vector<int> robots;
};

struct ProhibitionViolation {
  int prohibitionIndex{-1};
  int begin{0};
  int end{0};  // maximal half-open violating window around the earliest hit
};

/// Skeleton plus the discretization CBS searches over.
struct MapfProblem {
  const WorkspaceSkeleton* skeleton{nullptr};
  CapacityAnnotation caps;
  std::vector<int> edgeSteps;
  int horizon{256};
};

inline MapfProblem makeMapfProblem(const WorkspaceSkeleton& sk,
                                   const std::vector<Robot>& robots,
                                   const PlannerConfig& cfg) {
  MapfProblem prob;
  prob.skeleton = &sk;
  double minRadius = std::numeric_limits<double>::infinity();
  double vRef = std::numeric_limits<double>::infinity();
  for (const auto& r : robots) {
    minRadius = std::min(minRadius, r.radius);
    vRef = std::min(vRef, r.maxSpeed);
  }
  prob.caps = annotateCapacities(sk, minRadius, cfg.capacityRule);
  prob.edgeSteps.reserve(sk.edges.size());
  for (const auto& e : sk.edges) {
    const double steps = e.length / (vRef * cfg.mapfStepSeconds);
    prob.edgeSteps.push_back(
        std::max(1, static_cast<int>(std::ceil(steps - 1e-9))));
  }
  prob.horizon = cfg.mapfHorizon;
  return prob;
}

/// Robot location at an instant: the vertex it stands on, if any.
/// Traverse boundaries count at both endpoints' instants.
inline void forEachVertexStamp(
    const WorkspaceSkeleton& sk, const TimedSkeletonPath& path, int makespan,
    const std::function<void(int vertex, int step)>& fn) {
  int at = path.startVertex;
  fn(at, 0);
  for (const auto& m : path.moves) {
    if (m.kind == MoveKind::Traverse) {
      const SkeletonEdge& e = sk.edges[m.locus];
      at = m.forward ? e.v : e.u;
      fn(at, m.exit);
    } else {
      for (int t = m.enter; t <= m.exit; ++t) fn(at, t);
    }
  }
  for (int t = path.arrival(); t <= makespan; ++t) fn(at, t);
}

/// Earliest step at which any edge or vertex holds more robots than its
/// capacity; edges are scanned before vertices at equal steps, lower ids
/// first.
inline std::optional<CapacityConflict> detectCapacityConflict(
    const WorkspaceSkeleton& sk, const CapacityAnnotation& caps,
    const MapfSolution& sol) {
  const int M = sol.makespan;
  std::vector<std::map<int, std::vector<int>>> edgeOcc(M + 1), vertOcc(M + 1);
  for (const auto& path : sol.paths) {
    for (const auto& m : path.moves)
      if (m.kind == MoveKind::Traverse)
        for (int t = m.enter; t < m.exit && t <= M; ++t)
          edgeOcc[t][m.locus].push_back(path.robot);
    forEachVertexStamp(sk, path, M, [&](int v, int t) {
      if (t > M) return;
      auto& lst = vertOcc[t][v];
      if (lst.empty() || lst.back() != path.robot) lst.push_back(path.robot);
    });
  }
  for (int t = 0; t <= M; ++t) {
    for (auto& [e, robots] : edgeOcc[t]) {
      std::sort(robots.begin(), robots.end());
      robots.erase(std::unique(robots.begin(), robots.end()), robots.end());
      if (static_cast<int>(robots.size()) > caps.edgeCapacity[e])
        return CapacityConflict{true, e, t, robots};
    }
    for (auto& [v, robots] : vertOcc[t]) {
      std::sort(robots.begin(), robots.end());
      robots.erase(std::unique(robots.begin(), robots.end()), robots.end());
      if (static_cast<int>(robots.size()) > caps.vertexCapacity[v])
        return CapacityConflict{false, v, t, robots};
    }
  }
  return std::nullopt;
}

namespace detail {

/// Robot transits at (vertex, step): the incoming and outgoing edges (-1
/// when the robot starts, stops, waits, or parks there).
struct Transit {
  int robot;
  int inEdge;
  int outEdge;
};

inline std::map<std::pair<int, int>, std::vector<Transit>> collectTransits(
    const WorkspaceSkeleton& sk, const MapfSolution& sol) {
  std::map<std::pair<int, int>, std::vector<Transit>> transits;
  for (const auto& path : sol.paths) {
    // Build the sequence of (vertex, instant, inEdge, outEdge) boundaries.
    int at = path.startVertex;
    int prevEdge = -1;
    int t = 0;
    for (const auto& m : path.moves) {
      if (m.kind == MoveKind::Traverse) {
        transits[{at, t}].push_back({path.robot, prevEdge, m.locus});
        const SkeletonEdge& e = sk.edges[m.locus];
        at = m.forward ? e.v : e.u;
        prevEdge = m.locus;
        t = m.exit;
      } else {
        // A wait boundary closes the incoming edge if any.
        if (prevEdge != -1)
          transits[{at, t}].push_back({path.robot, prevEdge, -1});
        prevEdge = -1;
        t = m.exit;
      }
    }
    if (prevEdge != -1)
      transits[{at, t}].push_back({path.robot, prevEdge, -1});
  }
  return transits;
}

}  // namespace detail

/// First prohibition (in list order) the solution violates, with the
/// maximal violating step window around the earliest hit.
inline std::optional<ProhibitionViolation> checkProhibitions(
    const WorkspaceSkeleton& sk, const MapfSolution& sol,
    const std::vector<Prohibition>& prohibitions,
    ProhibitionMatch match = ProhibitionMatch::Exact) {
  if (prohibitions.empty()) return std::nullopt;
  const int M = sol.makespan;

  // Edge occupancy and vertex occupancy per step, built once.
  std::vector<std::map<int, std::set<int>>> edgeOcc(M + 1), vertOcc(M + 1);
  for (const auto& path : sol.paths) {
    for (const auto& m : path.moves)
      if (m.kind == MoveKind::Traverse)
        for (int t = m.enter; t < m.exit && t <= M; ++t)
          edgeOcc[t][m.locus].insert(path.robot);
    forEachVertexStamp(sk, path, M, [&](int v, int t) {
      if (t <= M) vertOcc[t][v].insert(path.robot);
    });
  }
  const auto transits = detail::collectTransits(sk, sol);

  auto setMatches = [&](const std::set<int>& present,
                        const std::vector<int>& wanted) {
    if (match == ProhibitionMatch::Exact)
      return present.size() == wanted.size() &&
             std::equal(present.begin(), present.end(), wanted.begin());
    for (int r : wanted)
      if (!present.count(r)) return false;
    return true;
  };

  for (int pi = 0; pi < static_cast<int>(prohibitions.size()); ++pi) {
    const Prohibition& p = prohibitions[pi];
    auto violatedAt = [&](int t) -> bool {
      if (!p.inWindow(t)) return false;
      switch (p.kind) {
        case Prohibition::Kind::EdgeGroup: {
          const auto it = edgeOcc[t].find(p.locus);
          if (it == edgeOcc[t].end()) return false;
          return setMatches(it->second, p.robots);
        }
        case Prohibition::Kind::VertexOccupancy: {
          const auto it = vertOcc[t].find(p.locus);
          if (it == vertOcc[t].end()) return false;
          return setMatches(it->second, p.robots);
        }
        case Prohibition::Kind::VertexGroup: {
          const auto it = transits.find({p.locus, t});
          if (it == transits.end()) return false;
          std::set<int> transiting;
          std::map<int, std::pair<int, int>> byRobot;
          for (const auto& tr : it->second) {
            transiting.insert(tr.robot);
            byRobot[tr.robot] = {tr.inEdge, tr.outEdge};
          }
          if (!setMatches(transiting, p.robots)) return false;
          for (std::size_t k = 0; k < p.robots.size(); ++k) {
            const auto found = byRobot.find(p.robots[k]);
            if (found == byRobot.end()) return false;
            if (found->second.first != p.inEdges[k] ||
                found->second.second != p.outEdges[k])
              return false;
          }
          return true;
        }
      }
      return false;
    };
    for (int t = 0; t <= M; ++t) {
      if (!violatedAt(t)) continue;
      int end = t + 1;
      while (end <= M && violatedAt(end)) ++end;
      return ProhibitionViolation{pi, t, end};
    }
  }
  return std::nullopt;
}

/// Time-expanded A* for one robot: wait one step or traverse an incident
/// edge, avoiding this robot's constraints.  Minimizes arrival step; the
/// robot parks at its goal afterwards, so arrival must clear every future
/// goal-vertex ban.
inline std::optional<TimedSkeletonPath> lowLevel(
    const MapfProblem& prob, int robot, const SkeletonQuery& query,
    const std::vector<CbsConstraint>& constraints) {
  const WorkspaceSkeleton& sk = *prob.skeleton;
  const int V = static_cast<int>(sk.vertices.size());
  const int H = prob.horizon;

  std::map<int, std::vector<std::pair<int, int>>> edgeBans, vertexBans;
  for (const auto& c : constraints) {
    if (c.robot != robot) continue;
    (c.onEdge ? edgeBans : vertexBans)[c.locus].push_back({c.begin, c.end});
  }
  auto edgeBanned = [&](int e, int a, int b) {
    const auto it = edgeBans.find(e);
    if (it == edgeBans.end()) return false;
    for (const auto& [x, y] : it->second)
      if (a < y && x < b) return true;
    return false;
  };
  auto vertexBannedAt = [&](int v, int t) {
    const auto it = vertexBans.find(v);
    if (it == vertexBans.end()) return false;
    for (const auto& [x, y] : it->second)
      if (t >= x && t < y) return true;
    return false;
  };

  int goalClearStep = 0;  // parking must start at or after every goal ban
  if (const auto it = vertexBans.find(query.goalVertex); it != vertexBans.end())
    for (const auto& [x, y] : it->second) goalClearStep = std::max(goalClearStep, y);

  // Admissible heuristic: unconstrained step distance to the goal.
  std::vector<int> h(V, std::numeric_limits<int>::max());
  {
    using QE = std::pair<int, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    if (prob.caps.vertexCapacity[query.goalVertex] > 0) {
      h[query.goalVertex] = 0;
      pq.push({0, query.goalVertex});
    }
    while (!pq.empty()) {
      const auto [d, v] = pq.top();
      pq.pop();
      if (d > h[v]) continue;
      for (int e : sk.incident[v]) {
        if (prob.caps.edgeCapacity[e] <= 0) continue;
        const int w = sk.otherEnd(e, v);
        if (prob.caps.vertexCapacity[w] <= 0) continue;
        const int nd = d + prob.edgeSteps[e];
        if (nd < h[w]) {
          h[w] = nd;
          pq.push({nd, w});
        }
      }
    }
  }
  if (h[query.startVertex] == std::numeric_limits<int>::max()) return std::nullopt;
  if (prob.caps.vertexCapacity[query.startVertex] <= 0) return std::nullopt;
  if (vertexBannedAt(query.startVertex, 0)) return std::nullopt;

  struct Parent {
    int v{-1}, t{-1}, edge{-1};  // edge -1 means wait
    bool forward{true};
  };
  std::vector<std::vector<std::uint8_t>> closed(
      V, std::vector<std::uint8_t>(H + 1, 0));
  std::vector<std::vector<Parent>> parent(V, std::vector<Parent>(H + 1));

  using HeapEntry = std::tuple<int, long, int, int>;  // f, order, v, t
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> open;
  long pushCounter = 0;
  open.push({h[query.startVertex], pushCounter++, query.startVertex, 0});

  while (!open.empty()) {
    const auto [f, ord, v, t] = open.top();
    open.pop();
    if (closed[v][t]) continue;
    closed[v][t] = 1;

    if (v == query.goalVertex && t >= goalClearStep) {
      // Reconstruct: walk parents back to (start, 0).
      std::vector<Move> rev;
      int cv = v, ct = t;
      while (ct > 0) {
        const Parent& pr = parent[cv][ct];
        Move m;
        if (pr.edge < 0) {
          m.kind = MoveKind::Wait;
          m.locus = cv;
          m.enter = pr.t;
          m.exit = ct;
        } else {
          m.kind = MoveKind::Traverse;
          m.locus = pr.edge;
          m.forward = pr.forward;
          m.enter = pr.t;
          m.exit = ct;
        }
        rev.push_back(m);
        cv = pr.v;
        ct = pr.t;
      }
      TimedSkeletonPath path;
      path.robot = robot;
      path.startVertex = query.startVertex;
      path.goalVertex = query.goalVertex;
      for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
        if (it->kind == MoveKind::Wait && !path.moves.empty() &&
            path.moves.back().kind == MoveKind::Wait) {
          path.moves.back().exit = it->exit;  // merge wait runs
        } else {
          path.moves.push_back(*it);
        }
      }
      return path;
    }

    if (t + 1 <= H && !vertexBannedAt(v, t + 1) && !closed[v][t + 1]) {
      parent[v][t + 1].v = v;
      parent[v][t + 1].t = t;
      parent[v][t + 1].edge = -1;
      open.push({t + 1 + h[v], pushCounter++, v, t + 1});
    }
    for (int e : sk.incident[v]) {
      if (prob.caps.edgeCapacity[e] <= 0) continue;
      const int w = sk.otherEnd(e, v);
      if (prob.caps.vertexCapacity[w] <= 0) continue;
      if (h[w] == std::numeric_limits<int>::max()) continue;
      const int d = prob.edgeSteps[e];
      const int nt = t + d;
      if (nt > H || closed[w][nt]) continue;
      if (edgeBanned(e, t, nt) || vertexBannedAt(w, nt)) continue;
      parent[w][nt].v = v;
      parent[w][nt].t = t;
      parent[w][nt].edge = e;
      parent[w][nt].forward = sk.edges[e].u == v;
      open.push({nt + h[w], pushCounter++, w, nt});
    }
  }
  return std::nullopt;
}

struct CbsResult {
  bool success{false};
  MapfSolution solution;
  int expansions{0};
  std::string failure;
};

/// Conflict-Based Search over the skeleton: best-first on makespan,
/// branching on capacity excesses and prohibition violations with one child
/// per offending robot.
inline CbsResult cbs(const MapfProblem& prob,
                     const std::vector<SkeletonQuery>& queries,
                     const std::vector<Prohibition>& prohibitions,
                     const PlannerConfig& cfg) {
  const WorkspaceSkeleton& sk = *prob.skeleton;
  CbsResult result;

  struct Node {
    std::vector<CbsConstraint> constraints;
    std::vector<std::shared_ptr<const TimedSkeletonPath>> paths;
    int makespan{0};
  };
  auto makespanOf = [](const Node& n) {
    int m = 0;
    for (const auto& p : n.paths) m = std::max(m, p->arrival());
    return m;
  };
  auto solutionOf = [&](const Node& n) {
    MapfSolution sol;
    for (const auto& p : n.paths) sol.paths.push_back(*p);
    sol.recomputeMakespan();
    return sol;
  };

  std::vector<Node> nodes;
  {
    Node root;
    for (const auto& q : queries) {
      auto path = lowLevel(prob, q.robot, q, {});
      if (!path) {
        result.failure = "low-level infeasible for robot " +
                         std::to_string(q.robot);
        return result;
      }
      root.paths.push_back(
          std::make_shared<const TimedSkeletonPath>(std::move(*path)));
    }
    root.makespan = makespanOf(root);
    nodes.push_back(std::move(root));
  }

  using HeapEntry = std::pair<int, int>;  // makespan, node index
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> open;
  open.push({nodes[0].makespan, 0});

  while (!open.empty()) {
    if (result.expansions >= cfg.cbsNodeBudget) {
      result.failure = "node budget exhausted";
      return result;
    }
    const auto [cost, idx] = open.top();
    open.pop();
    ++result.expansions;
    const MapfSolution sol = solutionOf(nodes[idx]);

    std::vector<int> offenders;
    CbsConstraint proto;
    if (const auto conflict = detectCapacityConflict(sk, prob.caps, sol)) {
      offenders = conflict->robots;
      proto.onEdge = conflict->onEdge;
      proto.locus = conflict->locus;
      proto.begin = conflict->step;
      proto.end = conflict->step + 1;
    } else if (const auto violation = checkProhibitions(
                   sk, sol, prohibitions, cfg.prohibitionMatch)) {
      const Prohibition& p = prohibitions[violation->prohibitionIndex];
      offenders = p.robots;
      proto.onEdge = p.kind == Prohibition::Kind::EdgeGroup;
      proto.locus = p.locus;
      proto.begin = violation->begin;
      proto.end = violation->end;
    } else {
      result.success = true;
      result.solution = sol;
      return result;
    }

    for (int robot : offenders) {
      Node child;
      child.constraints = nodes[idx].constraints;
      CbsConstraint c = proto;
      c.robot = robot;
      child.constraints.push_back(c);
      child.paths = nodes[idx].paths;

      std::vector<CbsConstraint> mine;
      for (const auto& cc : child.constraints)
        if (cc.robot == robot) mine.push_back(cc);
      const SkeletonQuery* query = nullptr;
      for (const auto& qq : queries)
        if (qq.robot == robot) query = &qq;
      if (!query) continue;
      auto path = lowLevel(prob, robot, *query, mine);
      if (!path) continue;  // child infeasible, prune
      for (std::size_t i = 0; i < child.paths.size(); ++i)
        if (child.paths[i]->robot == robot)
          child.paths[i] =
              std::make_shared<const TimedSkeletonPath>(std::move(*path));
      child.makespan = makespanOf(child);
      nodes.push_back(std::move(child));
      open.push({nodes.back().makespan, static_cast<int>(nodes.size()) - 1});
    }
  }
  result.failure = "constraint tree exhausted";
  return result;
}

}  // namespace gdash
