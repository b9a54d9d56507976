#pragma once

// Shared helpers for building synthetic skeleton graphs and timed paths
// used across the test suite.

#include <random>
#include <utility>
#include <vector>

#include "gdash/mapf.hpp"

namespace testsupport {

struct GraphSpec {
  int vertices{0};
  struct E {
    int u, v, steps, cap;
  };
  std::vector<E> edges;
  std::vector<int> vertexCaps;
};

struct Instance {
  gdash::WorkspaceSkeleton sk;
  gdash::MapfProblem prob;
};

inline Instance makeInstance(const GraphSpec& spec, int horizon = 64) {
  Instance inst;
  for (int i = 0; i < spec.vertices; ++i)
    inst.sk.vertices.push_back({i, {static_cast<double>(i), 0.0}, 1.0});
  for (int i = 0; i < static_cast<int>(spec.edges.size()); ++i) {
    const auto& es = spec.edges[i];
    gdash::SkeletonEdge e;
    e.id = i;
    e.u = es.u;
    e.v = es.v;
    e.polyline = {inst.sk.vertices[es.u].position,
                  inst.sk.vertices[es.v].position};
    e.clearances = {1.0, 1.0};
    e.minClearance = 1.0;
    e.length = static_cast<double>(es.steps);
    inst.sk.edges.push_back(e);
  }
  inst.sk.rebuildIncidence();
  inst.prob.skeleton = nullptr;  // fixed by the caller after copying
  inst.prob.caps.vertexCapacity = spec.vertexCaps;
  for (const auto& es : spec.edges) inst.prob.caps.edgeCapacity.push_back(es.cap);
  for (const auto& es : spec.edges) inst.prob.edgeSteps.push_back(es.steps);
  inst.prob.horizon = horizon;
  return inst;
}

/// Timed path from explicit (edge id, enter step) hops on 1-step edges;
/// waits are inferred between traverses.
inline gdash::TimedSkeletonPath tracePath(
    const gdash::WorkspaceSkeleton& sk, int robot, int start,
    const std::vector<std::pair<int, int>>& edgeAt) {
  gdash::TimedSkeletonPath p;
  p.robot = robot;
  p.startVertex = start;
  int at = start;
  int t = 0;
  for (const auto& [e, enter] : edgeAt) {
    if (enter > t)
      p.moves.push_back({gdash::MoveKind::Wait, at, true, t, enter});
    const gdash::SkeletonEdge& se = sk.edges[e];
    const bool fwd = se.u == at;
    const int exit = enter + 1;
    p.moves.push_back({gdash::MoveKind::Traverse, e, fwd, enter, exit});
    at = fwd ? se.v : se.u;
    t = exit;
  }
  p.goalVertex = at;
  return p;
}

/// Random connected multigraph: spanning tree plus a few extra edges,
/// with small capacities and 1–3 step edge lengths.
inline GraphSpec randomGraph(std::mt19937_64& rng) {
  const int V = 3 + static_cast<int>(rng() % 4);
  GraphSpec g;
  g.vertices = V;
  for (int v = 1; v < V; ++v)
    g.edges.push_back({static_cast<int>(rng() % v), v,
                       1 + static_cast<int>(rng() % 3),
                       1 + static_cast<int>(rng() % 2)});
  const int extra = static_cast<int>(rng() % 3);
  for (int k = 0; k < extra; ++k) {
    const int a = static_cast<int>(rng() % V);
    const int b = static_cast<int>(rng() % V);
    if (a == b) continue;
    g.edges.push_back({a, b, 1 + static_cast<int>(rng() % 3),
                       1 + static_cast<int>(rng() % 2)});
  }
  for (int v = 0; v < V; ++v)
    g.vertexCaps.push_back(1 + static_cast<int>(rng() % 3));
  return g;
}

/// Distinct random start and goal vertices for up to maxRobots robots;
/// returns empty when the draw collides.
inline std::vector<gdash::SkeletonQuery> randomQueries(std::mt19937_64& rng,
                                                       int vertices,
                                                       int maxRobots) {
  const int n = 1 + static_cast<int>(rng() % maxRobots);
  std::vector<int> starts(vertices), goals(vertices);
  for (int v = 0; v < vertices; ++v) starts[v] = goals[v] = v;
  std::shuffle(starts.begin(), starts.end(), rng);
  std::shuffle(goals.begin(), goals.end(), rng);
  if (n > vertices) return {};
  std::vector<gdash::SkeletonQuery> queries;
  for (int i = 0; i < n; ++i) queries.push_back({i, starts[i], goals[i]});
  return queries;
}

}  // namespace testsupport
