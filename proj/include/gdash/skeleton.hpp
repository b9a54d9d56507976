#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "gdash/env.hpp"
#include "gdash/geometry.hpp"
#include "gdash/params.hpp"

namespace gdash {

struct SkeletonVertex {
  int id{-1};
  Vec2 position;
  double clearance{0.0};
};

struct SkeletonEdge {
  int id{-1};
  int u{-1};
  int v{-1};
  std::vector<Vec2> polyline;          // first/last points are u/v positions
  std::vector<double> clearances;      // one per polyline point
  double minClearance{0.0};
  double length{0.0};
};

/// Embedded graph tracing the free corridors of a workspace.
struct WorkspaceSkeleton {
  std::vector<SkeletonVertex> vertices;  // indexed by id
  std::vector<SkeletonEdge> edges;       // indexed by id
  std::vector<std::vector<int>> incident;  // vertex id -> sorted edge ids
  // Grid resolution the skeleton was traced at (0 = analytic or unknown).
  // Grid-traced clearances are sampled at cell centers and so can under-read
  // the true ridge clearance by up to half a cell.
  double cell{0.0};

  [[nodiscard]] bool empty() const { return vertices.empty(); }

  [[nodiscard]] int otherEnd(int edgeId, int vertexId) const {
    const SkeletonEdge& e = edges[edgeId];
    return e.u == vertexId ? e.v : e.u;
  }

  /// Point at arc length `offset` from the chosen end of an edge.
  [[nodiscard]] Vec2 pointAlong(int edgeId, double offset, bool fromU) const {
    const SkeletonEdge& e = edges[edgeId];
    return polylinePointAt(e.polyline, fromU ? offset : e.length - offset);
  }

  void rebuildIncidence() {
    incident.assign(vertices.size(), {});
    for (const SkeletonEdge& e : edges) {
      incident[e.u].push_back(e.id);
      if (e.v != e.u) incident[e.v].push_back(e.id);
    }
    for (auto& lst : incident) std::sort(lst.begin(), lst.end());
  }

  /// Recomputes per-edge aggregates from polylines and the workspace.
  void annotateClearances(const Workspace& ws) {
    for (SkeletonEdge& e : edges) {
      e.clearances.clear();
      e.clearances.reserve(e.polyline.size());
      double mn = std::numeric_limits<double>::infinity();
      for (const Vec2& p : e.polyline) {
        const double c = ws.inBounds(p) ? ws.clearance(p) : 0.0;
        e.clearances.push_back(c);
        mn = std::min(mn, c);
      }
      e.minClearance = mn;
      e.length = polylineLength(e.polyline);
    }
  }
};

/// Robot head-count limits per skeleton vertex and edge.
struct CapacityAnnotation {
  std::vector<int> vertexCapacity;
  std::vector<int> edgeCapacity;
};

namespace detail {

struct ThinningGrid {
  int nx{0}, ny{0};
  double cell{0.0};
  Vec2 origin;
  std::vector<std::uint8_t> fg;
  std::vector<double> clr;

  [[nodiscard]] int idx(int i, int j) const { return j * nx + i; }
  [[nodiscard]] bool at(int i, int j) const {
    return i >= 0 && i < nx && j >= 0 && j < ny && fg[idx(i, j)];
  }
  [[nodiscard]] Vec2 center(int i, int j) const {
    return {origin.x + (i + 0.5) * cell, origin.y + (j + 0.5) * cell};
  }
};

// Ring neighbors in spatially cyclic order, starting north.
constexpr int kRingDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kRingDy[8] = {1, 1, 0, -1, -1, -1, 0, 1};

inline int ringMask(const ThinningGrid& g, int i, int j) {
  int m = 0;
  for (int k = 0; k < 8; ++k)
    if (g.at(i + kRingDx[k], j + kRingDy[k])) m |= 1 << k;
  return m;
}

inline int neighborCount(int mask) { return __builtin_popcount(mask); }

/// Number of 0->1 transitions walking the 8-neighbor ring once.
inline int ringTransitions(int mask) {
  int t = 0;
  for (int k = 0; k < 8; ++k) {
    const bool a = mask & (1 << k);
    const bool b = mask & (1 << ((k + 1) % 8));
    if (!a && b) ++t;
  }
  return t;
}

/// Thins the free-space mask to a connected unit-width ridge.  Cells are
/// peeled in order of increasing clearance; a cell is removable only when
/// its foreground neighbors stay connected through the ring (one transition)
/// and it is not a line endpoint.  This keeps the result centered on the
/// local clearance maxima and never splits a component.
inline void thinToRidge(ThinningGrid& g) {
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.fg[g.idx(i, j)]) heap.push({g.clr[g.idx(i, j)], g.idx(i, j)});

  while (!heap.empty()) {
    const auto [c, id] = heap.top();
    heap.pop();
    if (!g.fg[id]) continue;
    const int i = id % g.nx;
    const int j = id / g.nx;
    const int mask = ringMask(g, i, j);
    if (neighborCount(mask) < 2) continue;     // endpoint or isolated: keep
    if (ringTransitions(mask) != 1) continue;  // removal would split locally
    g.fg[id] = 0;
    for (int k = 0; k < 8; ++k) {
      const int ni = i + kRingDx[k];
      const int nj = j + kRingDy[k];
      if (g.at(ni, nj)) heap.push({g.clr[g.idx(ni, nj)], g.idx(ni, nj)});
    }
  }
}

struct ExtractedVertex {
  Vec2 position;
  int degree{0};
};

}  // namespace detail

/// Rasterizes free space at the given cell size, thins it to a ridge, and
/// extracts the embedded graph: ridge cells with other than two neighbors
/// (grouped into clusters) become vertices, maximal degree-2 runs become
/// edge polylines.  Degree-2 vertices are dissolved and short leaf spurs
/// pruned afterwards.
inline WorkspaceSkeleton buildGridSkeleton(const Workspace& ws, double cell) {
  const double extent = std::min(ws.bounds.width(), ws.bounds.height());
  if (cell <= 0.0 || cell >= extent / 4.0)
    throw std::domain_error("skeleton cell size out of range");

  detail::ThinningGrid g;
  g.cell = cell;
  g.origin = {ws.bounds.xmin, ws.bounds.ymin};
  g.nx = std::max(1, static_cast<int>(std::ceil(ws.bounds.width() / cell - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil(ws.bounds.height() / cell - 1e-9)));
  g.fg.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  g.clr.assign(g.fg.size(), 0.0);

  bool anyFree = false;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 p = g.center(i, j);
      if (!ws.inBounds(p)) continue;
      const double c = ws.clearance(p);
      if (c <= 0.0) continue;
      g.fg[g.idx(i, j)] = 1;
      g.clr[g.idx(i, j)] = c;
      anyFree = true;
    }
  }
  if (!anyFree) throw std::runtime_error("workspace has no free space");

  detail::thinToRidge(g);

  // Classify ridge cells.
  const int n = g.nx * g.ny;
  std::vector<int> degree(n, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.fg[g.idx(i, j)])
        degree[g.idx(i, j)] =
            detail::neighborCount(detail::ringMask(g, i, j));

  std::vector<int> cluster(n, -1);  // cell -> vertex cluster id
  std::vector<std::vector<int>> clusterCells;
  auto isVertexCell = [&](int id) { return g.fg[id] && degree[id] != 2; };

  for (int id = 0; id < n; ++id) {
    if (!isVertexCell(id) || cluster[id] >= 0) continue;
    const int cid = static_cast<int>(clusterCells.size());
    clusterCells.emplace_back();
    std::vector<int> stack{id};
    cluster[id] = cid;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      clusterCells[cid].push_back(cur);
      const int ci = cur % g.nx;
      const int cj = cur / g.nx;
      for (int k = 0; k < 8; ++k) {
        const int ni = ci + detail::kRingDx[k];
        const int nj = cj + detail::kRingDy[k];
        if (ni < 0 || ni >= g.nx || nj < 0 || nj >= g.ny) continue;
        const int nid = g.idx(ni, nj);
        if (isVertexCell(nid) && cluster[nid] < 0) {
          cluster[nid] = cid;
          stack.push_back(nid);
        }
      }
    }
    std::sort(clusterCells[cid].begin(), clusterCells[cid].end());
  }

  // Pure cycles have no vertex cell; promote their lowest cell to one.
  for (int id = 0; id < n; ++id) {
    if (!g.fg[id] || degree[id] != 2 || cluster[id] >= 0) continue;
    // Walk the component to see whether it touches any vertex cell.
    std::vector<int> comp{id};
    std::vector<int> stack{id};
    std::set<int> seen{id};
    bool touchesVertex = false;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int ci = cur % g.nx;
      const int cj = cur / g.nx;
      for (int k = 0; k < 8; ++k) {
        const int ni = ci + detail::kRingDx[k];
        const int nj = cj + detail::kRingDy[k];
        if (!g.at(ni, nj)) continue;
        const int nid = g.idx(ni, nj);
        if (isVertexCell(nid) && cluster[nid] >= 0) touchesVertex = true;
        if (!isVertexCell(nid) && !seen.count(nid)) {
          seen.insert(nid);
          comp.push_back(nid);
          stack.push_back(nid);
        }
      }
    }
    if (touchesVertex) continue;
    const int rep = *std::min_element(comp.begin(), comp.end());
    cluster[rep] = static_cast<int>(clusterCells.size());
    clusterCells.push_back({rep});
  }

  auto clusterPosition = [&](int cid) {
    int best = clusterCells[cid][0];
    for (int cell_ : clusterCells[cid])
      if (g.clr[cell_] > g.clr[best]) best = cell_;
    return g.center(best % g.nx, best / g.nx);
  };
  auto isVertexCellNow = [&](int id) { return g.fg[id] && cluster[id] >= 0; };

  struct RawEdge {
    int a, b;
    std::vector<Vec2> polyline;
  };
  std::vector<RawEdge> rawEdges;
  std::vector<std::uint8_t> chainVisited(n, 0);
  std::set<std::pair<int, int>> directPairs;

  for (int cid = 0; cid < static_cast<int>(clusterCells.size()); ++cid) {
    for (int member : clusterCells[cid]) {
      const int mi = member % g.nx;
      const int mj = member / g.nx;
      for (int k = 0; k < 8; ++k) {
        const int ni = mi + detail::kRingDx[k];
        const int nj = mj + detail::kRingDy[k];
        if (!g.at(ni, nj)) continue;
        const int nid = g.idx(ni, nj);
        if (isVertexCellNow(nid)) {
          if (cluster[nid] != cid) {
            const auto key = std::minmax(cid, cluster[nid]);
            if (directPairs.insert({key.first, key.second}).second)
              rawEdges.push_back({cid, cluster[nid],
                                  {clusterPosition(cid),
                                   clusterPosition(cluster[nid])}});
          }
          continue;
        }
        if (chainVisited[nid]) continue;
        // Trace the degree-2 chain until it hits a vertex cluster.
        std::vector<Vec2> poly{clusterPosition(cid)};
        int prev = member;
        int cur = nid;
        int endCluster = -1;
        while (true) {
          chainVisited[cur] = 1;
          poly.push_back(g.center(cur % g.nx, cur / g.nx));
          int next = -1;
          const int ci = cur % g.nx;
          const int cj = cur / g.nx;
          for (int kk = 0; kk < 8; ++kk) {
            const int xi = ci + detail::kRingDx[kk];
            const int xj = cj + detail::kRingDy[kk];
            if (!g.at(xi, xj)) continue;
            const int xid = g.idx(xi, xj);
            if (xid == prev) continue;
            next = xid;
            break;
          }
          if (next < 0) {  // dead end without a vertex cell; should not occur
            endCluster = -1;
            break;
          }
          if (isVertexCellNow(next)) {
            endCluster = cluster[next];
            break;
          }
          prev = cur;
          cur = next;
        }
        if (endCluster < 0) continue;
        poly.push_back(clusterPosition(endCluster));
        rawEdges.push_back({cid, endCluster, std::move(poly)});
      }
    }
  }

  // Assemble a mutable graph for dissolution and pruning.
  struct MutVertex {
    Vec2 pos;
    bool alive{true};
  };
  struct MutEdge {
    int a, b;
    std::vector<Vec2> poly;
    bool alive{true};
  };
  std::vector<MutVertex> mv;
  mv.reserve(clusterCells.size());
  for (int cid = 0; cid < static_cast<int>(clusterCells.size()); ++cid)
    mv.push_back({clusterPosition(cid)});
  std::vector<MutEdge> me;
  me.reserve(rawEdges.size());
  for (auto& re : rawEdges) me.push_back({re.a, re.b, std::move(re.polyline)});

  auto incidenceOf = [&](int vid) {
    std::vector<int> out;
    for (int ei = 0; ei < static_cast<int>(me.size()); ++ei)
      if (me[ei].alive && (me[ei].a == vid || me[ei].b == vid))
        out.push_back(ei);
    return out;
  };

  auto dissolvePass = [&]() {
    bool changed = false;
    for (int vid = 0; vid < static_cast<int>(mv.size()); ++vid) {
      if (!mv[vid].alive) continue;
      auto inc = incidenceOf(vid);
      if (inc.size() != 2 || inc[0] == inc[1]) continue;
      MutEdge& e1 = me[inc[0]];
      MutEdge& e2 = me[inc[1]];
      if (e1.a == e1.b || e2.a == e2.b) continue;
      // Orient both polylines through vid and concatenate.
      std::vector<Vec2> p1 = e1.poly;
      if (e1.b != vid) std::reverse(p1.begin(), p1.end());
      std::vector<Vec2> p2 = e2.poly;
      if (e2.a != vid) std::reverse(p2.begin(), p2.end());
      const int na = e1.a == vid ? e1.b : e1.a;
      const int nb = e2.b == vid ? e2.a : e2.b;
      p1.insert(p1.end(), p2.begin() + 1, p2.end());
      e1.a = na;
      e1.b = nb;
      e1.poly = std::move(p1);
      e2.alive = false;
      mv[vid].alive = false;
      changed = true;
    }
    return changed;
  };

  auto prunePass = [&](double minSpur) {
    bool changed = false;
    for (int ei = 0; ei < static_cast<int>(me.size()); ++ei) {
      if (!me[ei].alive || me[ei].a == me[ei].b) continue;
      const double len = polylineLength(me[ei].poly);
      if (len >= minSpur) continue;
      const bool leafA = incidenceOf(me[ei].a).size() == 1;
      const bool leafB = incidenceOf(me[ei].b).size() == 1;
      if (!leafA && !leafB) continue;
      if (leafA && leafB) continue;  // sole edge of its component: keep
      me[ei].alive = false;
      mv[leafA ? me[ei].a : me[ei].b].alive = false;
      changed = true;
    }
    return changed;
  };

  while (dissolvePass()) {
  }
  while (prunePass(4.0 * cell)) {
    while (dissolvePass()) {
    }
  }

  // Renumber deterministically by position.
  std::vector<int> vids;
  for (int vid = 0; vid < static_cast<int>(mv.size()); ++vid)
    if (mv[vid].alive) vids.push_back(vid);
  std::sort(vids.begin(), vids.end(), [&](int a, int b) {
    return std::tie(mv[a].pos.x, mv[a].pos.y) < std::tie(mv[b].pos.x, mv[b].pos.y);
  });
  std::vector<int> remap(mv.size(), -1);
  WorkspaceSkeleton sk;
  sk.cell = cell;
  for (int newId = 0; newId < static_cast<int>(vids.size()); ++newId) {
    remap[vids[newId]] = newId;
    SkeletonVertex v;
    v.id = newId;
    v.position = mv[vids[newId]].pos;
    v.clearance = ws.clearance(v.position);
    sk.vertices.push_back(v);
  }

  std::vector<SkeletonEdge> pending;
  for (auto& e : me) {
    if (!e.alive) continue;
    SkeletonEdge se;
    se.u = remap[e.a];
    se.v = remap[e.b];
    se.polyline = std::move(e.poly);
    if (se.u > se.v) {
      std::swap(se.u, se.v);
      std::reverse(se.polyline.begin(), se.polyline.end());
    }
    pending.push_back(std::move(se));
  }
  std::sort(pending.begin(), pending.end(),
            [](const SkeletonEdge& a, const SkeletonEdge& b) {
              if (a.u != b.u) return a.u < b.u;
              if (a.v != b.v) return a.v < b.v;
              return polylineLength(a.polyline) < polylineLength(b.polyline);
            });
  for (int id = 0; id < static_cast<int>(pending.size()); ++id) {
    pending[id].id = id;
    sk.edges.push_back(std::move(pending[id]));
  }

  sk.annotateClearances(ws);
  sk.rebuildIncidence();
  return sk;
}

/// Capacity = how many robot widths fit in the minimum clearance.
/// Grid-traced skeletons sample clearance at cell centers, which under-reads
/// the true ridge clearance by at most half a cell (the clearance field is
/// 1-Lipschitz and thinning keeps locally clearance-maximal cells), so that
/// bias is added back before counting.  Over-counting is recoverable — the
/// motion layer rejects what does not physically fit — whereas under-counting
/// would veto legal corridors with no appeal.
inline CapacityAnnotation annotateCapacities(
    const WorkspaceSkeleton& sk, double robotRadius,
    CapacityRule rule = CapacityRule::PerRadius) {
  if (robotRadius <= 0.0) throw std::domain_error("robot radius must be positive");
  const double divisor =
      rule == CapacityRule::PerDiameter ? 2.0 * robotRadius : robotRadius;
  const double slack = 0.5 * sk.cell;
  CapacityAnnotation caps;
  caps.vertexCapacity.reserve(sk.vertices.size());
  for (const auto& v : sk.vertices)
    caps.vertexCapacity.push_back(
        static_cast<int>(std::floor((v.clearance + slack) / divisor + 1e-9)));
  caps.edgeCapacity.reserve(sk.edges.size());
  for (const auto& e : sk.edges)
    caps.edgeCapacity.push_back(
        static_cast<int>(std::floor((e.minClearance + slack) / divisor + 1e-9)));
  return caps;
}

/// Nearest skeleton feature to a point.
struct SkeletonProjection {
  bool onVertex{true};
  int id{-1};        // vertex id or edge id
  double offset{0};  // arc length from edge endpoint u (edges only)
  double distance{0};
};

/// Nearest among all vertex positions and edge polyline points; vertices
/// win ties, then lower ids, then earlier polyline points.
inline SkeletonProjection project(const WorkspaceSkeleton& sk, const Vec2& p) {
  if (sk.empty()) throw std::domain_error("projection onto empty skeleton");
  SkeletonProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& v : sk.vertices) {
    const double d = distance(p, v.position);
    if (d < best.distance) best = {true, v.id, 0.0, d};
  }
  for (const auto& e : sk.edges) {
    double offset = 0.0;
    for (std::size_t i = 0; i < e.polyline.size(); ++i) {
      if (i > 0) offset += distance(e.polyline[i - 1], e.polyline[i]);
      const double d = distance(p, e.polyline[i]);
      if (d < best.distance) best = {false, e.id, offset, d};
    }
  }
  return best;
}

/// Maps a configuration onto the skeleton vertex nearest to it: the
/// projected vertex itself, or the closer endpoint of the projected edge.
inline int projectToVertex(const WorkspaceSkeleton& sk, const Vec2& p) {
  const SkeletonProjection pr = project(sk, p);
  if (pr.onVertex) return pr.id;
  const SkeletonEdge& e = sk.edges[pr.id];
  if (pr.offset < e.length - pr.offset) return e.u;
  if (pr.offset > e.length - pr.offset) return e.v;
  return std::min(e.u, e.v);
}

}  // namespace gdash
