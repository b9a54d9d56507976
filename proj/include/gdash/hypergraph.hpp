#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "gdash/mapf.hpp"

namespace gdash {

/// One robot's traversal window inside an edge element, or the single
/// occupancy window of an idle element. Step windows are half-open.
struct ElementMember {
  int robot{-1};
  bool forward{true};  // traverse direction u->v; unused for idle elements
  int enter{0};
  int exit{0};
};

/// A group of robots sharing one skeleton edge over overlapping windows,
/// or a single robot idling at a vertex.
struct TaskSpaceElement {
  int id{-1};
  bool idle{false};
  int locus{-1};  // edge id (traverse) or vertex id (idle)
  std::vector<ElementMember> members;
  std::vector<int> group;  // sorted unique robot ids
  int begin{0};
  int end{0};  // union window [begin, end)
};

/// A robot handed from one element to the next at (vertex, step).
struct TransitRecord {
  int robot{-1};
  int fromElement{-1};
  int toElement{-1};
  int inEdge{-1};   // -1: entered the vertex from idling
  int outEdge{-1};  // -1: leaves the vertex into idling
};

struct Hyperarc {
  enum class Kind { Composition, TransitionSegment, TransitionVertex };
  int id{-1};
  Kind kind{Kind::Composition};
  int vertex{-1};
  int step{0};
  std::vector<int> tail;  // element ids, sorted
  std::vector<int> head;
  std::vector<TransitRecord> transits;  // sorted by robot
};

struct TaskSpaceHypergraph {
  std::vector<TaskSpaceElement> elements;
  std::vector<Hyperarc> hyperarcs;
  std::vector<int> sources;  // elements that head no hyperarc
  std::vector<int> sinks;    // elements that tail no hyperarc
  int makespan{0};
};

/// Per-robot sequence of element memberships ordered by time.
struct ChainEntry {
  int element{-1};
  int enter{0};
  int exit{0};
};

[[nodiscard]] inline std::map<int, std::vector<ChainEntry>> robotChains(
    const TaskSpaceHypergraph& tsh) {
  std::map<int, std::vector<ChainEntry>> chains;
  for (const auto& el : tsh.elements)
    for (const auto& m : el.members)
      if (m.enter < m.exit) chains[m.robot].push_back({el.id, m.enter, m.exit});
  for (auto& [robot, chain] : chains)
    std::sort(chain.begin(), chain.end(),
              [](const ChainEntry& a, const ChainEntry& b) {
                return a.enter < b.enter;
              });
  return chains;
}

/// Groups a conflict-free MAPF solution into task-space elements and the
/// hyperarcs connecting them: overlapping traverses of one edge merge into
/// a shared element; waits and terminal parking become singleton idle
/// elements; boundary events at a (vertex, step) become hyperarcs whose
/// tails and heads are closed over every robot they mention so each arc
/// conserves its robot set.
[[nodiscard]] inline TaskSpaceHypergraph buildTsh(const WorkspaceSkeleton& sk,
                                                  const MapfSolution& sol) {
  const int M = sol.makespan;
  TaskSpaceHypergraph tsh;
  tsh.makespan = M;

  // ---- Collect raw windows -------------------------------------------------
  struct Raw {
    int robot;
    bool forward;
    int enter, exit;
  };
  std::map<int, std::vector<Raw>> byEdge;  // edge id -> traverses
  struct IdleRaw {
    int robot;
    int vertex;
    int enter, exit;
  };
  std::vector<IdleRaw> idles;

  for (const auto& path : sol.paths) {
    int at = path.startVertex;
    int t = 0;
    for (const auto& m : path.moves) {
      if (m.exit <= m.enter || m.enter != t)
        throw std::invalid_argument("malformed solution: bad move window");
      if (m.kind == MoveKind::Traverse) {
        const SkeletonEdge& e = sk.edges.at(m.locus);
        if ((m.forward ? e.u : e.v) != at)
          throw std::invalid_argument("malformed solution: detached traverse");
        byEdge[m.locus].push_back({path.robot, m.forward, m.enter, m.exit});
        at = m.forward ? e.v : e.u;
      } else {
        idles.push_back({path.robot, at, m.enter, m.exit});
      }
      t = m.exit;
    }
    if (at != path.goalVertex)
      throw std::invalid_argument("malformed solution: path misses its goal");
    if (t > M) throw std::invalid_argument("malformed solution: past makespan");
    if (t < M) idles.push_back({path.robot, at, t, M});  // parked at goal
  }

  // ---- Elements ------------------------------------------------------------
  for (auto& [edge, raws] : byEdge) {
    std::sort(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) {
      return std::tie(a.enter, a.robot) < std::tie(b.enter, b.robot);
    });
    // Overlap-connected runs of half-open intervals form one element each.
    std::size_t i = 0;
    while (i < raws.size()) {
      TaskSpaceElement el;
      el.idle = false;
      el.locus = edge;
      el.begin = raws[i].enter;
      el.end = raws[i].exit;
      el.members.push_back({raws[i].robot, raws[i].forward, raws[i].enter,
                            raws[i].exit});
      std::size_t j = i + 1;
      while (j < raws.size() && raws[j].enter < el.end) {
        el.members.push_back({raws[j].robot, raws[j].forward, raws[j].enter,
                              raws[j].exit});
        el.end = std::max(el.end, raws[j].exit);
        ++j;
      }
      tsh.elements.push_back(std::move(el));
      i = j;
    }
  }
  for (const auto& idle : idles) {
    TaskSpaceElement el;
    el.idle = true;
    el.locus = idle.vertex;
    el.begin = idle.enter;
    el.end = idle.exit;
    el.members.push_back({idle.robot, true, idle.enter, idle.exit});
    tsh.elements.push_back(std::move(el));
  }
  for (auto& el : tsh.elements) {
    for (const auto& m : el.members) el.group.push_back(m.robot);
    std::sort(el.group.begin(), el.group.end());
    el.group.erase(std::unique(el.group.begin(), el.group.end()),
                   el.group.end());
  }
  std::sort(tsh.elements.begin(), tsh.elements.end(),
            [](const TaskSpaceElement& a, const TaskSpaceElement& b) {
              return std::tie(a.begin, a.idle, a.locus, a.group.front()) <
                     std::tie(b.begin, b.idle, b.locus, b.group.front());
            });
  for (int i = 0; i < static_cast<int>(tsh.elements.size()); ++i)
    tsh.elements[i].id = i;

  // ---- Per-robot chains ----------------------------------------------------
  auto chains = robotChains(tsh);
  for (const auto& path : sol.paths) {
    const auto& chain = chains[path.robot];
    int t = 0;
    for (const auto& c : chain) {
      if (c.enter != t)
        throw std::invalid_argument("malformed solution: coverage gap");
      t = c.exit;
    }
    if (M > 0 && t != M)
      throw std::invalid_argument("malformed solution: coverage gap");
  }

  // ---- Boundary events -----------------------------------------------------
  auto elementEndVertex = [&](const TaskSpaceElement& el,
                              const ElementMember& m) {
    if (el.idle) return el.locus;
    const SkeletonEdge& e = sk.edges[el.locus];
    return m.forward ? e.v : e.u;
  };
  auto elementStartVertex = [&](const TaskSpaceElement& el,
                                const ElementMember& m) {
    if (el.idle) return el.locus;
    const SkeletonEdge& e = sk.edges[el.locus];
    return m.forward ? e.u : e.v;
  };
  auto memberOf = [&](int element, int robot, int enter) -> const ElementMember& {
    for (const auto& m : tsh.elements[element].members)
      if (m.robot == robot && m.enter == enter) return m;
    throw std::logic_error("element member lookup failed");
  };

  std::map<std::pair<int, int>, std::vector<TransitRecord>> events;
  for (const auto& [robot, chain] : chains) {
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const auto& a = tsh.elements[chain[i].element];
      const auto& b = tsh.elements[chain[i + 1].element];
      const auto& ma = memberOf(chain[i].element, robot, chain[i].enter);
      const auto& mb = memberOf(chain[i + 1].element, robot, chain[i + 1].enter);
      const int v = elementEndVertex(a, ma);
      if (elementStartVertex(b, mb) != v)
        throw std::invalid_argument("malformed solution: teleport at boundary");
      TransitRecord rec;
      rec.robot = robot;
      rec.fromElement = a.id;
      rec.toElement = b.id;
      rec.inEdge = a.idle ? -1 : a.locus;
      rec.outEdge = b.idle ? -1 : b.locus;
      events[{chain[i].exit, v}].push_back(rec);
    }
  }

  // ---- Hyperarcs with conservation closure ---------------------------------
  std::map<std::pair<int, bool>, int> emptyIdle;  // (robot, atGoal) -> element
  auto degenerateIdle = [&](int robot, bool atGoal) {
    const auto key = std::make_pair(robot, atGoal);
    auto it = emptyIdle.find(key);
    if (it != emptyIdle.end()) return it->second;
    int vertex = -1;
    for (const auto& path : sol.paths)
      if (path.robot == robot)
        vertex = atGoal ? path.goalVertex : path.startVertex;
    const int step = atGoal ? M : 0;
    TaskSpaceElement el;
    el.id = static_cast<int>(tsh.elements.size());
    el.idle = true;
    el.locus = vertex;
    el.begin = el.end = step;
    el.members.push_back({robot, true, step, step});
    el.group = {robot};
    tsh.elements.push_back(std::move(el));
    emptyIdle[key] = tsh.elements.back().id;
    return tsh.elements.back().id;
  };
  auto covering = [&](int robot, int step) -> const ChainEntry& {
    for (const auto& c : chains[robot])
      if (c.enter <= step && step < c.exit) return c;
    throw std::logic_error("covering window lookup failed");
  };
  auto chainAfter = [&](int robot, const ChainEntry& c) -> int {
    const auto& chain = chains[robot];
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
      if (chain[i].enter == c.enter) return chain[i + 1].element;
    return degenerateIdle(robot, true);
  };
  auto chainBefore = [&](int robot, const ChainEntry& c) -> int {
    const auto& chain = chains[robot];
    for (std::size_t i = 1; i < chain.size(); ++i)
      if (chain[i].enter == c.enter) return chain[i - 1].element;
    return degenerateIdle(robot, false);
  };

  std::vector<std::pair<int, int>> keys;
  for (const auto& [key, recs] : events) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  for (const auto& key : keys) {
    const auto& [t, v] = key;
    Hyperarc arc;
    arc.id = static_cast<int>(tsh.hyperarcs.size());
    arc.vertex = v;
    arc.step = t;
    arc.transits = events[key];
    std::sort(arc.transits.begin(), arc.transits.end(),
              [](const TransitRecord& a, const TransitRecord& b) {
                return a.robot < b.robot;
              });

    std::set<int> tail, head, handled;
    for (const auto& rec : arc.transits) {
      tail.insert(rec.fromElement);
      head.insert(rec.toElement);
      handled.insert(rec.robot);
    }
    // Close over every mentioned robot so robots(tail) == robots(head).
    // Robots with their own boundary at this step contribute both adjacent
    // elements; robots riding a single element across it are balanced with
    // a chain-adjacent element on whichever side lacks them.
    while (true) {
      std::set<int> mentioned;
      for (int e : tail)
        mentioned.insert(tsh.elements[e].group.begin(),
                         tsh.elements[e].group.end());
      for (int e : head)
        mentioned.insert(tsh.elements[e].group.begin(),
                         tsh.elements[e].group.end());
      std::vector<int> pending;
      for (int q : mentioned)
        if (!handled.count(q)) pending.push_back(q);
      if (pending.empty()) break;

      bool placedForced = false;
      for (int q : pending) {
        const ChainEntry& before = covering(q, t - 1);
        const ChainEntry& after = covering(q, t);
        if (before.enter == after.enter) continue;  // rides one element
        tail.insert(before.element);
        head.insert(after.element);
        handled.insert(q);
        placedForced = true;
      }
      if (placedForced) continue;

      // One riding robot at a time, so each placement sees fresh sets.
      const int q = pending.front();
      const ChainEntry& window = covering(q, t - 1);
      const int x = window.element;
      const bool inTail = tail.count(x) > 0;
      const bool inHead = head.count(x) > 0;
      if (inTail && inHead) {
        // already balanced
      } else if (inHead) {
        tail.insert(chainBefore(q, window));
      } else {
        tail.insert(x);
        head.insert(chainAfter(q, window));
      }
      handled.insert(q);
    }
    arc.tail.assign(tail.begin(), tail.end());
    arc.head.assign(head.begin(), head.end());

    if (arc.transits.size() >= 2) {
      arc.kind = Hyperarc::Kind::TransitionVertex;
    } else {
      const auto& rec = arc.transits.front();
      arc.kind = tsh.elements[rec.fromElement].group ==
                         tsh.elements[rec.toElement].group
                     ? Hyperarc::Kind::TransitionSegment
                     : Hyperarc::Kind::Composition;
    }
    tsh.hyperarcs.push_back(std::move(arc));
  }

  // ---- Sources and sinks ---------------------------------------------------
  std::set<int> headed, tailed;
  for (const auto& arc : tsh.hyperarcs) {
    headed.insert(arc.head.begin(), arc.head.end());
    tailed.insert(arc.tail.begin(), arc.tail.end());
  }
  for (const auto& el : tsh.elements) {
    if (!headed.count(el.id)) tsh.sources.push_back(el.id);
    if (!tailed.count(el.id)) tsh.sinks.push_back(el.id);
  }
  return tsh;
}

/// One entry of the dependency-ordered planning sequence.
struct OrderedItem {
  bool isElement{true};
  int id{-1};

  bool operator==(const OrderedItem& o) const {
    return isElement == o.isElement && id == o.id;
  }
};

namespace detail {

/// Kahn's algorithm over elements and hyperarcs. Elements appearing in both
/// the tail and the head of one arc (a robot exchange across a shared
/// element) are left unordered relative to that arc. Returns the ordered
/// nodes plus the ids of elements stuck in dependency cycles.
inline std::pair<std::vector<int>, std::vector<int>> kahnOrder(
    const TaskSpaceHypergraph& tsh) {
  const int ne = static_cast<int>(tsh.elements.size());
  const int na = static_cast<int>(tsh.hyperarcs.size());
  std::vector<std::vector<int>> out(ne + na);
  std::vector<int> indeg(ne + na, 0);
  for (const auto& arc : tsh.hyperarcs) {
    const std::set<int> tailSet(arc.tail.begin(), arc.tail.end());
    for (int e : arc.tail) {
      if (std::find(arc.head.begin(), arc.head.end(), e) != arc.head.end())
        continue;
      out[e].push_back(ne + arc.id);
      ++indeg[ne + arc.id];
    }
    for (int e : arc.head) {
      if (tailSet.count(e)) continue;
      out[ne + arc.id].push_back(e);
      ++indeg[e];
    }
  }
  using Key = std::tuple<int, int, int>;  // (window start, element/arc, id)
  auto keyOf = [&](int node) -> Key {
    if (node < ne) return {tsh.elements[node].begin, 0, node};
    return {tsh.hyperarcs[node - ne].step, 1, node - ne};
  };
  std::priority_queue<std::pair<Key, int>, std::vector<std::pair<Key, int>>,
                      std::greater<>>
      ready;
  for (int n = 0; n < ne + na; ++n)
    if (indeg[n] == 0) ready.push({keyOf(n), n});

  std::vector<int> order;
  while (!ready.empty()) {
    const int n = ready.top().second;
    ready.pop();
    order.push_back(n);
    for (int m : out[n])
      if (--indeg[m] == 0) ready.push({keyOf(m), m});
  }
  std::vector<int> stuck;
  if (static_cast<int>(order.size()) != ne + na) {
    std::set<int> placed(order.begin(), order.end());
    for (int e = 0; e < ne; ++e)
      if (!placed.count(e)) stuck.push_back(e);
  }
  return {order, stuck};
}

}  // namespace detail

/// Element ids entangled in dependency cycles; empty when orderable.
[[nodiscard]] inline std::vector<int> dependencyCycleElements(
    const TaskSpaceHypergraph& tsh) {
  return detail::kahnOrder(tsh).second;
}

/// Topological order over elements and hyperarcs (tails before an arc,
/// the arc before its heads), ties broken by window start then id.
/// Composition arcs constrain the order but are not emitted.
[[nodiscard]] inline std::vector<OrderedItem> orderByDependency(
    const TaskSpaceHypergraph& tsh) {
  const auto [nodes, stuck] = detail::kahnOrder(tsh);
  if (!stuck.empty())
    throw std::runtime_error("task hypergraph has a dependency cycle");
  const int ne = static_cast<int>(tsh.elements.size());
  std::vector<OrderedItem> order;
  for (int n : nodes) {
    if (n < ne)
      order.push_back({true, n});
    else if (tsh.hyperarcs[n - ne].kind != Hyperarc::Kind::Composition)
      order.push_back({false, n - ne});
  }
  return order;
}

/// DOT-format dump: elements as boxes, hyperarcs as labeled diamonds.
[[nodiscard]] inline std::string tshToDot(const TaskSpaceHypergraph& tsh) {
  std::ostringstream os;
  os << "digraph tsh {\n  rankdir=LR;\n";
  for (const auto& el : tsh.elements) {
    os << "  e" << el.id << " [shape=box,label=\""
       << (el.idle ? "idle v" : "edge ") << el.locus << " [" << el.begin << ","
       << el.end << ") {";
    for (std::size_t i = 0; i < el.group.size(); ++i)
      os << (i ? "," : "") << el.group[i];
    os << "}\"];\n";
  }
  for (const auto& arc : tsh.hyperarcs) {
    const char* kind = arc.kind == Hyperarc::Kind::Composition
                           ? "composition"
                           : arc.kind == Hyperarc::Kind::TransitionSegment
                                 ? "transition-segment"
                                 : "transition-vertex";
    os << "  a" << arc.id << " [shape=diamond,label=\"" << kind << " v"
       << arc.vertex << " @" << arc.step << "\"];\n";
    for (int e : arc.tail) os << "  e" << e << " -> a" << arc.id << ";\n";
    for (int e : arc.head) os << "  a" << arc.id << " -> e" << e << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace gdash
