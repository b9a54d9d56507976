#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdash/dash.hpp"
#include "gdash/validate.hpp"

namespace gdash {

namespace detail {

/// All generated robots share one footprint; corridor widths scale off it.
constexpr double kGenRobotRadius = 0.2;

[[nodiscard]] inline std::string formatName(const char* fmt, ...) {
  char buf[128];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario generators

/// Shelf rows forming `aisles` vertical corridors of width
/// widthFactor x robot diameter, joined by open halls along the top and
/// bottom.  Robot pairs stand at the top and bottom of their aisle with
/// swapped goals.  A width factor of 4 or more builds the wide-aisle variant
/// with second-order car robots instead of holonomic disks.
[[nodiscard]] inline Scenario genWarehouse(int aisles, double widthFactor,
                                           int robots) {
  if (aisles < 1)
    throw std::invalid_argument("warehouse needs at least one aisle");
  if (robots <= 0) throw std::invalid_argument("robot count must be positive");
  if (robots % 2 != 0)
    throw std::invalid_argument("warehouse robots come in swap pairs");
  if (robots / 2 > aisles)
    throw std::invalid_argument("more swap pairs than aisles");
  if (widthFactor <= 1.0)
    throw std::invalid_argument("aisles narrower than a robot are unusable");

  const double radius = detail::kGenRobotRadius;
  const bool kinodynamic = widthFactor >= 4.0 - 1e-9;
  const double w = widthFactor * 2.0 * radius;  // aisle width
  const double shelfW = w;
  const double hall = w;
  const double shelfH = 5.0 * w;

  Scenario s;
  s.name = detail::formatName("warehouse-a%d-f%.1f-r%d", aisles, widthFactor,
                              robots);
  s.workspace.bounds = {0, 0, aisles * w + (aisles - 1) * shelfW,
                        shelfH + 2.0 * hall};
  for (int i = 0; i + 1 < aisles; ++i) {
    const double x0 = (i + 1) * w + i * shelfW;
    s.workspace.obstacles.push_back({{x0, hall},
                                     {x0 + shelfW, hall},
                                     {x0 + shelfW, hall + shelfH},
                                     {x0, hall + shelfH}});
  }

  const double yTop = hall + shelfH + 0.5 * hall;
  const double yBottom = 0.5 * hall;
  for (int p = 0; p < robots / 2; ++p) {
    const double xc = p * (w + shelfW) + 0.5 * w;
    Robot top;
    top.id = 2 * p;
    top.radius = radius;
    Robot bottom = top;
    bottom.id = 2 * p + 1;
    if (kinodynamic) {
      top.car = CarModel{};
      bottom.car = CarModel{};
    }
    s.robots.push_back(top);
    s.robots.push_back(bottom);
    const double down = -std::numbers::pi / 2.0;
    const double up = std::numbers::pi / 2.0;
    s.starts.push_back(Configuration{{xc, yTop}, down, 0});
    s.starts.push_back(Configuration{{xc, yBottom}, up, 0});
    s.goals.push_back(Configuration{{xc, yBottom}, down, 0});
    s.goals.push_back(Configuration{{xc, yTop}, up, 0});
  }
  checkScenario(s);
  return s;
}

/// Square maze of cells x cells rooms carved by recursive division (every
/// dividing wall keeps one door, so the maze stays connected), corridors of
/// width widthFactor x robot diameter.  Starts and goals are drawn from
/// distinct cells by the seed.
[[nodiscard]] inline Scenario genGridmaze(int cells, double widthFactor,
                                          int robots, std::uint64_t seed) {
  if (cells < 2) throw std::invalid_argument("maze needs at least 2x2 cells");
  if (robots <= 0) throw std::invalid_argument("robot count must be positive");
  if (robots > cells * cells)
    throw std::invalid_argument("more robots than maze cells");
  if (widthFactor <= 1.0)
    throw std::invalid_argument("passages narrower than a robot are unusable");

  const double radius = detail::kGenRobotRadius;
  const double w = widthFactor * 2.0 * radius;  // passage width
  const double t = 0.5 * w;                     // wall thickness
  const double pitch = w + t;
  const int n = cells;

  Scenario s;
  s.name = detail::formatName("gridmaze-c%d-f%.1f-r%d-s%llu", cells,
                              widthFactor, robots,
                              static_cast<unsigned long long>(seed));
  s.seed = seed;
  const double side = n * w + (n - 1) * t;
  s.workspace.bounds = {0, 0, side, side};

  // Wall occupancy between adjacent cells.
  std::vector<std::vector<bool>> wallV(n - 1, std::vector<bool>(n, false));
  std::vector<std::vector<bool>> wallH(n, std::vector<bool>(n - 1, false));
  Rng rng(seed);

  // Recursive division over the cell rectangle [x0,x0+nx) x [y0,y0+ny).
  std::function<void(int, int, int, int)> divide = [&](int x0, int y0, int nx,
                                                       int ny) {
    if (nx < 2 && ny < 2) return;
    // The chosen orientation always has extent >= 2.
    const bool horizontal = ny > nx || (ny == nx && rng.chance(0.5));
    if (horizontal) {
      const int wy = y0 + rng.uniformInt(0, ny - 2);  // wall above row wy
      const int door = x0 + rng.uniformInt(0, nx - 1);
      for (int x = x0; x < x0 + nx; ++x)
        if (x != door) wallH[x][wy] = true;
      divide(x0, y0, nx, wy - y0 + 1);
      divide(x0, wy + 1, nx, ny - (wy - y0 + 1));
    } else {
      const int wx = x0 + rng.uniformInt(0, nx - 2);  // wall right of col wx
      const int door = y0 + rng.uniformInt(0, ny - 1);
      for (int y = y0; y < y0 + ny; ++y)
        if (y != door) wallV[wx][y] = true;
      divide(x0, y0, wx - x0 + 1, ny);
      divide(wx + 1, y0, nx - (wx - x0 + 1), ny);
    }
  };
  divide(0, 0, n, n);

  // Corner posts at every interior wall intersection keep diagonal gaps
  // closed; wall segments then span exactly one cell face.
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      const double x0 = i * pitch + w, y0 = j * pitch + w;
      s.workspace.obstacles.push_back(
          {{x0, y0}, {x0 + t, y0}, {x0 + t, y0 + t}, {x0, y0 + t}});
    }
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j < n; ++j)
      if (wallV[i][j]) {
        const double x0 = i * pitch + w, y0 = j * pitch;
        s.workspace.obstacles.push_back(
            {{x0, y0}, {x0 + t, y0}, {x0 + t, y0 + w}, {x0, y0 + w}});
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j + 1 < n; ++j)
      if (wallH[i][j]) {
        const double x0 = i * pitch, y0 = j * pitch + w;
        s.workspace.obstacles.push_back(
            {{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + t}, {x0, y0 + t}});
      }

  // Distinct start cells and distinct goal cells via seeded Fisher-Yates.
  auto shuffledCells = [&]() {
    std::vector<int> ids(n * n);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = n * n - 1; i > 0; --i)
      std::swap(ids[i], ids[rng.uniformInt(0, i)]);
    return ids;
  };
  const std::vector<int> startCells = shuffledCells();
  std::vector<int> goalCells = shuffledCells();
  for (int i = 0; i < robots; ++i)  // avoid planning no-ops where possible
    if (goalCells[i] == startCells[i])
      std::swap(goalCells[i], goalCells[(i + 1) % std::max(robots, 2)]);

  auto cellCenter = [&](int id) {
    return Vec2{(id % n) * pitch + 0.5 * w, (id / n) * pitch + 0.5 * w};
  };
  for (int i = 0; i < robots; ++i) {
    Robot r;
    r.id = i;
    r.radius = radius;
    s.robots.push_back(r);
    s.starts.push_back(Configuration{cellCenter(startCells[i]), 0, 0});
    s.goals.push_back(Configuration{cellCenter(goalCells[i]), 0, 0});
  }
  checkScenario(s);
  return s;
}

// ---------------------------------------------------------------------------
// Baseline planners

/// One RRT over the joint configuration space of all robots: uniform
/// composite samples with goal bias, fixed-fraction composite steering, and
/// the same collision predicates the main pipeline uses.
[[nodiscard]] inline PlanOutcome baselineCompositeRrt(const Scenario& scenario,
                                                      const PlannerConfig& cfg) {
  checkScenario(scenario);
  const auto wallStart = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         wallStart)
        .count();
  };
  PlanOutcome out;
  auto fail = [&](const std::string& why) {
    out.log.push_back("failure: " + why);
    out.stats.planningSeconds = elapsed();
    return out;
  };
  if (scenario.kinodynamic())
    return fail("composite baseline supports holonomic robots only");

  const std::vector<Robot>& robots = scenario.robots;
  const std::size_t R = robots.size();
  std::vector<int> group(R);
  std::iota(group.begin(), group.end(), 0);
  std::vector<Vec2> goalTargets(R);
  for (std::size_t i = 0; i < R; ++i)
    goalTargets[i] = scenario.goals[i].position;

  Rng rng(scenario.seed);
  MotionTree tree;
  CompositeConfiguration root;
  root.configs = scenario.starts;
  tree.nodes.push_back({root, -1, {}, 0});

  auto finished = [&](const CompositeConfiguration& q) {
    for (std::size_t i = 0; i < R; ++i)
      if (distance(q[i].position, goalTargets[i]) > cfg.goalTolerance)
        return false;
    return true;
  };

  PlannerConfig stepCfg = cfg;
  stepCfg.stepSizeFactor = cfg.baselineStepFactor;

  for (long it = 0; it < cfg.baselineMaxIterations; ++it) {
    if ((it & 0xff) == 0 && elapsed() > cfg.timeoutSeconds)
      return fail("timeout");
    ++out.stats.iterations;
    std::vector<Vec2> targets(R);
    if (rng.chance(cfg.baselineGoalBias)) {
      targets = goalTargets;
    } else {
      for (std::size_t i = 0; i < R; ++i)
        targets[i] = rng.inRect(scenario.workspace.bounds);
    }
    const std::optional<int> added = detail::holonomicExtend(
        scenario.workspace, robots, group, tree, targets, stepCfg);
    if (!added || !finished(tree.nodes[*added].q)) continue;

    LocalPath path = detail::parameterizeHolonomic(
        robots, group,
        detail::shortcutChain(scenario.workspace, robots, group,
                              detail::chainToRoot(tree, *added), cfg),
        cfg.dtGrid);
    if (!detail::emittedStatesValid(scenario.workspace, robots, group, path))
      continue;  // a resampled grid state grazed a margin; keep growing

    Solution sol;
    sol.dt = cfg.dtGrid;
    for (std::size_t i = 0; i < R; ++i) {
      RobotTrajectory rt;
      rt.id = robots[i].id;
      for (const auto& st : path.states) rt.states.push_back(st[i]);
      sol.robots.push_back(std::move(rt));
    }
    sol.stats.iterations = out.stats.iterations;
    sol.stats.planningSeconds = elapsed();
    sol.stats.makespanSeconds = sol.makespan();
    out.stats = sol.stats;
    out.solution = std::move(sol);
    out.log.push_back("success");
    return out;
  }
  return fail("iteration budget exhausted");
}

/// Decoupled baseline: robots plan one at a time in id order on the dt grid,
/// treating every earlier robot's finished trajectory as a moving obstacle
/// (parked at its goal once it ends).  No replanning across priorities, so
/// failures are final.
[[nodiscard]] inline PlanOutcome baselinePrioritized(const Scenario& scenario,
                                                     const PlannerConfig& cfg) {
  checkScenario(scenario);
  const auto wallStart = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         wallStart)
        .count();
  };
  PlanOutcome out;
  auto fail = [&](const std::string& why) {
    out.log.push_back("failure: " + why);
    out.stats.planningSeconds = elapsed();
    return out;
  };
  if (scenario.kinodynamic())
    return fail("prioritized baseline supports holonomic robots only");

  const Workspace& ws = scenario.workspace;
  const double dt = cfg.dtGrid;
  const long horizon =
      std::lround(cfg.prioritizedHorizonSeconds / dt);
  Rng rng(scenario.seed);

  // Finished robots, step-indexed; parked at the back beyond their end.
  std::vector<std::vector<Vec2>> done;
  auto occupiedAt = [&](std::size_t robot, long step) {
    const auto& traj = done[robot];
    const std::size_t k =
        std::min<std::size_t>(static_cast<std::size_t>(step), traj.size() - 1);
    return traj[k];
  };
  auto clashes = [&](const Robot& me, const Vec2& p, long step) {
    for (std::size_t j = 0; j < done.size(); ++j) {
      const double sep = me.radius + scenario.robots[j].radius;
      if (distance(p, occupiedAt(j, step)) < sep) return true;
    }
    return false;
  };

  struct Node {
    Vec2 pos;
    long step;
    int parent;
  };

  for (std::size_t i = 0; i < scenario.robots.size(); ++i) {
    const Robot& me = scenario.robots[i];
    const Vec2 start = scenario.starts[i].position;
    const Vec2 goal = scenario.goals[i].position;
    const double stride = me.maxSpeed * dt;

    std::vector<Node> nodes{{start, 0, -1}};
    if (clashes(me, start, 0))
      return fail(detail::formatName(
          "prioritized: robot %d starts inside an earlier robot's path",
          me.id));
    int goalNode = -1;
    for (long it = 0; goalNode < 0; ++it) {
      if ((it & 0xff) == 0 && elapsed() > cfg.timeoutSeconds)
        return fail("timeout");
      if (it >= cfg.baselineMaxIterations)
        return fail(detail::formatName(
            "prioritized: robot %d found no path", me.id));
      ++out.stats.iterations;

      const Vec2 target = rng.chance(cfg.baselineGoalBias)
                              ? goal
                              : rng.inRect(ws.bounds);
      int near = -1;
      double bestD = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].step >= horizon) continue;
        const double d = distance(nodes[k].pos, target);
        if (d < bestD || (d == bestD && near >= 0 &&
                          nodes[k].step < nodes[near].step)) {
          bestD = d;
          near = static_cast<int>(k);
        }
      }
      if (near < 0)
        return fail(detail::formatName(
            "prioritized: robot %d exhausted its horizon", me.id));

      const Node& from = nodes[near];
      Vec2 next = target;
      const double d = distance(from.pos, target);
      if (d > stride) {
        const double a = stride / d;
        next = {from.pos.x + a * (target.x - from.pos.x),
                from.pos.y + a * (target.y - from.pos.y)};
      }
      const long step = from.step + 1;
      CompositeConfiguration qa, qb;
      qa.configs = {Configuration{from.pos, 0, 0}};
      qb.configs = {Configuration{next, 0, 0}};
      const std::vector<int> solo{static_cast<int>(i)};
      if (!detail::segmentValid(ws, scenario.robots, solo, qa, qb, cfg)) {
        continue;
      }
      if (clashes(me, next, step)) {
        // Blocked by traffic rather than walls: waiting in place is the
        // move that can become legal later.
        if (!clashes(me, from.pos, step))
          nodes.push_back({from.pos, step, near});
        continue;
      }
      nodes.push_back({next, step, near});
      if (distance(next, goal) <= cfg.goalTolerance)
        goalNode = static_cast<int>(nodes.size()) - 1;
    }

    std::vector<Vec2> traj;
    for (int at = goalNode; at >= 0; at = nodes[at].parent)
      traj.push_back(nodes[at].pos);
    std::reverse(traj.begin(), traj.end());
    done.push_back(std::move(traj));
  }

  // Pad everyone to the common makespan.
  std::size_t steps = 0;
  for (const auto& traj : done) steps = std::max(steps, traj.size());
  Solution sol;
  sol.dt = dt;
  for (std::size_t i = 0; i < done.size(); ++i) {
    RobotTrajectory rt;
    rt.id = scenario.robots[i].id;
    for (std::size_t k = 0; k < steps; ++k) {
      const Vec2 p = done[i][std::min(k, done[i].size() - 1)];
      rt.states.push_back(Configuration{p, 0, 0});
    }
    sol.robots.push_back(std::move(rt));
  }
  sol.stats = out.stats;
  sol.stats.planningSeconds = elapsed();
  sol.stats.makespanSeconds = sol.makespan();
  out.stats = sol.stats;
  out.solution = std::move(sol);
  out.log.push_back("success");
  return out;
}

// ---------------------------------------------------------------------------
// Batch running

/// Dispatch by method name: "gdash", "composite-rrt", or "prioritized".
[[nodiscard]] inline PlanOutcome planWithMethod(const std::string& method,
                                                const Scenario& scenario,
                                                const PlannerConfig& cfg) {
  if (method == "gdash") return plan(scenario, cfg);
  if (method == "composite-rrt") return baselineCompositeRrt(scenario, cfg);
  if (method == "prioritized") return baselinePrioritized(scenario, cfg);
  throw std::invalid_argument("unknown method: " + method);
}

/// One benchmark run.  Failure rows carry the timeout as planning seconds
/// and no makespan; planning seconds are stored at CSV precision so files
/// and memory agree exactly.
struct RunRecord {
  std::string method;
  std::string scenario;
  int robots{0};
  std::uint64_t seed{0};
  bool success{false};
  double planSeconds{0.0};
  std::optional<double> makespanSeconds;
};

namespace detail {

[[nodiscard]] inline double round3(double x) {
  return std::round(x * 1000.0) / 1000.0;
}

}  // namespace detail

/// Cross product of methods x scenarios x seeds.  Every success is re-checked
/// by the independent validator before being recorded; a validator-rejected
/// "solution" is recorded as a failure.  When solutionDir is non-empty each
/// recorded success leaves its trajectory file there.
[[nodiscard]] inline std::vector<RunRecord> runBatch(
    const std::vector<std::string>& methods,
    const std::vector<Scenario>& scenarios,
    const std::vector<std::uint64_t>& seeds, double timeoutSeconds,
    const PlannerConfig& base, const std::string& solutionDir = "",
    const std::function<void(const RunRecord&)>& onRecord = nullptr) {
  std::vector<RunRecord> records;
  if (!solutionDir.empty())
    std::filesystem::create_directories(solutionDir);
  for (const Scenario& scenario : scenarios) {
    for (const std::string& method : methods) {
      for (std::uint64_t seed : seeds) {
        Scenario s = scenario;
        s.seed = seed;
        PlannerConfig cfg = base;
        cfg.timeoutSeconds = timeoutSeconds;
        const PlanOutcome o = planWithMethod(method, s, cfg);

        RunRecord rec;
        rec.method = method;
        rec.scenario = s.name;
        rec.robots = static_cast<int>(s.robots.size());
        rec.seed = seed;
        rec.success =
            o.success() &&
            validateSolution(*o.solution, s, cfg.goalTolerance).clean();
        rec.planSeconds = detail::round3(
            rec.success ? o.stats.planningSeconds : timeoutSeconds);
        if (rec.success) {
          rec.makespanSeconds = detail::round3(o.solution->makespan());
          if (!solutionDir.empty()) {
            const std::string file =
                solutionDir + "/" + method + "-" + s.name + "-s" +
                std::to_string(seed) + ".json";
            writeJsonFile(file, solutionToJson(*o.solution));
          }
        }
        if (onRecord) onRecord(rec);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

/// CSV with the fixed schema method,scenario,robots,seed,success,plan_s,makespan_s.
[[nodiscard]] inline std::string recordsToCsv(
    const std::vector<RunRecord>& records) {
  std::string csv = "method,scenario,robots,seed,success,plan_s,makespan_s\n";
  char buf[64];
  for (const RunRecord& r : records) {
    csv += r.method + ',' + r.scenario + ',' + std::to_string(r.robots) + ',' +
           std::to_string(r.seed) + ',' + (r.success ? "true" : "false") + ',';
    std::snprintf(buf, sizeof(buf), "%.3f", r.planSeconds);
    csv += buf;
    csv += ',';
    if (r.makespanSeconds) {
      std::snprintf(buf, sizeof(buf), "%.3f", *r.makespanSeconds);
      csv += buf;
    }
    csv += '\n';
  }
  return csv;
}

[[nodiscard]] inline std::vector<RunRecord> recordsFromCsv(
    const std::string& csv) {
  std::vector<RunRecord> records;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) ||
      line != "method,scenario,robots,seed,success,plan_s,makespan_s")
    throw std::invalid_argument("unrecognized CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (line.back() == ',') cols.push_back("");
    if (cols.size() != 7)
      throw std::invalid_argument("malformed CSV row: " + line);
    RunRecord r;
    r.method = cols[0];
    r.scenario = cols[1];
    r.robots = std::stoi(cols[2]);
    r.seed = std::stoull(cols[3]);
    r.success = cols[4] == "true";
    r.planSeconds = std::stod(cols[5]);
    if (!cols[6].empty()) r.makespanSeconds = std::stod(cols[6]);
    records.push_back(std::move(r));
  }
  return records;
}

/// Per (method, scenario) aggregate.  Mean and population standard deviation
/// cover successful runs' planning seconds; the rate covers all runs.
struct AggregateRow {
  std::string method;
  std::string scenario;
  int runs{0};
  int successes{0};
  double successRate{0.0};
  double meanPlanS{0.0};
  double stdPlanS{0.0};
};

[[nodiscard]] inline std::vector<AggregateRow> aggregate(
    const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>>
      groups;
  for (const RunRecord& r : records)
    groups[{r.method, r.scenario}].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [key, runs] : groups) {
    AggregateRow row;
    row.method = key.first;
    row.scenario = key.second;
    row.runs = static_cast<int>(runs.size());
    double sum = 0.0;
    for (const RunRecord* r : runs)
      if (r->success) {
        ++row.successes;
        sum += r->planSeconds;
      }
    row.successRate = static_cast<double>(row.successes) / row.runs;
    if (row.successes > 0) {
      row.meanPlanS = sum / row.successes;
      double var = 0.0;
      for (const RunRecord* r : runs)
        if (r->success) {
          const double d = r->planSeconds - row.meanPlanS;
          var += d * d;
        }
      row.stdPlanS = std::sqrt(var / row.successes);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gdash
