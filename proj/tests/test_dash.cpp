#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gdash/dash.hpp"
#include "gdash/io.hpp"
#include "gdash/validate.hpp"

using namespace gdash;

namespace {

Robot disk(int id, double radius) {
  Robot r;
  r.id = id;
  r.radius = radius;
  r.maxSpeed = 1.0;
  return r;
}

Robot car(int id, double radius) {
  Robot r = disk(id, radius);
  r.car = CarModel{0.25, 1.0, 0.6};
  return r;
}

// Four 10x10 corner blocks leaving a plus-shaped junction of 1.4-wide
// corridors meeting at the center of a 12x12 square.
Workspace plusWorkspace() {
  Workspace ws;
  ws.bounds = {0, 0, 12, 12};
  const double lo = 5.3, hi = 6.7;
  ws.obstacles.push_back({{0, 0}, {lo, 0}, {lo, lo}, {0, lo}});
  ws.obstacles.push_back({{hi, 0}, {12, 0}, {12, lo}, {hi, lo}});
  ws.obstacles.push_back({{0, hi}, {lo, hi}, {lo, 12}, {0, 12}});
  ws.obstacles.push_back({{hi, hi}, {12, hi}, {12, 12}, {hi, 12}});
  return ws;
}

// A corridor along the bottom with a detour room above its middle, so two
// opposing robots can resolve a swap by one looping through the room.
Workspace bypassWorkspace() {
  Workspace ws;
  ws.bounds = {0, 0, 12, 7};
  ws.obstacles.push_back({{0, 2}, {5, 2}, {5, 6}, {0, 6}});
  ws.obstacles.push_back({{7, 2}, {12, 2}, {12, 6}, {7, 6}});
  return ws;
}

Scenario hallScenario(std::uint64_t seed) {
  Scenario s;
  s.name = "hall";
  s.seed = seed;
  s.workspace.bounds = {0, 0, 12, 4};
  s.robots = {disk(0, 0.2)};
  s.starts = {Configuration{{1.0, 2.0}, 0, 0}};
  s.goals = {Configuration{{11.0, 2.0}, 0, 0}};
  return s;
}

Scenario rotationScenario(std::uint64_t seed) {
  Scenario s;
  s.name = "rotation";
  s.seed = seed;
  s.workspace = plusWorkspace();
  s.robots = {disk(0, 0.2), disk(1, 0.2), disk(2, 0.2), disk(3, 0.2)};
  s.starts = {Configuration{{1, 6}, 0, 0}, Configuration{{6, 11}, 0, 0},
              Configuration{{11, 6}, 0, 0}, Configuration{{6, 1}, 0, 0}};
  s.goals = {Configuration{{6, 11}, 0, 0}, Configuration{{11, 6}, 0, 0},
             Configuration{{6, 1}, 0, 0}, Configuration{{1, 6}, 0, 0}};
  return s;
}

Scenario kinoJunctionScenario(std::uint64_t seed) {
  Scenario s;
  s.name = "kino-junction";
  s.seed = seed;
  s.workspace = plusWorkspace();
  s.robots = {car(0, 0.2), car(1, 0.2)};
  s.starts = {Configuration{{1, 6}, 0.0, 0.0},
              Configuration{{6, 1}, 1.5708, 0.0}};
  s.goals = {Configuration{{11, 6}, 0.0, 0.0},
             Configuration{{6, 11}, 1.5708, 0.0}};
  return s;
}

// Straight-line trajectory at constant speed.
RobotTrajectory straightLine(int id, Vec2 from, Vec2 to, int steps) {
  RobotTrajectory rt;
  rt.id = id;
  for (int i = 0; i <= steps; ++i) {
    const double a = static_cast<double>(i) / steps;
    rt.states.push_back(
        Configuration{{from.x + a * (to.x - from.x), from.y + a * (to.y - from.y)},
                      0,
                      0});
  }
  return rt;
}

bool logContains(const PlanOutcome& o, const std::string& needle) {
  return o.logText().find(needle) != std::string::npos;
}

bool reportHas(const ValidationReport& rep, const std::string& kind) {
  return std::any_of(rep.violations.begin(), rep.violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario serialization

TEST_CASE("scenario json round trip preserves all fields") {
  Scenario s = kinoJunctionScenario(123);
  s.skeleton = buildGridSkeleton(s.workspace, 0.1);
  const json j = scenarioToJson(s);
  const Scenario back = scenarioFromJson(j);
  CHECK(back.name == s.name);
  CHECK(back.seed == s.seed);
  REQUIRE(back.robots.size() == 2);
  CHECK(back.robots[1].radius == s.robots[1].radius);
  REQUIRE(back.robots[0].car.has_value());
  CHECK(back.robots[0].car->wheelbase == s.robots[0].car->wheelbase);
  CHECK(back.starts[1].position.x == s.starts[1].position.x);
  CHECK(back.goals[0].heading == s.goals[0].heading);
  REQUIRE(back.skeleton.has_value());
  CHECK(back.skeleton->vertices.size() == s.skeleton->vertices.size());
  CHECK(back.skeleton->cell == s.skeleton->cell);
  // Round trip is byte-stable.
  CHECK(scenarioToJson(back).dump() == j.dump());
}

TEST_CASE("scenario validation rejects malformed inputs") {
  CHECK_THROWS_AS(checkScenario(Scenario{}), std::invalid_argument);

  Scenario s = hallScenario(1);
  SECTION("start/goal count mismatch") {
    s.goals.clear();
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("non-dense robot ids") {
    s.robots[0].id = 3;
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("non-positive radius") {
    s.robots[0].radius = 0.0;
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("start inside an obstacle") {
    s.workspace.obstacles.push_back({{0.5, 1.5}, {1.5, 1.5}, {1.5, 2.5}, {0.5, 2.5}});
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("mixed dynamics") {
    s.robots.push_back(car(1, 0.2));
    s.starts.push_back(Configuration{{1, 1}, 0, 0});
    s.goals.push_back(Configuration{{11, 1}, 0, 0});
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("overlapping starts") {
    s.robots.push_back(disk(1, 0.2));
    s.starts.push_back(Configuration{{1.1, 2.0}, 0, 0});
    s.goals.push_back(Configuration{{11, 1}, 0, 0});
    CHECK_THROWS_AS(checkScenario(s), std::invalid_argument);
  }
  SECTION("kinodynamic endpoint not at rest") {
    Scenario k = kinoJunctionScenario(1);
    k.starts[0].speed = 0.5;
    CHECK_THROWS_AS(checkScenario(k), std::invalid_argument);
  }
}

// ---------------------------------------------------------------------------
// Solution serialization

TEST_CASE("solution json rows match the robot dynamics") {
  Solution sol;
  sol.dt = 0.5;

  SECTION("holonomic rows are [t,x,y]") {
    sol.robots = {straightLine(0, {0, 0}, {1, 0}, 4)};
    const json j = solutionToJson(sol);
    REQUIRE(j.at("robots").size() == 1);
    const json& rows = j.at("robots").at(0).at("trajectory");
    REQUIRE(rows.size() == 5);
    CHECK(rows.at(0).size() == 3);
    CHECK(rows.at(2).at(0).get<double>() == Catch::Approx(1.0));
    CHECK(rows.at(4).at(1).get<double>() == Catch::Approx(1.0));
    CHECK_FALSE(j.at("robots").at(0).contains("controls"));
    const Solution back = solutionFromJson(j);
    REQUIRE(back.robots.size() == 1);
    CHECK(back.dt == Catch::Approx(0.5));
    CHECK(back.robots[0].states.size() == 5);
    CHECK(back.robots[0].controls.empty());
  }

  SECTION("kinodynamic rows are [t,x,y,theta,v] plus a control tape") {
    Robot r = car(0, 0.2);
    RobotTrajectory rt;
    rt.id = 0;
    Configuration q{{1, 1}, 0, 0};
    rt.states.push_back(q);
    for (int i = 0; i < 4; ++i) {
      const Control u{i < 2 ? 0.5 : -0.5, 0.0};
      q = integrate(r, q, u, 0.5);
      rt.states.push_back(q);
      rt.controls.push_back(u);
    }
    sol.robots = {rt};
    const json j = solutionToJson(sol);
    const json& jr = j.at("robots").at(0);
    CHECK(jr.at("trajectory").at(0).size() == 5);
    REQUIRE(jr.contains("controls"));
    CHECK(jr.at("controls").size() == 4);
    CHECK(jr.at("controls").at(0).at(0).get<double>() == Catch::Approx(0.5));
    const Solution back = solutionFromJson(j);
    REQUIRE(back.robots[0].controls.size() == 4);
    CHECK(back.robots[0].states[2].speed == Catch::Approx(rt.states[2].speed));
  }
}

// ---------------------------------------------------------------------------
// Independent validation

TEST_CASE("validator accepts a legal straight-line trajectory") {
  Scenario s = hallScenario(1);
  Solution sol;
  sol.dt = 0.1;
  sol.robots = {straightLine(0, {1, 2}, {11, 2}, 120)};
  // 10m over 12s at speed <= 1: legal.
  const ValidationReport rep = validateSolution(sol, s, 0.1);
  CHECK(rep.clean());
  CHECK(rep.summary() == "valid\n");
}

TEST_CASE("validator pinpoints hand-made violations") {
  Scenario s = hallScenario(1);
  Solution base;
  base.dt = 0.1;
  base.robots = {straightLine(0, {1, 2}, {11, 2}, 120)};

  SECTION("teleport trips the velocity check") {
    Solution sol = base;
    sol.robots[0].states[60].position.x += 1.0;
    const ValidationReport rep = validateSolution(sol, s, 0.1);
    CHECK_FALSE(rep.clean());
    CHECK(reportHas(rep, "velocity"));
  }
  SECTION("a state inside an obstacle trips the obstacle check") {
    Scenario blocked = s;
    blocked.workspace.obstacles.push_back({{5, 0}, {7, 0}, {7, 1}, {5, 1}});
    Solution sol = base;
    sol.robots[0].states[60].position = {6, 0.5};
    sol.robots[0].states[59].position = {6, 0.6};
    sol.robots[0].states[61].position = {6, 0.6};
    const ValidationReport rep = validateSolution(sol, blocked, 0.1);
    CHECK(reportHas(rep, "obstacle"));
  }
  SECTION("two robots sharing a point trip the separation check") {
    Scenario two = s;
    two.robots.push_back(disk(1, 0.2));
    two.starts.push_back(Configuration{{1, 3}, 0, 0});
    two.goals.push_back(Configuration{{11, 3}, 0, 0});
    Solution sol = base;
    sol.robots.push_back(straightLine(1, {1, 3}, {11, 3}, 120));
    sol.robots[1].states[60] = sol.robots[0].states[60];
    sol.robots[1].states[59].position = sol.robots[0].states[60].position;
    sol.robots[1].states[61].position = sol.robots[0].states[60].position;
    const ValidationReport rep = validateSolution(sol, two, 0.1);
    REQUIRE(reportHas(rep, "separation"));
    const auto it =
        std::find_if(rep.violations.begin(), rep.violations.end(),
                     [](const Violation& v) { return v.kind == "separation"; });
    CHECK(it->time == Catch::Approx(5.9));
    CHECK(it->robotA == 0);
    CHECK(it->robotB == 1);
  }
  SECTION("missing the goal trips the endpoint check") {
    Solution sol = base;
    sol.robots[0].states.back().position.x = 10.0;
    const ValidationReport rep = validateSolution(sol, s, 0.1);
    CHECK(reportHas(rep, "endpoint"));
  }
  SECTION("wrong robot count trips the structure check") {
    Solution sol = base;
    sol.robots.push_back(sol.robots[0]);
    const ValidationReport rep = validateSolution(sol, s, 0.1);
    CHECK(reportHas(rep, "structure"));
  }
  SECTION("summary lines carry time, kind, and robot") {
    Solution sol = base;
    sol.robots[0].states[60].position.x += 1.0;
    const ValidationReport rep = validateSolution(sol, s, 0.1);
    REQUIRE_FALSE(rep.clean());
    const std::string text = rep.summary();
    CHECK(text.find("t=") != std::string::npos);
    CHECK(text.find("velocity") != std::string::npos);
    CHECK(text.find("robot 0") != std::string::npos);
    CHECK(text.find("invalid") != std::string::npos);
  }
}

TEST_CASE("validator replays kinodynamic control tapes exactly") {
  Scenario s;
  s.seed = 1;
  s.workspace.bounds = {0, 0, 12, 4};
  s.robots = {car(0, 0.2)};
  Robot& r = s.robots[0];

  // Accelerate then symmetrically brake: ends exactly at rest.
  RobotTrajectory rt;
  rt.id = 0;
  Configuration q{{1, 2}, 0, 0};
  rt.states.push_back(q);
  for (int i = 0; i < 40; ++i) {
    const Control u{i < 20 ? 0.5 : -0.5, 0.0};
    q = integrate(r, q, u, 0.1);
    rt.states.push_back(q);
    rt.controls.push_back(u);
  }
  REQUIRE(std::abs(q.speed) < 1e-12);
  s.starts = {rt.states.front()};
  s.goals = {rt.states.back()};

  Solution sol;
  sol.dt = 0.1;
  sol.robots = {rt};
  CHECK(validateSolution(sol, s, 0.1).clean());

  SECTION("a tampered state breaks the dynamics replay") {
    Solution bad = sol;
    bad.robots[0].states[10].position.x += 1e-3;
    const ValidationReport rep = validateSolution(bad, s, 0.1);
    CHECK(reportHas(rep, "dynamics"));
  }
  SECTION("an out-of-range control is reported, not integrated") {
    Solution bad = sol;
    bad.robots[0].controls[5].accel = r.car->maxAccel + 0.5;
    const ValidationReport rep = validateSolution(bad, s, 0.1);
    CHECK(reportHas(rep, "control-bounds"));
  }
  SECTION("a missing control tape is a structure violation") {
    Solution bad = sol;
    bad.robots[0].controls.pop_back();
    const ValidationReport rep = validateSolution(bad, s, 0.1);
    CHECK(reportHas(rep, "structure"));
  }
}

// ---------------------------------------------------------------------------
// Conflict detection over the scheduled-path store

TEST_CASE("collision scan samples only overlapping step windows") {
  const std::vector<Robot> robots = {disk(0, 0.4), disk(1, 0.4)};
  MotionHypergraph mh;

  ScheduledPath a;
  a.id = 0;
  a.robots = {0};
  a.startStep = 0;
  a.path.robots = {0};
  a.path.dt = 0.1;
  for (int i = 0; i <= 10; ++i)
    a.path.states.push_back(CompositeConfiguration{{Configuration{{0.1 * i, 0}, 0, 0}}});
  mh.entries.push_back(a);

  PlanStats stats;

  SECTION("disjoint windows are never sampled") {
    ScheduledPath b = a;
    b.id = 1;
    b.robots = {1};
    b.path.robots = {1};
    b.startStep = 11;  // begins after `a` ends
    for (auto& st : b.path.states) st[0].position.y = 0.0;  // would collide
    const auto conflicts = findCollisions(mh, b, robots, &stats);
    CHECK(conflicts.empty());
    CHECK(stats.collisionPairsChecked == 0);
    CHECK(stats.disjointPairsSampled == 0);
  }
  SECTION("overlapping windows count as checked even without a hit") {
    ScheduledPath b = a;
    b.id = 1;
    b.robots = {1};
    b.path.robots = {1};
    for (auto& st : b.path.states) st[0].position.y = 5.0;  // far away
    const auto conflicts = findCollisions(mh, b, robots, &stats);
    CHECK(conflicts.empty());
    CHECK(stats.collisionPairsChecked == 1);
  }
  SECTION("a crossing is reported at its earliest shared instant") {
    // Robot 1 descends through robot 0's eastbound track.  At step k the
    // distance is sqrt(2)*|0.5 - 0.1k|, below the 0.4 separation of two
    // 0.2-radius discs first at k = 3.
    const std::vector<Robot> slim = {disk(0, 0.2), disk(1, 0.2)};
    ScheduledPath b;
    b.id = 1;
    b.robots = {1};
    b.startStep = 0;
    b.path.robots = {1};
    b.path.dt = 0.1;
    for (int i = 0; i <= 10; ++i)
      b.path.states.push_back(CompositeConfiguration{{Configuration{{0.5, 0.5 - 0.1 * i}, 0, 0}}});
    const auto conflicts = findCollisions(mh, b, slim, &stats);
    REQUIRE_FALSE(conflicts.empty());
    const MotionConflict& c = conflicts.front();
    CHECK(c.itemA == 0);
    CHECK(c.itemB == 1);
    CHECK(c.robotA == 0);
    CHECK(c.robotB == 1);
    CHECK(c.time == Catch::Approx(0.3));
  }
  SECTION("entries of the same robot are not self-conflicting") {
    ScheduledPath b = a;
    b.id = 1;  // same robot id 0, overlapping window, same positions
    const auto conflicts = findCollisions(mh, b, robots, &stats);
    CHECK(conflicts.empty());
  }
}

// ---------------------------------------------------------------------------
// End-to-end planning

TEST_CASE("single robot crosses a hall near-optimally") {
  const Scenario s = hallScenario(5);
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  REQUIRE(o.success());
  const Solution& sol = *o.solution;
  // Straight-line optimum is 10s at unit speed.
  CHECK(sol.makespan() <= 12.5);
  CHECK(o.stats.restarts == 0);
  CHECK(o.stats.disjointPairsSampled == 0);
  CHECK(validateSolution(sol, s, cfg.goalTolerance).clean());
  CHECK(logContains(o, "success after 0 restarts"));
}

TEST_CASE("opposing robots swap through a wide hall by serializing") {
  Scenario s = hallScenario(1);
  s.robots = {disk(0, 0.3), disk(1, 0.3)};
  s.starts = {Configuration{{1, 2}, 0, 0}, Configuration{{11, 2}, 0, 0}};
  s.goals = {Configuration{{11, 2}, 0, 0}, Configuration{{1, 2}, 0, 0}};
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  REQUIRE(o.success());
  CHECK(validateSolution(*o.solution, s, cfg.goalTolerance).clean());
  // Seed 1 resolves after exactly one conflict-driven restart.
  CHECK(o.stats.restarts == 1);
  CHECK(o.constraints.size() == 1);
  CHECK(logContains(o, "restart 1:"));
  CHECK(logContains(o, "constraints=1"));
  CHECK(logContains(o, "success after 1 restarts"));
}

TEST_CASE("opposing robots swap via a detour room") {
  Scenario s;
  s.seed = 7;
  s.workspace = bypassWorkspace();
  s.robots = {disk(0, 0.3), disk(1, 0.3)};
  s.starts = {Configuration{{1, 1.5}, 0, 0}, Configuration{{11, 1.5}, 0, 0}};
  s.goals = {Configuration{{11, 1.5}, 0, 0}, Configuration{{1, 1.5}, 0, 0}};
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  REQUIRE(o.success());
  CHECK(validateSolution(*o.solution, s, cfg.goalTolerance).clean());
}

TEST_CASE("four robots rotate through a plus junction") {
  const Scenario s = rotationScenario(97);
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  REQUIRE(o.success());
  const ValidationReport rep = validateSolution(*o.solution, s, cfg.goalTolerance);
  INFO(rep.summary());
  CHECK(rep.clean());
  CHECK(o.stats.collisionPairsChecked > 0);
  CHECK(o.stats.disjointPairsSampled == 0);
  // All four trajectories share one timeline.
  const std::size_t n = o.solution->robots[0].states.size();
  for (const auto& rt : o.solution->robots) CHECK(rt.states.size() == n);
}

TEST_CASE("kinodynamic cars cross a junction with exact control tapes") {
  const Scenario s = kinoJunctionScenario(31);
  PlannerConfig cfg;
  cfg.goalTolerance = 0.2;
  const PlanOutcome o = plan(s, cfg);
  REQUIRE(o.success());
  const Solution& sol = *o.solution;
  const ValidationReport rep = validateSolution(sol, s, cfg.goalTolerance);
  INFO(rep.summary());
  CHECK(rep.clean());
  for (const auto& rt : sol.robots) {
    REQUIRE(rt.controls.size() == rt.states.size() - 1);
    CHECK(std::abs(rt.states.back().speed) < 1e-9);
  }
}

TEST_CASE("planning is deterministic for a fixed seed") {
  const Scenario s = rotationScenario(97);
  PlannerConfig cfg;
  const PlanOutcome a = plan(s, cfg);
  const PlanOutcome b = plan(s, cfg);
  REQUIRE(a.success());
  REQUIRE(b.success());
  // Solution files carry no wall-clock fields, so equality is byte-level.
  CHECK(solutionToJson(*a.solution).dump() == solutionToJson(*b.solution).dump());
  CHECK(a.stats.restarts == b.stats.restarts);
  CHECK(a.constraints.size() == b.constraints.size());
  CHECK(a.logText() == b.logText());
}

TEST_CASE("different seeds may differ but all validate") {
  for (std::uint64_t seed : {2ULL, 3ULL, 4ULL}) {
    const Scenario s = rotationScenario(seed);
    PlannerConfig cfg;
    const PlanOutcome o = plan(s, cfg);
    REQUIRE(o.success());
    CHECK(validateSolution(*o.solution, s, cfg.goalTolerance).clean());
  }
}

TEST_CASE("an impossible swap fails with diagnostics") {
  // 0.7-wide corridor, two 0.3-radius robots, no pocket, no alternative
  // route: each fits alone but the pair cannot exchange sides.
  Scenario s;
  s.seed = 1;
  s.workspace.bounds = {0, 0, 12, 2.7};
  s.workspace.obstacles.push_back({{0, 0}, {12, 0}, {12, 1.0}, {0, 1.0}});
  s.workspace.obstacles.push_back({{0, 1.7}, {12, 1.7}, {12, 2.7}, {0, 2.7}});
  s.robots = {disk(0, 0.3), disk(1, 0.3)};
  s.starts = {Configuration{{1, 1.35}, 0, 0}, Configuration{{11, 1.35}, 0, 0}};
  s.goals = {Configuration{{11, 1.35}, 0, 0}, Configuration{{1, 1.35}, 0, 0}};
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  CHECK_FALSE(o.success());
  CHECK_FALSE(o.solution.has_value());
  CHECK(logContains(o, "failure"));
  CHECK(logContains(o, "skeleton search infeasible"));
}

TEST_CASE("a sealed-off goal fails with diagnostics") {
  Scenario s;
  s.seed = 1;
  s.workspace.bounds = {0, 0, 12, 4};
  s.workspace.obstacles.push_back({{5.9, 0}, {6.1, 0}, {6.1, 4}, {5.9, 4}});
  s.robots = {disk(0, 0.2)};
  s.starts = {Configuration{{1, 2}, 0, 0}};
  s.goals = {Configuration{{11, 2}, 0, 0}};
  PlannerConfig cfg;
  const PlanOutcome o = plan(s, cfg);
  CHECK_FALSE(o.success());
  CHECK(logContains(o, "infeasible"));
}

TEST_CASE("planning rejects invalid scenarios up front") {
  Scenario s = hallScenario(1);
  s.robots[0].radius = -1.0;
  PlannerConfig cfg;
  CHECK_THROWS_AS(plan(s, cfg), std::invalid_argument);
}
