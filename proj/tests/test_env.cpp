#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gdash/env.hpp"

using namespace gdash;

namespace {

Workspace emptyTen() {
  Workspace ws;
  ws.bounds = {0, 0, 10, 10};
  return ws;
}

Workspace tenWithUnitBox() {
  Workspace ws = emptyTen();
  ws.obstacles.push_back(rectPolygon(4, 4, 5, 5));
  return ws;
}

// Independent clearance oracle: walks every obstacle segment and every
// bounds wall at a fine step and takes the minimum point distance.
double bruteClearance(const Workspace& ws, const Vec2& p, double step = 1e-3) {
  for (const auto& poly : ws.obstacles)
    if (pointInPolygon(p, poly)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  auto scanSegment = [&](Vec2 a, Vec2 b) {
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= n; ++i) {
      const Vec2 q = a + (b - a) * (static_cast<double>(i) / n);
      best = std::min(best, distance(p, q));
    }
  };
  const Rect& r = ws.bounds;
  scanSegment({r.xmin, r.ymin}, {r.xmax, r.ymin});
  scanSegment({r.xmax, r.ymin}, {r.xmax, r.ymax});
  scanSegment({r.xmax, r.ymax}, {r.xmin, r.ymax});
  scanSegment({r.xmin, r.ymax}, {r.xmin, r.ymin});
  for (const auto& poly : ws.obstacles)
    for (std::size_t i = 0; i < poly.size(); ++i)
      scanSegment(poly[i], poly[(i + 1) % poly.size()]);
  return best;
}

// Explicit Euler at a very fine substep; reference for the RK4 integrator.
Configuration eulerOracle(const Configuration& q0, const Control& u,
                          const CarModel& car, double dt, int substeps) {
  double x = q0.position.x, y = q0.position.y, th = q0.heading, v = q0.speed;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    const double dx = v * std::cos(th);
    const double dy = v * std::sin(th);
    const double dth = v / car.wheelbase * std::tan(u.steer);
    x += h * dx;
    y += h * dy;
    th += h * dth;
    v += h * u.accel;
  }
  Configuration out;
  out.position = {x, y};
  out.heading = normalizeAngle(th);
  out.speed = v;
  return out;
}

Robot carRobot(double vmax = 5.0, double wheelbase = 0.25) {
  Robot r;
  r.id = 0;
  r.radius = 0.2;
  r.maxSpeed = vmax;
  r.car = CarModel{wheelbase, 2.0, 1.0};
  return r;
}

}  // namespace

TEST_CASE("clearance in an empty workspace is the wall distance") {
  const Workspace ws = emptyTen();
  CHECK(ws.clearance({5, 5}) == Catch::Approx(5.0));
  CHECK(ws.clearance({1, 5}) == Catch::Approx(1.0));
  CHECK_THROWS_AS(ws.clearance({-1, 5}), std::domain_error);
  CHECK_THROWS_AS(ws.clearance({5, 10.5}), std::domain_error);
}

TEST_CASE("clearance near an obstacle matches a brute-force scan") {
  const Workspace ws = tenWithUnitBox();
  CHECK(ws.clearance({3, 4.5}) == Catch::Approx(1.0));
  CHECK(ws.clearance({4.5, 4.5}) == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(0.05, 9.95);
  for (int i = 0; i < 40; ++i) {
    const Vec2 p{coord(rng), coord(rng)};
    CHECK(ws.clearance(p) == Catch::Approx(bruteClearance(ws, p)).margin(2e-3));
  }
}

TEST_CASE("clearance is 1-Lipschitz") {
  const Workspace ws = tenWithUnitBox();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{coord(rng), coord(rng)};
    const Vec2 q{coord(rng), coord(rng)};
    const double dc = std::abs(ws.clearance(p) - ws.clearance(q));
    CHECK(dc <= distance(p, q) + 1e-9);
  }
}

TEST_CASE("configuration validity uses an inclusive clearance boundary") {
  const Workspace ws = emptyTen();
  Robot r;
  r.radius = 0.4;
  CHECK(configValid(ws, r, {{5, 5}}));
  CHECK_FALSE(configValid(ws, r, {{0.2, 5}}));
  CHECK(configValid(ws, r, {{0.4, 5}}));  // exactly at the radius
  CHECK_FALSE(configValid(ws, r, {{-0.5, 5}}));
}

TEST_CASE("validity persists inside the clearance ball") {
  const Workspace ws = tenWithUnitBox();
  Robot r;
  r.radius = 0.3;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> coord(0.2, 9.8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int tested = 0;
  while (tested < 100) {
    const Configuration c{{coord(rng), coord(rng)}};
    if (!configValid(ws, r, c)) continue;
    const double slack = ws.clearance(c.position) - r.radius;
    if (slack <= 1e-6) continue;
    Vec2 d{unit(rng), unit(rng)};
    const double n = d.norm();
    if (n < 1e-9) continue;
    d = d * (0.99 * slack / n);
    CHECK(configValid(ws, r, {c.position + d}));
    ++tested;
  }
}

TEST_CASE("straight-line local paths are sampled at resolution") {
  const Workspace ws = tenWithUnitBox();
  Robot r;
  r.radius = 0.3;
  CHECK(localPathValid(ws, r, {{2, 2}}, {{2, 2}}, 0.05));
  CHECK_FALSE(localPathValid(ws, r, {{3, 4.5}}, {{6, 4.5}}, 0.05));
  CHECK(localPathValid(ws, r, {{2, 2}}, {{2, 8}}, 0.05));
}

TEST_CASE("a path grazing an obstacle at exactly the radius is valid") {
  const Workspace ws = tenWithUnitBox();
  Robot r;
  r.radius = 0.5;
  // y = 5.5 stays exactly 0.5 above the box top edge at y = 5.
  CHECK(localPathValid(ws, r, {{2, 5.5}}, {{7, 5.5}}, 0.1));
}

TEST_CASE("robot collision is strict on the sum of radii") {
  Robot a, b;
  a.radius = b.radius = 0.4;
  CHECK_FALSE(robotsCollide(a, {{0, 0}}, b, {{1.0, 0}}));
  CHECK(robotsCollide(a, {{0, 0}}, b, {{0.79, 0}}));
  CHECK_FALSE(robotsCollide(a, {{0, 0}}, b, {{0.8, 0}}));
}

TEST_CASE("robot collision is symmetric") {
  Robot a, b;
  a.radius = 0.3;
  b.radius = 0.5;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Configuration ca{{coord(rng), coord(rng)}};
    const Configuration cb{{coord(rng), coord(rng)}};
    CHECK(robotsCollide(a, ca, b, cb) == robotsCollide(b, cb, a, ca));
  }
}

TEST_CASE("integrator drives straight at constant speed") {
  const Robot r = carRobot();
  Configuration q;
  q.speed = 1.0;
  const Configuration out = integrate(r, q, {0, 0}, 1.0);
  CHECK(out.position.x == Catch::Approx(1.0));
  CHECK(out.position.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(out.heading == 0.0);
  CHECK(out.speed == 1.0);
}

TEST_CASE("integrator matches constant acceleration exactly") {
  const Robot r = carRobot();
  Configuration q;  // at rest
  const Configuration out = integrate(r, q, {1.0, 0}, 1.0);
  CHECK(out.position.x == Catch::Approx(0.5));
  CHECK(out.speed == Catch::Approx(1.0));
}

TEST_CASE("integrator heading rate matches a fine-step oracle") {
  Robot r = carRobot(5.0, 1.0);
  Configuration q;
  q.speed = 1.0;
  const Control u{0.0, 0.3};
  const double dt = 0.01;
  const Configuration rk = integrate(r, q, u, dt);
  const Configuration ref = eulerOracle(q, u, *r.car, dt, 100000);
  CHECK(rk.heading == Catch::Approx(ref.heading).margin(1e-6));
  CHECK(rk.position.x == Catch::Approx(ref.position.x).margin(1e-6));
  CHECK(rk.position.y == Catch::Approx(ref.position.y).margin(1e-6));
  CHECK(rk.heading == Catch::Approx(dt * std::tan(0.3)).margin(1e-4));
}

TEST_CASE("zero control preserves speed and heading exactly") {
  const Robot r = carRobot();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  std::uniform_real_distribution<double> spd(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    Configuration q;
    q.position = {ang(rng), ang(rng)};
    q.heading = normalizeAngle(ang(rng));
    q.speed = spd(rng);
    const Configuration out = integrate(r, q, {0, 0}, 0.37);
    CHECK(out.heading == q.heading);
    CHECK(out.speed == q.speed);
  }
}

TEST_CASE("integration converges under step halving") {
  const Robot r = carRobot(5.0, 0.25);
  Configuration q;
  q.speed = 0.2;
  const Control u{0.5, 0.4};
  const double dt = 0.8;
  const Configuration ref = eulerOracle(q, u, *r.car, dt, 2000000);

  double prevErr = std::numeric_limits<double>::infinity();
  for (int n : {1, 2, 4, 8}) {
    Configuration cur = q;
    for (int i = 0; i < n; ++i) cur = integrate(r, cur, u, dt / n);
    const double err = std::max({std::abs(cur.position.x - ref.position.x),
                                 std::abs(cur.position.y - ref.position.y),
                                 std::abs(cur.heading - ref.heading),
                                 std::abs(cur.speed - ref.speed)});
    CHECK(err <= prevErr + 1e-12);
    prevErr = err;
    if (n == 8) {
      const double scale = std::max(1.0, ref.position.norm());
      CHECK(err / scale < 1e-5);
    }
  }
}

TEST_CASE("integrator rejects bad inputs") {
  const Robot car = carRobot();
  Robot disk;
  disk.radius = 0.2;
  Configuration q;
  CHECK_THROWS_AS(integrate(disk, q, {0, 0}, 0.1), std::domain_error);
  CHECK_THROWS_AS(integrate(car, q, {10.0, 0}, 0.1), std::domain_error);
  CHECK_THROWS_AS(integrate(car, q, {0, 3.0}, 0.1), std::domain_error);
  CHECK_THROWS_AS(integrate(car, q, {0, 0}, 0.0), std::domain_error);
}

TEST_CASE("speed is clamped to the robot limit") {
  Robot r = carRobot(1.0);
  Configuration q;
  q.speed = 0.9;
  const Configuration out = integrate(r, q, {2.0, 0}, 1.0);
  CHECK(out.speed == 1.0);
}
