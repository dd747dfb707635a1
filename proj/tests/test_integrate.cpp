#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lorenz/integrate.hpp"
#include "oracles.hpp"

using namespace lorenz;

namespace {
const Params classical{10.0, 28.0, 8.0 / 3.0};
IntegratorConfig tight() {
  IntegratorConfig c;
  c.rel_tol = 1e-10;
  c.abs_tol = 1e-12;
  return c;
}
}  // namespace

TEST_CASE("flow matches the fixed-step RK4 oracle") {
  State s0{1.0, 1.0, 1.0};
  State a = flow_map(classical, s0, 1.0, tight());
  State b = oracle::rk4_flow(classical, s0, 1.0, 200000);
  CHECK(norm(a - b) < 1e-8 * (1.0 + norm(b)));
}

TEST_CASE("flow map identities") {
  State s0{1.0, 1.0, 1.0};
  IntegratorConfig cfg = tight();

  State same = flow_map(classical, s0, 0.0, cfg);
  CHECK(same.x == s0.x);
  CHECK(same.y == s0.y);
  CHECK(same.z == s0.z);

  State ab = flow_map(classical, flow_map(classical, s0, 0.5, cfg), 0.5, cfg);
  State whole = flow_map(classical, s0, 1.0, cfg);
  CHECK(norm(ab - whole) < 1e-8 * (1.0 + norm(whole)));

  // The round trip inverts the forward flow's strongest contraction, so the
  // truncation error comes back amplified by about exp(sigma+1+beta); the
  // 1e-7 figure needs the tightest tolerance setting.
  IntegratorConfig finest;
  finest.rel_tol = 1e-13;
  finest.abs_tol = 1e-15;
  State back = flow_map(classical, flow_map(classical, s0, 1.0, finest), -1.0, finest);
  CHECK(norm(back - s0) < 1e-7 * (1.0 + norm(s0)));

  State back_default = flow_map(classical, flow_map(classical, s0, 1.0, cfg), -1.0, cfg);
  CHECK(norm(back_default - s0) < 1e-4 * (1.0 + norm(s0)));
}

TEST_CASE("small-time Taylor check: error is O(t^2)") {
  State s0{2.0, -1.0, 15.0};
  IntegratorConfig cfg = tight();
  Vec3 f = vector_field(classical, s0);
  double prev_ratio = 0.0;
  for (double t : {1e-3, 5e-4, 2.5e-4}) {
    State p = flow_map(classical, s0, t, cfg);
    double err = norm(p - (s0 + t * f));
    double ratio = err / (t * t);
    if (prev_ratio > 0.0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(0.2));
    prev_ratio = ratio;
  }
}

TEST_CASE("integration is pi-equivariant") {
  IntegratorConfig cfg = tight();
  State s0{1.3, -2.1, 17.0};
  State a = flow_map(classical, symmetry_map(s0), 1.0, cfg);
  State b = symmetry_map(flow_map(classical, s0, 1.0, cfg));
  CHECK(norm(a - b) <= 1e-8 * (1.0 + norm(b)));
}

TEST_CASE("trajectory dense output") {
  IntegratorConfig cfg = tight();
  State s0{1.0, 1.0, 1.0};
  Trajectory traj = integrate(classical, s0, {0.0, 2.0}, cfg);
  REQUIRE(traj.step_count() > 10);

  // node reproduction to round-off
  auto nodes = traj.nodes();
  for (std::size_t i = 0; i < nodes.size(); i += 7) {
    State via_eval = traj.eval(nodes[i].first);
    CHECK(norm(via_eval - nodes[i].second) < 1e-13 * (1.0 + norm(nodes[i].second)));
  }
  // times strictly increasing
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i].first > nodes[i - 1].first);

  // interior accuracy against a tight flow
  for (double t : {0.373, 0.981, 1.546}) {
    State dense = traj.eval(t);
    State ref = oracle::rk4_flow(classical, s0, t, 200000);
    CHECK(norm(dense - ref) < 1e-7 * (1.0 + norm(ref)));
  }
}

TEST_CASE("tolerance tightening: order check across random initial conditions") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  std::uniform_real_distribution<double> uz(5.0, 40.0);
  IntegratorConfig loose;
  loose.rel_tol = 1e-8;
  loose.abs_tol = 1e-10;
  IntegratorConfig tighter;
  tighter.rel_tol = 1e-9;
  tighter.abs_tol = 1e-11;
  int within = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    State s0{u(rng), u(rng), uz(rng)};
    State a = flow_map(classical, s0, 1.0, loose);
    State b = flow_map(classical, s0, 1.0, tighter);
    // global error of the looser run stays within a modest multiple of the
    // tolerance over one time unit
    if (norm(a - b) <= 100.0 * (loose.rel_tol * norm(b) + loose.abs_tol)) ++within;
  }
  CHECK(within >= trials - 2);
}

TEST_CASE("volume contraction matches the divergence") {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  State base{1.0, 1.0, 20.0};
  double d = 1e-5;
  State s1 = base + Vec3{d, 0.0, 0.0};
  State s2 = base + Vec3{0.0, d, 0.0};
  State s3 = base + Vec3{0.0, 0.0, d};

  double t = 1.0;
  State b0 = flow_map(classical, base, t, cfg);
  Vec3 e1 = flow_map(classical, s1, t, cfg) - b0;
  Vec3 e2 = flow_map(classical, s2, t, cfg) - b0;
  Vec3 e3 = flow_map(classical, s3, t, cfg) - b0;
  double vol = std::abs(dot(e1, cross(e2, e3)));
  double vol0 = d * d * d;
  double ratio = vol / vol0;
  double expected = std::exp(divergence(classical) * t);
  CHECK(ratio == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("trapping ellipsoid is never exited") {
  IntegratorConfig cfg = tight();
  const Params& p = classical;
  double R = 1000.0;
  auto evalue = [&](const State& s) {
    double dz = s.z - 2.0 * p.rho;
    return p.rho * s.x * s.x + p.sigma * s.y * s.y + p.sigma * dz * dz;
  };
  // start on the ellipsoid
  State s0{R / std::sqrt(p.rho), 0.0, 2.0 * p.rho};
  CHECK(evalue(s0) == doctest::Approx(R * R));
  Trajectory traj = integrate(p, s0, {0.0, 10.0}, cfg);
  for (const auto& [t, s] : traj.nodes()) CHECK(evalue(s) <= R * R * (1.0 + 1e-9));
  CHECK(evalue(traj.back()) < R * R);
}

TEST_CASE("event detection: plane crossing") {
  IntegratorConfig cfg = tight();
  cfg.max_time = 50.0;
  EventSpec ev;
  ev.value = [](const Params&, const State& s) { return s.z - 27.0; };
  ev.direction = EventDirection::Any;
  EventHit hit = advance_to_event(classical, {1.0, 1.0, 40.0}, ev, cfg);
  CHECK(std::abs(hit.state.z - 27.0) <= 1e-9);
  CHECK(hit.t > 0.0);

  // residual is tolerance-limited, cross-validated at a looser setting
  IntegratorConfig loose = cfg;
  loose.event_tol = 1e-9;
  EventHit hit2 = advance_to_event(classical, {1.0, 1.0, 40.0}, ev, loose);
  CHECK(std::abs(hit2.state.z - 27.0) <= 1e-6);
  CHECK(hit.t == doctest::Approx(hit2.t).epsilon(1e-6));
}

TEST_CASE("event detection: no event before max_time") {
  IntegratorConfig cfg = tight();
  cfg.max_time = 50.0;
  EventSpec ev;
  ev.value = [](const Params&, const State& s) { return s.z - 1e6; };
  CHECK_THROWS_AS(advance_to_event(classical, {1.0, 1.0, 1.0}, ev, cfg), NoEvent);
}

TEST_CASE("event direction filter") {
  IntegratorConfig cfg = tight();
  cfg.max_time = 50.0;
  State s0{1.0, 1.0, 40.0};  // above the plane, so the first crossing is downward

  EventSpec any;
  any.value = [](const Params&, const State& s) { return s.z - 27.0; };
  any.direction = EventDirection::Any;
  EventHit first = advance_to_event(classical, s0, any, cfg);

  EventSpec up = any;
  up.direction = EventDirection::Up;
  EventHit rising = advance_to_event(classical, s0, up, cfg);
  CHECK(rising.t >= first.t);
  CHECK(rising.derivative > 0.0);

  EventSpec down = any;
  down.direction = EventDirection::Down;
  EventHit falling = advance_to_event(classical, s0, down, cfg);
  CHECK(falling.t == doctest::Approx(first.t));
  CHECK(falling.derivative < 0.0);
}

TEST_CASE("event idempotence: restarting just past an event finds the next one") {
  IntegratorConfig cfg = tight();
  cfg.max_time = 50.0;
  EventSpec ev;
  ev.value = [](const Params&, const State& s) { return s.z - 27.0; };
  EventHit a = advance_to_event(classical, {1.0, 1.0, 40.0}, ev, cfg);
  EventHit b = advance_to_event(classical, a.state, ev, cfg);
  CHECK(b.t > 1e-4);  // a genuinely different crossing, not the same root
  EventHit c = advance_to_event(classical, b.state, ev, cfg);
  CHECK(c.t > 1e-4);
}

TEST_CASE("csv export shape") {
  IntegratorConfig cfg = tight();
  Trajectory traj = integrate(classical, {1.0, 1.0, 1.0}, {0.0, 0.5}, cfg);
  std::ostringstream os;
  write_csv(traj, os);
  std::string text = os.str();
  CHECK(text.rfind("t,x,y,z\n", 0) == 0);
  std::size_t rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == traj.step_count() + 2);  // header + one per step + final state
}

TEST_CASE("config validation") {
  IntegratorConfig bad;
  bad.rel_tol = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  IntegratorConfig bad2;
  bad2.max_time = 0.0;
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
}
