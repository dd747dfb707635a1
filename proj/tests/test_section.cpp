#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lorenz/section.hpp"

using namespace lorenz;

namespace {
const Params classical{10.0, 28.0, 8.0 / 3.0};

Section default_section() { return build_section(classical, SectionSpec{}); }
}  // namespace

TEST_CASE("paraboloid value and inside convention") {
  CHECK(paraboloid_value(classical, {0.0, 0.0, 5.0}) == doctest::Approx(-40.0 / 3.0));
  CHECK(paraboloid_value(classical, {2.0, 4.0, 3.0}) == doctest::Approx(0.0));
  double x0 = std::sqrt(72.0);
  CHECK(std::abs(paraboloid_value(classical, {x0, x0, 27.0})) < 1e-12);
}

TEST_CASE("tangency value") {
  CHECK(tangency_value(classical, 0.0, 0.0) == 0.0);
  double x0 = std::sqrt(72.0);
  CHECK(std::abs(tangency_value(classical, x0, x0)) < 1e-9);
  CHECK(tangency_value(classical, 0.0, 1.0) == doctest::Approx(10.0));
  // even under the symmetry, exactly
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    double x = u(rng), y = u(rng);
    CHECK(tangency_value(classical, x, y) == tangency_value(classical, -x, -y));
  }
}

TEST_CASE("tangency value is the time derivative of the paraboloid value") {
  // N.X on P equals d/dt (xy - beta z) along the flow
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  for (int i = 0; i < 200; ++i) {
    double x = u(rng), y = u(rng);
    State s{x, y, x * y / classical.beta};
    Vec3 f = vector_field(classical, s);
    double dgdt = f.x * s.y + s.x * f.y - classical.beta * f.z;
    CHECK(tangency_value(classical, x, y) == doctest::Approx(dgdt).epsilon(1e-10));
  }
}

TEST_CASE("tangency curves pass through the wing centers and avoid the origin") {
  double x0 = std::sqrt(72.0);
  PlanarRect bbox{-40.0, 40.0, -40.0, 40.0};
  TangencyCurves curves = tangency_curves(classical, bbox, 400);
  REQUIRE(curves.delta_plus.size() > 100);

  auto min_dist_to = [](const std::vector<Vec3>& poly, const Vec3& q) {
    double best = 1e300;
    for (const auto& v : poly) best = std::min(best, norm(v - q));
    return best;
  };
  Vec3 pplus{x0, x0, 27.0};
  CHECK(min_dist_to(curves.delta_plus, pplus) < 0.5);  // within sampling resolution
  CHECK(min_dist_to(curves.delta_minus, symmetry_map(pplus)) < 0.5);

  // the curves stay away from the origin (domain A)
  CHECK(min_dist_to(curves.delta_plus, {0.0, 0.0, 0.0}) > 5.0);
  CHECK(min_dist_to(curves.delta_minus, {0.0, 0.0, 0.0}) > 5.0);

  // vertexwise tangency residual and symmetry
  REQUIRE(curves.delta_plus.size() == curves.delta_minus.size());
  for (std::size_t i = 0; i < curves.delta_plus.size(); ++i) {
    const Vec3& v = curves.delta_plus[i];
    CHECK(std::abs(tangency_value(classical, v.x, v.y)) < 1e-9 * (1.0 + v.x * v.x * v.x * v.x));
    Vec3 mirrored = symmetry_map(v);
    CHECK(norm(curves.delta_minus[i] - mirrored) < 1e-9);
  }

  // two components: the polylines never touch
  double gap = 1e300;
  for (const auto& a : curves.delta_plus)
    for (const auto& b : curves.delta_minus) gap = std::min(gap, norm(a - b));
  CHECK(gap > 1.0);
}

TEST_CASE("tangency curve endpoints land on the ellipsoid") {
  double R = 1000.0;
  PlanarRect bbox{-400.0, 400.0, -400.0, 400.0};
  TangencyCurves curves = tangency_curves(classical, bbox, 400, R);
  auto evalue = [&](const Vec3& v) {
    double dz = v.z - 2.0 * classical.rho;
    return classical.rho * v.x * v.x + classical.sigma * v.y * v.y + classical.sigma * dz * dz -
           R * R;
  };
  const Vec3& front = curves.delta_plus.front();
  const Vec3& back = curves.delta_plus.back();
  CHECK(std::abs(evalue(front)) / (R * R) < 1e-6);
  CHECK(std::abs(evalue(back)) / (R * R) < 1e-6);
  CHECK(std::abs(tangency_value(classical, front.x, front.y)) <
        1e-6 * (1.0 + std::abs(front.x * front.x * front.x * front.y)));
}

TEST_CASE("tangency curves error cases") {
  PlanarRect far_box{100.0, 200.0, 100.0, 200.0};
  CHECK_THROWS_AS(tangency_curves(classical, far_box, 100), EmptyCurves);
  CHECK_THROWS_AS(tangency_curves(Params{10.0, 2.0, 8.0 / 3.0},
                                  PlanarRect{-40.0, 40.0, -40.0, 40.0}, 100),
                  SectionInvalid);
}

TEST_CASE("section membership") {
  Section sec = default_section();
  double eps = sec.epsilon();
  CHECK(eps == doctest::Approx(0.27));

  CHECK(sec.contains({0.1, 0.1, eps}));
  CHECK_FALSE(sec.contains({0.0, 0.0, 0.0}));  // below the plane, off the band
  CHECK(sec.part_of({0.1, 0.1, eps}) == SectionPart::Plane);

  // a paraboloid band point: z = xy/beta with xy >= beta*eps and N.X > 0
  State band{2.0, 3.0, 6.0 / classical.beta};
  CHECK(tangency_value(classical, band.x, band.y) > 0.0);
  CHECK(sec.part_of(band) == SectionPart::Paraboloid);

  // membership is invariant under the symmetry
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    State s{u(rng), u(rng), u(rng)};
    CHECK(sec.contains(s) == sec.contains(symmetry_map(s)));
  }
}

TEST_CASE("classification symbols and parts") {
  Section sec = default_section();
  double eps = sec.epsilon();

  SectionPoint a = classify_crossing(sec, {0.5, 0.5, eps}, 1.0);
  CHECK(a.part == SectionPart::Plane);
  CHECK(a.symbol == Symbol::A);
  CHECK(a.transversality > 0.0);
  CHECK(a.crossing_time == 1.0);

  SectionPoint b = classify_crossing(sec, symmetry_map(State{0.5, 0.5, eps}), 1.0);
  CHECK(b.symbol == Symbol::B);

  SectionPoint boundary = classify_crossing(sec, {1e-15, 0.0, eps}, 0.0);
  CHECK(boundary.symbol == Symbol::Boundary);

  CHECK_THROWS_AS(classify_crossing(sec, {0.0, 0.0, 0.0}, 0.0), NotOnSection);

  // plane-part classification and membership agree with the inside test
  CHECK(paraboloid_value(classical, a.state) < 0.0);
}

TEST_CASE("transversality validation passes at defaults") {
  Section sec = default_section();
  TransversalityReport rep = validate_transversality(classical, sec, 10000, false);
  CHECK(rep.passed);
  REQUIRE(rep.parts.size() == 3);
  for (const auto& part : rep.parts) {
    CHECK(part.min_margin > 0.0);
    CHECK(part.failures.empty());
  }
}

TEST_CASE("oversized epsilon makes the junction touch the tangency set and fails") {
  SectionSpec spec;
  spec.epsilon = 26.0;  // within (0, rho-1) but far beyond 'small enough'
  CHECK_THROWS_AS(build_section(classical, spec), SectionInvalid);

  // non-strict run reports the junction failure rather than throwing
  Section sec = build_section(classical, spec, 0);
  TransversalityReport rep = validate_transversality(classical, sec, 2000, false);
  CHECK_FALSE(rep.passed);
  bool junction_failed = false;
  for (const auto& part : rep.parts)
    if (part.part == "junction" && !part.failures.empty()) junction_failed = true;
  CHECK(junction_failed);
}

TEST_CASE("trapping validation") {
  TrappingReport ok = validate_trapping(classical, 1000.0, 4096, false);
  CHECK(ok.passed);
  CHECK(ok.min_inflow > 0.0);

  TrappingReport bad = validate_trapping(classical, 1.0, 4096, false);
  CHECK_FALSE(bad.passed);
  CHECK_FALSE(bad.failures.empty());
  CHECK_THROWS_AS(validate_trapping(classical, 1.0, 4096, true), NotTrapping);

  // the inflow is symmetric under pi, so pass/fail is as well
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    State s{300.0 * u(rng), 300.0 * u(rng), 56.0 + 300.0 * u(rng)};
    Vec3 grad{2.0 * classical.rho * s.x, 2.0 * classical.sigma * s.y,
              2.0 * classical.sigma * (s.z - 2.0 * classical.rho)};
    State m = symmetry_map(s);
    Vec3 gradm{2.0 * classical.rho * m.x, 2.0 * classical.sigma * m.y,
               2.0 * classical.sigma * (m.z - 2.0 * classical.rho)};
    double in1 = -dot(grad, vector_field(classical, s));
    double in2 = -dot(gradm, vector_field(classical, m));
    CHECK(in1 == doctest::Approx(in2).epsilon(1e-12));
  }
}

TEST_CASE("spec validation errors") {
  SectionSpec bad;
  bad.epsilon = 40.0;  // >= rho - 1
  CHECK_THROWS_AS(build_section(classical, bad), SectionInvalid);
  CHECK_THROWS_AS(build_section(Params{10.0, 2.0, 8.0 / 3.0}, SectionSpec{}), SectionInvalid);
}

TEST_CASE("crossing scanner walks the attractor and classifies crossings") {
  Section sec = default_section();
  CrossingScanner::Options opt;
  opt.max_time = 200.0;
  CrossingScanner scan(sec, {1.0, 1.0, 1.0}, opt);

  int crossings = 0, plane = 0, band = 0;
  double last_t = 0.0;
  for (int i = 0; i < 60; ++i) {
    auto res = scan.next();
    REQUIRE(res.outcome == CrossingScanner::Outcome::Crossed);
    CHECK(res.t > last_t);
    last_t = res.t;
    ++crossings;
    if (res.point.part == SectionPart::Plane)
      ++plane;
    else
      ++band;
    CHECK(sec.contains(res.point.state));
    if (res.point.part == SectionPart::Paraboloid)
      CHECK(std::abs(paraboloid_value(classical, res.point.state)) < 1e-9);
    else
      CHECK(std::abs(res.point.state.z - sec.epsilon()) < 1e-9);
  }
  CHECK(crossings == 60);
  CHECK(band > 30);  // z-minima crossings dominate at classical parameters
  (void)plane;
}

TEST_CASE("scanner respects the time budget") {
  Section sec = default_section();
  CrossingScanner::Options opt;
  opt.max_time = 0.01;  // too little time to reach the section
  CrossingScanner scan(sec, {0.1, 0.1, 45.0}, opt);  // deep inside P, high above the plane
  auto res = scan.next();
  CHECK(res.outcome == CrossingScanner::Outcome::TimedOut);
  // a later call with an exhausted budget stays TimedOut
  CHECK(scan.next().outcome == CrossingScanner::Outcome::TimedOut);
}

TEST_CASE("scanner reports capture at low rho") {
  // below the homoclinic parameter the wing centers are attracting
  Params p{10.0, 10.0, 8.0 / 3.0};
  Section sec = build_section(p, SectionSpec{}, 0);
  CrossingScanner::Options opt;
  opt.max_time = 400.0;
  CrossingScanner scan(sec, {1.0, 1.0, 1.0}, opt);
  for (int i = 0; i < 100000; ++i) {
    auto res = scan.next();
    if (res.outcome == CrossingScanner::Outcome::Crossed) continue;
    CHECK((res.outcome == CrossingScanner::Outcome::CapturedPlus ||
           res.outcome == CrossingScanner::Outcome::CapturedMinus));
    return;
  }
  FAIL("orbit was never captured");
}
