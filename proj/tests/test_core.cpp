#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lorenz/core.hpp"

using namespace lorenz;

namespace {
const Params classical{10.0, 28.0, 8.0 / 3.0};
}

TEST_CASE("vector field values") {
  CHECK(norm(vector_field(classical, {0.0, 0.0, 0.0})) == 0.0);

  State f = vector_field(classical, {1.0, 1.0, 1.0});
  CHECK(f.x == doctest::Approx(0.0));
  CHECK(f.y == doctest::Approx(26.0));
  CHECK(f.z == doctest::Approx(-5.0 / 3.0));

  double x0 = std::sqrt(72.0);
  CHECK(norm(vector_field(classical, {x0, x0, 27.0})) < 1e-12);
}

TEST_CASE("vector field is exactly pi-equivariant in floating point") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    State s{u(rng), u(rng), u(rng)};
    State a = vector_field(classical, symmetry_map(s));
    State b = symmetry_map(vector_field(classical, s));
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
  }
}

TEST_CASE("jacobian at the origin and symmetry conjugation") {
  Mat3 j = jacobian(classical, {0.0, 0.0, 0.0});
  CHECK(j[0][0] == -10.0);
  CHECK(j[0][1] == 10.0);
  CHECK(j[0][2] == 0.0);
  CHECK(j[1][0] == 28.0);
  CHECK(j[1][1] == -1.0);
  CHECK(j[1][2] == 0.0);
  CHECK(j[2][0] == 0.0);
  CHECK(j[2][1] == 0.0);
  CHECK(j[2][2] == doctest::Approx(-8.0 / 3.0));

  // J(pi(s)) = Pi J(s) Pi exactly
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  Mat3 pi = symmetry_matrix();
  for (int i = 0; i < 200; ++i) {
    State s{u(rng), u(rng), u(rng)};
    Mat3 lhs = jacobian(classical, symmetry_map(s));
    Mat3 rhs = pi * jacobian(classical, s) * pi;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(lhs[r][c] == rhs[r][c]);
  }
}

TEST_CASE("trace equals divergence exactly at random states") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> up(0.1, 40.0);
  for (int i = 0; i < 10000; ++i) {
    Params p{up(rng), up(rng), up(rng)};
    State s{u(rng), u(rng), u(rng)};
    CHECK(trace(jacobian(p, s)) == divergence(p));
  }
}

TEST_CASE("divergence values") {
  CHECK(divergence(classical) == doctest::Approx(-41.0 / 3.0));
  CHECK(divergence(Params{1.0, 1.0, 1.0}) == doctest::Approx(-3.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> up(1e-3, 100.0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(divergence(Params{up(rng), up(rng), up(rng)}) < 0.0);
  }
}

TEST_CASE("fixed points") {
  auto fp = fixed_points(classical);
  CHECK(fp.p_plus.x == doctest::Approx(8.48528137423857).epsilon(1e-12));
  CHECK(fp.p_plus.y == doctest::Approx(8.48528137423857).epsilon(1e-12));
  CHECK(fp.p_plus.z == doctest::Approx(27.0));
  State mirrored = symmetry_map(fp.p_plus);
  CHECK(fp.p_minus.x == mirrored.x);
  CHECK(fp.p_minus.y == mirrored.y);
  CHECK(fp.p_minus.z == mirrored.z);

  auto fp2 = fixed_points(Params{1.0, 2.0, 1.0});
  CHECK(fp2.p_plus.x == doctest::Approx(1.0));
  CHECK(fp2.p_plus.z == doctest::Approx(1.0));

  CHECK_THROWS_AS(fixed_points(Params{10.0, 1.0, 8.0 / 3.0}), DegenerateParameters);

  // field vanishes at all fixed points for random in-domain parameters
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> up(1.5, 60.0);
  for (int i = 0; i < 300; ++i) {
    Params p{up(rng), up(rng), up(rng)};
    auto f = fixed_points(p);
    CHECK(norm(vector_field(p, f.origin)) <= 1e-12);
    CHECK(norm(vector_field(p, f.p_plus)) <= 1e-12 * (1.0 + norm(f.p_plus)));
    CHECK(norm(vector_field(p, f.p_minus)) <= 1e-12 * (1.0 + norm(f.p_minus)));
  }
}

TEST_CASE("symmetry map") {
  State s = symmetry_map({1.0, 2.0, 3.0});
  CHECK(s.x == -1.0);
  CHECK(s.y == -2.0);
  CHECK(s.z == 3.0);
  State t = symmetry_map(symmetry_map({0.3, -0.7, 1.9}));
  CHECK(t.x == 0.3);
  CHECK(t.y == -0.7);
  CHECK(t.z == 1.9);
  // fixed set is the z-axis
  CHECK(symmetry_map({0.0, 0.0, 5.0}).x == 0.0);
  CHECK(symmetry_map({0.0, 0.0, 5.0}).y == 0.0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Params(-1.0, 28.0, 8.0 / 3.0), DegenerateParameters);
  CHECK_THROWS_AS(Params(10.0, 0.0, 8.0 / 3.0), DegenerateParameters);
  CHECK_THROWS_AS(Params(10.0, 28.0, -0.5), DegenerateParameters);
}

TEST_CASE("eigen decomposition at the origin") {
  auto ed = eigen_at(classical, {0.0, 0.0, 0.0});
  REQUIRE(ed.pairs.size() == 3);
  CHECK(ed.at_fixed_point);
  // frozen closed-form values: (-11 +- sqrt(1201))/2 and -beta
  CHECK(ed.pairs[0].value.real() == doctest::Approx(-22.827723451163457).epsilon(1e-12));
  CHECK(ed.pairs[1].value.real() == doctest::Approx(-8.0 / 3.0).epsilon(1e-12));
  CHECK(ed.pairs[2].value.real() == doctest::Approx(11.827723451163457).epsilon(1e-12));
  for (const auto& pair : ed.pairs) CHECK(pair.value.imag() == 0.0);
}

TEST_CASE("origin eigenvalues: three reals, exactly one positive when rho > 1") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> up(1.1, 80.0);
  for (int i = 0; i < 200; ++i) {
    Params p{up(rng), up(rng), up(rng)};
    auto ed = eigen_at(p, {0.0, 0.0, 0.0});
    int positive = 0;
    for (const auto& pair : ed.pairs) {
      CHECK(pair.value.imag() == 0.0);
      if (pair.value.real() > 0.0) ++positive;
    }
    CHECK(positive == 1);
  }
}

TEST_CASE("eigen decomposition at the wing center") {
  auto fp = fixed_points(classical);
  auto ed = eigen_at(classical, fp.p_plus);
  REQUIRE(ed.pairs.size() == 3);
  // frozen roots of lam^3 + (sigma+beta+1) lam^2 + beta(sigma+rho) lam + 2 sigma beta (rho-1)
  CHECK(ed.pairs[0].value.real() == doctest::Approx(-13.854577914596));
  CHECK(ed.pairs[0].value.imag() == doctest::Approx(0.0));
  CHECK(ed.pairs[1].value.real() == doctest::Approx(0.0939556239648));
  CHECK(std::abs(ed.pairs[1].value.imag()) == doctest::Approx(10.194505220927));
  CHECK(ed.pairs[2].value.real() == doctest::Approx(0.0939556239648));
  // ordering: ties in real part sorted by imaginary part
  CHECK(ed.pairs[1].value.imag() < ed.pairs[2].value.imag());
}

TEST_CASE("eigenpair residuals stay below 1e-10 relative") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> up(1.5, 50.0);
  for (int i = 0; i < 100; ++i) {
    Params p{up(rng), up(rng), up(rng)};
    auto fp = fixed_points(p);
    for (const State& s : {fp.origin, fp.p_plus, fp.p_minus}) {
      auto ed = eigen_at(p, s);  // residual-checked internally, throws on failure
      CHECK(ed.pairs.size() == 3);
      CHECK(ed.at_fixed_point);
    }
  }
}

TEST_CASE("eigen decomposition off a fixed point still works, flagged") {
  auto ed = eigen_at(classical, {3.0, -1.0, 12.0});
  CHECK_FALSE(ed.at_fixed_point);
  CHECK(ed.pairs.size() == 3);
}

TEST_CASE("domain A predicate") {
  CHECK(in_domain_A(classical));
  CHECK_FALSE(in_domain_A(Params{10.0, 2.0, 8.0 / 3.0}));
  // boundary is excluded: rho exactly (sigma+1)^2/(4 sigma)
  double sigma = 10.0;
  double threshold = (sigma + 1.0) * (sigma + 1.0) / (4.0 * sigma);
  CHECK_FALSE(in_domain_A(Params{sigma, threshold, 1.0}));
  CHECK(in_domain_A(Params{sigma, threshold + 1e-9, 1.0}));
  // rho must also exceed 1
  CHECK_FALSE(in_domain_A(Params{0.05, 0.9, 1.0}));
}

TEST_CASE("cubic solver against known factorizations") {
  // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
  auto r = detail::solve_cubic(-6.0, 11.0, -6.0);
  std::vector<double> reals;
  for (auto& c : r) {
    CHECK(std::abs(c.imag()) < 1e-12);
    reals.push_back(c.real());
  }
  std::sort(reals.begin(), reals.end());
  CHECK(reals[0] == doctest::Approx(1.0));
  CHECK(reals[1] == doctest::Approx(2.0));
  CHECK(reals[2] == doctest::Approx(3.0));

  // (x+2)(x^2+1) = x^3 + 2x^2 + x + 2
  auto r2 = detail::solve_cubic(2.0, 1.0, 2.0);
  int complex_count = 0;
  for (auto& c : r2) {
    if (std::abs(c.imag()) > 1e-12) ++complex_count;
  }
  CHECK(complex_count == 2);
}
