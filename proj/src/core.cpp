#include "lorenz/core.hpp"

#include <algorithm>
#include <cmath>

namespace lorenz {

State vector_field(const Params& p, const State& s) {
  return {p.sigma * (s.y - s.x),
          p.rho * s.x - s.y - s.x * s.z,
          s.x * s.y - p.beta * s.z};
}

Mat3 jacobian(const Params& p, const State& s) {
  Mat3 j;
  j[0] = {-p.sigma, p.sigma, 0.0};
  j[1] = {p.rho - s.z, -1.0, -s.x};
  j[2] = {s.y, s.x, -p.beta};
  return j;
}

double divergence(const Params& p) { return -(p.sigma + 1.0 + p.beta); }

State symmetry_map(const State& s) { return {-s.x, -s.y, s.z}; }

Mat3 symmetry_matrix() {
  Mat3 pi;
  pi[0] = {-1.0, 0.0, 0.0};
  pi[1] = {0.0, -1.0, 0.0};
  pi[2] = {0.0, 0.0, 1.0};
  return pi;
}

double wing_scale(const Params& p) {
  if (p.rho <= 1.0) throw DegenerateParameters("rho <= 1: wing centers do not exist");
  return std::sqrt(p.beta * (p.rho - 1.0));
}

FixedPointSet fixed_points(const Params& p) {
  double x0 = wing_scale(p);
  return {State{0.0, 0.0, 0.0}, State{x0, x0, p.rho - 1.0}, State{-x0, -x0, p.rho - 1.0}};
}

bool in_domain_A(const Params& p) {
  double threshold = (p.sigma + 1.0) * (p.sigma + 1.0) / (4.0 * p.sigma);
  return p.rho > 1.0 && p.rho > threshold;
}

namespace detail {

std::array<std::complex<double>, 3> solve_cubic(double a2, double a1, double a0) {
  // Depressed form t^3 + pt + q via x = t - a2/3.
  double shift = a2 / 3.0;
  double pc = a1 - a2 * a2 / 3.0;
  double qc = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
  double disc = qc * qc / 4.0 + pc * pc * pc / 27.0;

  std::array<std::complex<double>, 3> roots;
  if (disc <= 0.0) {
    // three real roots, trigonometric form
    double r = std::sqrt(-pc * pc * pc / 27.0);
    double arg = std::clamp(-qc / (2.0 * r), -1.0, 1.0);
    double phi = std::acos(arg);
    double m = 2.0 * std::sqrt(-pc / 3.0);
    for (int k = 0; k < 3; ++k)
      roots[k] = m * std::cos((phi + 2.0 * M_PI * k) / 3.0) - shift;
  } else {
    double sq = std::sqrt(disc);
    double u = std::cbrt(-qc / 2.0 + sq);
    double v = std::cbrt(-qc / 2.0 - sq);
    double real_root = u + v;
    std::complex<double> omega(-0.5, std::sqrt(3.0) / 2.0);
    roots[0] = real_root - shift;
    roots[1] = u * omega + v * std::conj(omega) - shift;
    roots[2] = u * std::conj(omega) + v * omega - shift;
  }

  // One Newton polish per root on the monic cubic.
  for (auto& x : roots) {
    for (int it = 0; it < 2; ++it) {
      std::complex<double> f = ((x + a2) * x + a1) * x + a0;
      std::complex<double> df = (3.0 * x + 2.0 * a2) * x + a1;
      if (std::abs(df) == 0.0) break;
      x -= f / df;
    }
    if (std::abs(x.imag()) < 1e-12 * std::max(1.0, std::abs(x.real()))) x = {x.real(), 0.0};
  }
  return roots;
}

namespace {

using C3 = std::array<std::complex<double>, 3>;

C3 eigenvector_for(const Mat3& j, std::complex<double> lambda) {
  // v spans the null space of (J - lambda I); take the largest cross
  // product of two rows.
  std::array<C3, 3> rows;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rows[r][c] = j[r][c];
    rows[r][r] -= lambda;
  }
  auto crossc = [](const C3& a, const C3& b) {
    return C3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  };
  auto norm2 = [](const C3& v) {
    return std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]);
  };
  C3 best{};
  double best_n = -1.0;
  int pair[3][2] = {{0, 1}, {1, 2}, {0, 2}};
  for (auto& pr : pair) {
    C3 c = crossc(rows[pr[0]], rows[pr[1]]);
    double n = norm2(c);
    if (n > best_n) {
      best_n = n;
      best = c;
    }
  }
  double n = std::sqrt(norm2(best));
  if (n == 0.0) throw EigenFailure("defective eigenvector for eigenvalue");
  for (auto& c : best) c /= n;
  // Deterministic phase: make the largest component real positive.
  int imax = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(best[i]) > std::abs(best[imax])) imax = i;
  std::complex<double> phase = best[imax] / std::abs(best[imax]);
  for (auto& c : best) c /= phase;
  return best;
}

double residual(const Mat3& j, const EigenPair& ep) {
  C3 jv{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) jv[r] += j[r][c] * ep.vector[c];
  double num = 0.0, den = 0.0;
  for (int r = 0; r < 3; ++r) {
    num += std::norm(jv[r] - ep.value * ep.vector[r]);
    den += std::norm(ep.vector[r]);
  }
  double scale = std::max(std::abs(ep.value), 1e-30);
  return std::sqrt(num) / (scale * std::sqrt(den));
}

}  // namespace
}  // namespace detail

EigenData eigen_at(const Params& p, const State& s) {
  Mat3 j = jacobian(p, s);
  std::array<std::complex<double>, 3> values;

  bool at_origin = s.x == 0.0 && s.y == 0.0 && s.z == 0.0;
  if (at_origin) {
    // (x,y) block decouples from z: lam^2 + (sigma+1) lam - sigma(rho-1), plus -beta.
    double half_tr = -(p.sigma + 1.0) / 2.0;
    double disc = half_tr * half_tr + p.sigma * (p.rho - 1.0);
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      values = {half_tr - sq, std::complex<double>(-p.beta, 0.0), half_tr + sq};
    } else {
      double sq = std::sqrt(-disc);
      values = {std::complex<double>(half_tr, -sq), std::complex<double>(half_tr, sq),
                std::complex<double>(-p.beta, 0.0)};
    }
  } else {
    // char(J) = lam^3 - tr lam^2 + m2 lam - det
    double tr = trace(j);
    double m2 = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) + (j[0][0] * j[2][2] - j[0][2] * j[2][0]) +
                (j[1][1] * j[2][2] - j[1][2] * j[2][1]);
    values = detail::solve_cubic(-tr, m2, -det(j));
  }

  EigenData out;
  double vf = norm(vector_field(p, s));
  out.at_fixed_point = vf <= 1e-9 * (1.0 + norm(s));
  for (auto& lam : values) out.pairs.push_back({lam, detail::eigenvector_for(j, lam)});

  std::sort(out.pairs.begin(), out.pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });

  for (const auto& ep : out.pairs)
    if (detail::residual(j, ep) > 1e-10)
      throw EigenFailure("eigenpair residual exceeds 1e-10 relative");
  return out;
}

}  // namespace lorenz
