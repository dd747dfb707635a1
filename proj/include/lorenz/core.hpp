#ifndef LORENZ_CORE_HPP
#define LORENZ_CORE_HPP

#include <array>
#include <complex>
#include <vector>

#include "lorenz/errors.hpp"
#include "lorenz/vec.hpp"

namespace lorenz {

using State = Vec3;

// Parameter triple (sigma, rho, beta), all strictly positive.
struct Params {
  double sigma, rho, beta;

  Params(double sigma_, double rho_, double beta_) : sigma(sigma_), rho(rho_), beta(beta_) {
    if (!(sigma > 0.0) || !(rho > 0.0) || !(beta > 0.0))
      throw DegenerateParameters("parameters must be positive");
  }
};

// xdot = sigma(y-x), ydot = rho x - y - xz, zdot = xy - beta z
State vector_field(const Params& p, const State& s);

Mat3 jacobian(const Params& p, const State& s);

// State-independent: -(sigma + 1 + beta).
double divergence(const Params& p);

// The rotation-by-pi symmetry (x,y,z) -> (-x,-y,z).
State symmetry_map(const State& s);

// Conjugation matrix of the symmetry, diag(-1,-1,1).
Mat3 symmetry_matrix();

struct FixedPointSet {
  State origin;
  State p_plus;   // ( x0,  x0, rho-1), x0 = sqrt(beta(rho-1))
  State p_minus;  // (-x0, -x0, rho-1)
};

// Requires rho > 1; otherwise only the origin exists.
FixedPointSet fixed_points(const Params& p);

// x0 = sqrt(beta*(rho-1)), the wing-center coordinate scale.
double wing_scale(const Params& p);

struct EigenPair {
  std::complex<double> value;
  std::array<std::complex<double>, 3> vector;
};

struct EigenData {
  std::vector<EigenPair> pairs;  // sorted by Re asc, ties by Im asc
  bool at_fixed_point = true;    // false when the decomposition was requested off a zero of X
};

// Eigen-decomposition of jacobian(p, s). Closed-form quadratic at the origin,
// cubic characteristic polynomial elsewhere. Residual-checked to 1e-10 relative.
EigenData eigen_at(const Params& p, const State& s);

// rho > 1 and rho > (sigma+1)^2 / (4 sigma), both strict.
bool in_domain_A(const Params& p);

namespace detail {
// Roots of x^3 + a2 x^2 + a1 x + a0 with real coefficients.
std::array<std::complex<double>, 3> solve_cubic(double a2, double a1, double a0);
}  // namespace detail

}  // namespace lorenz

#endif
