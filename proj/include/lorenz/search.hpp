#ifndef LORENZ_SEARCH_HPP
#define LORENZ_SEARCH_HPP

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "lorenz/manifolds.hpp"

namespace lorenz {

struct SearchConfig {
  double param_tol = 1e-6;
  double residual_tol = 1e-6;
  int max_iters = 200;
  double match_radius_factor = 1e-2;  // heteroclinic match ball = factor * x0
  double sentinel = 1e3;              // base magnitude outside the smooth basin
  double simplex_scale = 0.05;        // initial Nelder-Mead edge length
  int kneading_prefix = 8;            // symbols reported by path_scan
  SectionSpec section;
  ManifoldConfig manifold;  // carries the integrator tolerances
  double max_orbit_time = 200.0;
};

struct SignatureResult {
  enum class Kind { Value, CapturedPlus, CapturedMinus, TimedOut };
  Kind kind = Kind::TimedOut;
  double x = 0.0;  // plane-part x at the first qualifying return (Kind::Value)
  double t = 0.0;
  int band_hits_before = 0;  // paraboloid crossings before the plane return

  // Side convention for bisection/scan: captured-by-p+ counts as the
  // positive side, captured-by-p- as negative.
  std::optional<int> side() const {
    switch (kind) {
      case Kind::Value:
        return x > 0.0 ? 1 : -1;
      case Kind::CapturedPlus:
        return 1;
      case Kind::CapturedMinus:
        return -1;
      default:
        return std::nullopt;
    }
  }
};

// x coordinate of the gamma+ separatrix at its first plane-part section
// crossing; the sign tells which side of the symbol boundary the first
// return lands on.
SignatureResult first_return_signature(const Params& p, const SearchConfig& cfg);

struct ConnectionResult {
  enum class Kind { Homoclinic, Heteroclinic };
  Kind kind = Kind::Homoclinic;
  int n_index = 0;  // loop count N for homoclinic orbits
  double sigma = 0.0, rho = 0.0, beta = 0.0;
  double residual = 0.0;
  WindingCount winding;
  int hits_before_connection = 0;
  int iterations = 0;
};

// Bisection in rho at fixed (beta, sigma) on the first-return side flip.
ConnectionResult find_homoclinic(double beta, double sigma, std::pair<double, double> rho_bracket,
                                 const SearchConfig& cfg);

struct HeteroclinicResidual {
  enum class Kind { Matched, SectionHit, CapturedPlus, TimedOut };
  Kind kind = Kind::TimedOut;
  std::array<double, 2> offset{0.0, 0.0};  // transverse offset at match-ball entry
  double cost = 0.0;                       // ||offset|| or the sentinel surrogate
  double min_distance = 0.0;               // closest approach to p- before termination
  int section_side = 0;                    // sign of x at the terminating section hit
  int hits_before = 0;                     // section hits before termination
  State entry;
  double t_entry = 0.0;
};

// Distance of gamma+ from the local stable line of p-, measured in the plane
// transverse to the real stable eigenvector, or a signed sentinel when the
// separatrix hits the section first.
HeteroclinicResidual heteroclinic_residual(const Params& p, const SearchConfig& cfg);

// Two-parameter (rho, sigma) root of the heteroclinic residual at fixed beta:
// simplex descent into the smooth basin, then damped finite-difference Newton.
ConnectionResult find_tpoint(double beta, std::pair<double, double> guess_rho_sigma,
                             const SearchConfig& cfg);

using ParamPath = std::function<Params(double)>;

struct PathSample {
  double s = 0.0;
  double sigma = 0.0, rho = 0.0, beta = 0.0;
  std::string kneading;
  SignatureResult signature;
};

struct PathScanResult {
  std::vector<PathSample> samples;
  // consecutive sample pairs whose signature side flips
  std::vector<std::pair<double, double>> signature_flips;
  int kneading_changes = 0;
};

// Samples a parameter path (which must stay in domain A), reporting kneading
// prefixes, signatures, and sign-change subintervals.
PathScanResult path_scan(const ParamPath& path, int n, const SearchConfig& cfg);

}  // namespace lorenz

#endif
