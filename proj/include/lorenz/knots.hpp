#ifndef LORENZ_KNOTS_HPP
#define LORENZ_KNOTS_HPP

#include <string>
#include <vector>

#include "lorenz/section.hpp"

namespace lorenz {

// Finite symbolic word over {A, B}.
struct Word {
  std::string letters;
  bool primitive = false;

  explicit Word(std::string w);
};

bool is_primitive(const std::string& w);

struct PeriodicOrbit {
  double sigma = 0.0, rho = 0.0, beta = 0.0;
  std::string word;
  std::vector<SectionPoint> section_points;  // one per symbol, in orbit order
  std::vector<double> return_times;
  double period = 0.0;
  double residual = 0.0;  // max positional mismatch of the cycled return map
};

struct OrbitSearchConfig {
  double seed_time = 500.0;     // length of the close-return seeding run
  double transient = 20.0;      // settle time before recording crossings
  int max_candidates = 8;
  int max_newton = 50;
  double tol = 1e-9;
  double fd_step = 1e-7;
  IntegratorConfig integ;
};

// Close-return seeding plus damped quasi-Newton on the multiple-shooting
// system of all |w| section points at once.
PeriodicOrbit find_periodic_orbit(const Params& p, const Section& sec, const Word& w,
                                  const OrbitSearchConfig& cfg);

struct TemplateConfig {
  double core_scale = 2.0;       // plane-part grid drawn from |x|,|y| <= scale * x0
  double near_eta_fraction = 0.3;  // portion of samples biased toward the symbol boundary
  IntegratorConfig integ;
  double max_time = 50.0;        // per-sample return horizon
  unsigned seed = 0x7e3a11c5u;
};

struct TemplateReport {
  int grid_per_side = 0;
  int returned_a = 0, returned_b = 0;
  int grazing = 0;
  double separation = 0.0;  // min chart distance between the two image clouds
  bool disjoint = false;
  bool a_has_both = false, b_has_both = false;
  double a_dist_pplus = 0.0, a_dist_pminus = 0.0;  // closest approach of the A image
  std::vector<std::array<double, 3>> image_a, image_b;  // (x, y, symbol: +1/-1/0)
  bool passed = false;
};

// Maps a grid from each component of the section one return forward and
// checks the image clouds are disjoint with both symbols present in each.
TemplateReport template_check(const Params& p, const Section& sec, int grid_n,
                              const TemplateConfig& cfg);

struct LorenzBraid {
  std::vector<int> permutation;  // strand i of the braid ends at permutation[i]
  int crossing_count = 0;        // inversion count = positive crossings
  std::vector<int> generators;   // positive generator indices, 1-based
  std::string generator_text() const;  // e.g. "s2 s1"
};

// Template combinatorics of a primitive word: lexicographically ordered
// cyclic shifts, the left-shift permutation, and its positive braid.
LorenzBraid lorenz_braid(const Word& w);

using Polyline = std::vector<Vec3>;

struct LinkingResult {
  int linking = 0;
  double raw = 0.0;
};

// Gauss linking number of two disjoint closed polylines (vertices are not
// repeated; closure segments are implicit).
LinkingResult gauss_linking(const Polyline& c1, const Polyline& c2);

// The vertical axis through a wing center closed by a distant half circle;
// oriented so the linking with an orbit matches its winding count.
Polyline axis_closure(const Params& p, Wing wing, double half_height, int n);

// Densely sampled closed curve of a refined periodic orbit.
Polyline orbit_polyline(const Params& p, const PeriodicOrbit& orbit, int points_per_return,
                        const IntegratorConfig& cfg);

}  // namespace lorenz

#endif
