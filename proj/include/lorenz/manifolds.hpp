#ifndef LORENZ_MANIFOLDS_HPP
#define LORENZ_MANIFOLDS_HPP

#include <string>
#include <vector>

#include "lorenz/section.hpp"

namespace lorenz {

enum class TimeSense { Forward, Backward };

struct ManifoldConfig {
  double offset = 0.0;           // seed displacement; 0 -> 1e-7 * x0
  double capture_factor = 1e-4;  // capture radius = factor * x0
  double max_time = 100.0;
  IntegratorConfig integ;
};

struct ManifoldBranch {
  State base_point;
  Vec3 direction;  // unit eigenvector of the Jacobian at base_point
  double offset = 0.0;
  TimeSense time_sense = TimeSense::Forward;
  Trajectory trajectory;

  enum class Terminal { CapturedPlus, CapturedMinus, CapturedOrigin, ExitedEllipsoid, MaxTime };
  Terminal terminal = Terminal::MaxTime;
  bool exits_ellipsoid = false;
  int section_crossings = 0;  // passes through the section set (backward branches)
};

// Unstable manifold of the origin; side selects the half departing toward
// positive (Plus) or negative (Minus) x.
ManifoldBranch separatrix(const Params& p, Wing side, const ManifoldConfig& cfg);

// One side (1 or 2) of the one-dimensional stable manifold of a wing center,
// integrated backward; reports whether it leaves the trapping ellipsoid
// without passing through the section.
ManifoldBranch stable_branch(const Params& p, Wing wing, int side, const Section& sec,
                             const ManifoldConfig& cfg);

struct SymbolSequence {
  std::string symbols;  // over {A, B}
  std::vector<double> times;
  std::string terminal;   // p+ | p- | origin | max_time | max_symbols | boundary
  bool undecided = false; // a Boundary symbol stopped the stream
};

// Symbols of the gamma+ separatrix's successive section crossings.
SymbolSequence kneading_sequence(const Params& p, const Section& sec, int n,
                                 const ManifoldConfig& cfg);

struct WindingCount {
  int n_plus = 0, n_minus = 0;
  double raw_plus = 0.0, raw_minus = 0.0;  // accumulated turns
};

// Accumulated rotation of the trajectory around the vertical axes through
// the wing centers, in whole turns, positive in the flow's own sense of
// rotation (clockwise in the x-y projection). Throws TooCloseToAxis within
// 1e-6 of an axis and WindingAmbiguous when the accumulated angle is not
// within 0.05 turns of an integer.
WindingCount winding_numbers(const Trajectory& traj, const Params& p);

// Raw turn counts without the integrality check (for diagnostics).
WindingCount winding_numbers_raw(const Trajectory& traj, const Params& p);

// Same count for an explicit polyline (chord increments, no subdivision).
WindingCount winding_numbers(const std::vector<Vec3>& curve, const Params& p);

}  // namespace lorenz

#endif
