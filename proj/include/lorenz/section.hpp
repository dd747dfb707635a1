#ifndef LORENZ_SECTION_HPP
#define LORENZ_SECTION_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lorenz/integrate.hpp"

namespace lorenz {

// Geometry of the two-part cross-section: a band of the hyperbolic
// paraboloid {xy = beta z} between the tangency curves and the plane
// {z = epsilon}, plus the part of that plane lying inside the paraboloid,
// capped by the trapping ellipsoid.

struct SectionSpec {
  double epsilon = 0.0;           // 0 -> 1e-2 * (rho - 1)
  double ellipsoid_radius = 1000.0;
  double smoothing_band = 0.0;    // 0 -> 1e-3 * x0; membership blend at the junction
  double tangency_margin = 1e-6;  // minimum |N.X| for a clean paraboloid crossing
  double boundary_tol = 1e-8;     // half-width of the symbol boundary band
};

struct TangencyCurves {
  std::vector<Vec3> delta_plus;   // passes through p+
  std::vector<Vec3> delta_minus;  // pointwise symmetry image of delta_plus
};

enum class SectionPart { Plane, Paraboloid };
enum class Symbol { A, B, Boundary };

inline char symbol_char(Symbol s) { return s == Symbol::A ? 'A' : (s == Symbol::B ? 'B' : '?'); }

struct SectionPoint {
  State state;
  SectionPart part = SectionPart::Plane;
  Symbol symbol = Symbol::Boundary;
  double crossing_time = 0.0;
  double transversality = 0.0;  // plane: beta*eps - xy (= -zdot); paraboloid: N.X
  bool grazing = false;
  bool outside_ellipsoid = false;
};

// xy - beta z; negative on the inside component (the side containing the
// positive z axis above the origin).
double paraboloid_value(const Params& p, const State& s);

// N.X restricted to the paraboloid: sigma y^2 - sigma xy + rho x^2 - xy - x^3 y / beta.
double tangency_value(const Params& p, double x, double y);

struct PlanarRect {
  double xmin, xmax, ymin, ymax;
  bool contains(double x, double y) const { return x >= xmin && x <= xmax && y >= ymin && y <= ymax; }
};

// Tangency loci on the paraboloid threaded into one polyline per wing;
// ellipsoid_radius > 0 additionally crops to the trapping ellipsoid with the
// final vertex polished onto it.
TangencyCurves tangency_curves(const Params& p, const PlanarRect& bbox, int resolution,
                               double ellipsoid_radius = 0.0);

class Section {
 public:
  Section(const Params& p, const SectionSpec& resolved_spec, TangencyCurves curves);

  const Params& params() const { return params_; }
  const SectionSpec& spec() const { return spec_; }
  const TangencyCurves& curves() const { return curves_; }
  double epsilon() const { return spec_.epsilon; }
  double wing_coordinate() const { return x0_; }

  // rho x^2 + sigma y^2 + sigma (z - 2 rho)^2 - R^2
  double ellipsoid_value(const State& s) const;

  std::optional<SectionPart> part_of(const State& s) const;
  bool contains(const State& s) const { return part_of(s).has_value(); }

  // Signed symbol coordinate: x, unless an eta refinement is installed for
  // the plane part. Positive on the wing-plus side.
  double side_value(const State& s, SectionPart part) const;

  // Refinement hook: a polyline (x,y chart) approximating the trace of the
  // stable manifold of the origin on the plane part.
  void set_eta_polyline(std::vector<std::array<double, 2>> polyline);
  bool has_eta_refinement() const { return !eta_.empty(); }

  SectionPoint classify(const State& s, double t) const;  // throws NotOnSection

 private:
  Params params_;
  SectionSpec spec_;
  TangencyCurves curves_;
  double x0_;
  std::vector<std::array<double, 2>> eta_;
  double eta_orientation_ = 1.0;
};

// Assembles and validates the section. validation_samples = 0 skips the
// build-time transversality/trapping spot checks.
Section build_section(const Params& p, const SectionSpec& spec, int validation_samples = 2000);

SectionPoint classify_crossing(const Section& sec, const State& s, double t);

struct PartReport {
  std::string part;
  int n_samples = 0;
  double min_margin = 0.0;
  std::vector<State> failures;
};

struct TransversalityReport {
  std::vector<PartReport> parts;  // "plane", "paraboloid", "junction"
  bool passed = false;
};

// Samples each part of the section and the junction curve. With strict=true
// any violation throws SectionInvalid (offending states in the message).
TransversalityReport validate_transversality(const Params& p, const Section& sec, int n_samples,
                                             bool strict = true);

struct TrappingReport {
  double radius = 0.0;
  int n_samples = 0;
  double min_inflow = 0.0;  // min over samples of -(grad E).X
  std::vector<State> failures;
  bool passed = false;
};

// Samples the ellipsoid rho x^2 + sigma y^2 + sigma(z-2rho)^2 = radius^2 and
// checks the field points inward everywhere. strict=true throws NotTrapping.
TrappingReport validate_trapping(const Params& p, double radius, int n_samples,
                                 bool strict = true);

// Resumable section-crossing scanner: walks an orbit and reports each
// qualifying crossing of the section, or capture by a fixed point.
class CrossingScanner {
 public:
  struct Options {
    IntegratorConfig integ;
    double capture_factor = 1e-4;  // capture radius = factor * x0, both wings and origin
    double max_time = 1000.0;      // total time budget across all next() calls
    bool reverse_time = false;
  };

  enum class Outcome { Crossed, CapturedPlus, CapturedMinus, CapturedOrigin, TimedOut };

  struct Result {
    Outcome outcome = Outcome::TimedOut;
    SectionPoint point;  // valid when outcome == Crossed
    State state;         // terminal state for non-crossing outcomes
    double t = 0.0;      // absolute time since scanner start
  };

  CrossingScanner(const Section& sec, const State& s0, const Options& opt);

  Result next();

  double elapsed() const { return t_abs_; }
  const State& state() const { return state_; }
  int flagged_outside_ellipsoid() const { return flagged_outside_; }
  // Peak z since the scanner started; lets callers require an excursion.
  double z_max_seen() const { return z_max_; }

 private:
  const Section& sec_;
  Options opt_;
  State state_;
  double t_abs_ = 0.0;
  double z_max_;
  int flagged_outside_ = 0;
  double capture_wing_, capture_origin_;
  State p_plus_, p_minus_;
  bool armed_plus_ = true, armed_minus_ = true, armed_origin_ = true;
};

}  // namespace lorenz

#endif
