#include "lorenz/section.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>

namespace lorenz {

namespace {
constexpr double kOnSurfaceTol = 1e-9;
constexpr std::uint64_t kSamplerSeed = 0x105e4f2aULL;
}  // namespace

double paraboloid_value(const Params& p, const State& s) { return s.x * s.y - p.beta * s.z; }

double tangency_value(const Params& p, double x, double y) {
  return p.sigma * y * y - p.sigma * x * y + p.rho * x * x - x * y - x * x * x * y / p.beta;
}

TangencyCurves tangency_curves(const Params& p, const PlanarRect& bbox, int resolution,
                               double ellipsoid_radius) {
  if (!in_domain_A(p)) throw SectionInvalid("tangency curves require parameters in domain A");
  if (resolution < 8) throw ConfigError("tangency curve resolution too small");
  double x0 = wing_scale(p);
  if (!bbox.contains(x0, x0) && !bbox.contains(-x0, -x0))
    throw EmptyCurves("bounding box excludes both wing centers");

  double r2 = ellipsoid_radius * ellipsoid_radius;
  auto outside = [&](double x, double y) {
    if (!bbox.contains(x, y)) return true;
    if (ellipsoid_radius > 0.0) {
      double z = x * y / p.beta;
      double e = p.rho * x * x + p.sigma * y * y + p.sigma * (z - 2.0 * p.rho) * (z - 2.0 * p.rho);
      if (e > r2) return true;
    }
    return false;
  };

  // N.X = 0 is quadratic in y: sigma y^2 - x(sigma+1+x^2/beta) y + rho x^2 = 0.
  auto root = [&](double x, int sign) {
    double b = x * (p.sigma + 1.0 + x * x / p.beta);
    double disc = b * b - 4.0 * p.sigma * p.rho * x * x;
    disc = std::max(disc, 0.0);
    return (b + sign * std::sqrt(disc)) / (2.0 * p.sigma);
  };

  // Turning point: discriminant zero.
  double x_turn = std::sqrt(p.beta * (std::sqrt(4.0 * p.sigma * p.rho) - (p.sigma + 1.0)));
  double x_cap = std::max({std::abs(bbox.xmax), std::abs(bbox.xmin),
                           ellipsoid_radius > 0.0 ? ellipsoid_radius / std::sqrt(p.rho) : 0.0});

  auto march = [&](int sign) {
    std::vector<Vec3> pts;
    double dx = (x_cap - x_turn) / resolution;
    if (dx <= 0.0) dx = x_turn / resolution;
    double x_prev = x_turn;
    for (int k = 0;; ++k) {
      double x = x_turn + k * dx;
      double y = root(x, sign);
      if (outside(x, y) || k > 4 * resolution) {
        // polish the endpoint onto the binding constraint
        double lo = x_prev, hi = x;
        for (int it = 0; it < 80; ++it) {
          double mid = 0.5 * (lo + hi);
          if (outside(mid, root(mid, sign)))
            hi = mid;
          else
            lo = mid;
        }
        double xe = lo, ye = root(lo, sign);
        pts.push_back({xe, ye, xe * ye / p.beta});
        break;
      }
      pts.push_back({x, y, x * y / p.beta});
      x_prev = x;
    }
    return pts;
  };

  std::vector<Vec3> lower = march(-1);
  std::vector<Vec3> upper = march(+1);

  TangencyCurves out;
  out.delta_plus.reserve(lower.size() + upper.size());
  for (auto it = lower.rbegin(); it != lower.rend(); ++it) out.delta_plus.push_back(*it);
  for (std::size_t i = 1; i < upper.size(); ++i) out.delta_plus.push_back(upper[i]);
  out.delta_minus.reserve(out.delta_plus.size());
  for (const auto& v : out.delta_plus) out.delta_minus.push_back(symmetry_map(v));
  return out;
}

Section::Section(const Params& p, const SectionSpec& resolved_spec, TangencyCurves curves)
    : params_(p), spec_(resolved_spec), curves_(std::move(curves)), x0_(wing_scale(p)) {}

double Section::ellipsoid_value(const State& s) const {
  double r = spec_.ellipsoid_radius;
  double dz = s.z - 2.0 * params_.rho;
  return params_.rho * s.x * s.x + params_.sigma * s.y * s.y + params_.sigma * dz * dz - r * r;
}

std::optional<SectionPart> Section::part_of(const State& s) const {
  if (!finite(s)) return std::nullopt;
  if (ellipsoid_value(s) > 0.0) return std::nullopt;
  double eps = spec_.epsilon;
  double pv = paraboloid_value(params_, s);
  if (std::abs(s.z - eps) <= kOnSurfaceTol && pv < 0.0) return SectionPart::Plane;
  if (std::abs(pv) <= kOnSurfaceTol && s.x * s.y >= params_.beta * (eps - spec_.smoothing_band) &&
      tangency_value(params_, s.x, s.y) > 0.0)
    return SectionPart::Paraboloid;
  return std::nullopt;
}

double Section::side_value(const State& s, SectionPart part) const {
  if (part == SectionPart::Plane && !eta_.empty()) {
    // signed side of the eta polyline in the (x,y) chart, positive toward p+
    double best_d2 = std::numeric_limits<double>::max();
    double side = 0.0;
    for (std::size_t i = 0; i + 1 < eta_.size(); ++i) {
      double ax = eta_[i][0], ay = eta_[i][1];
      double bx = eta_[i + 1][0], by = eta_[i + 1][1];
      double ex = bx - ax, ey = by - ay;
      double len2 = ex * ex + ey * ey;
      double t = len2 > 0.0 ? std::clamp(((s.x - ax) * ex + (s.y - ay) * ey) / len2, 0.0, 1.0) : 0.0;
      double px = ax + t * ex, py = ay + t * ey;
      double d2 = (s.x - px) * (s.x - px) + (s.y - py) * (s.y - py);
      if (d2 < best_d2) {
        best_d2 = d2;
        double cr = ex * (s.y - ay) - ey * (s.x - ax);
        side = (cr >= 0.0 ? 1.0 : -1.0) * std::sqrt(d2);
      }
    }
    return eta_orientation_ * side;
  }
  return s.x;
}

void Section::set_eta_polyline(std::vector<std::array<double, 2>> polyline) {
  if (polyline.size() < 2) throw ConfigError("eta polyline needs at least two vertices");
  eta_ = std::move(polyline);
  // Orient so the wing-plus side is positive.
  eta_orientation_ = 1.0;
  State probe{x0_, x0_, spec_.epsilon};
  if (side_value(probe, SectionPart::Plane) < 0.0) eta_orientation_ = -1.0;
}

SectionPoint Section::classify(const State& s, double t) const {
  auto part = part_of(s);
  if (!part) throw NotOnSection("state does not satisfy section membership");
  SectionPoint pt;
  pt.state = s;
  pt.part = *part;
  pt.crossing_time = t;
  pt.outside_ellipsoid = ellipsoid_value(s) > 0.0;
  if (*part == SectionPart::Plane)
    pt.transversality = params_.beta * spec_.epsilon - s.x * s.y;  // = -zdot > 0
  else
    pt.transversality = tangency_value(params_, s.x, s.y);
  pt.grazing = pt.transversality < std::max(spec_.tangency_margin, kGrazingDerivative);
  double v = side_value(s, *part);
  pt.symbol = v > spec_.boundary_tol ? Symbol::A : (v < -spec_.boundary_tol ? Symbol::B : Symbol::Boundary);
  return pt;
}

SectionPoint classify_crossing(const Section& sec, const State& s, double t) {
  return sec.classify(s, t);
}

Section build_section(const Params& p, const SectionSpec& spec, int validation_samples) {
  if (!in_domain_A(p)) throw SectionInvalid("parameters outside domain A");
  SectionSpec r = spec;
  if (r.epsilon == 0.0) r.epsilon = 1e-2 * (p.rho - 1.0);
  if (!(r.epsilon > 0.0) || !(r.epsilon < p.rho - 1.0))
    throw SectionInvalid("epsilon must lie in (0, rho-1)");
  if (!(r.ellipsoid_radius > 0.0)) throw SectionInvalid("ellipsoid radius must be positive");
  double x0 = wing_scale(p);
  if (r.smoothing_band == 0.0) r.smoothing_band = 1e-3 * x0;
  if (!(r.tangency_margin > 0.0) || !(r.boundary_tol > 0.0))
    throw SectionInvalid("margins must be positive");

  double xcap = r.ellipsoid_radius / std::sqrt(p.rho);
  double ycap = r.ellipsoid_radius / std::sqrt(p.sigma);
  PlanarRect bbox{-xcap, xcap, -ycap, ycap};
  TangencyCurves curves = tangency_curves(p, bbox, 400, r.ellipsoid_radius);

  Section sec(p, r, std::move(curves));
  if (validation_samples > 0) {
    validate_transversality(p, sec, validation_samples, true);
    auto trap = validate_trapping(p, r.ellipsoid_radius, std::max(validation_samples / 2, 256), false);
    if (!trap.passed) throw SectionInvalid("trapping ellipsoid is not inward-transverse");
  }
  return sec;
}

namespace {

std::string offending(const std::vector<State>& fails) {
  std::ostringstream os;
  os << fails.size() << " offending state(s); first at (";
  if (!fails.empty()) os << fails[0].x << ", " << fails[0].y << ", " << fails[0].z;
  os << ")";
  return os.str();
}

}  // namespace

TransversalityReport validate_transversality(const Params& p, const Section& sec, int n_samples,
                                             bool strict) {
  if (n_samples < 16) throw ConfigError("too few transversality samples");
  const SectionSpec& sp = sec.spec();
  double eps = sp.epsilon;
  double r2 = sp.ellipsoid_radius * sp.ellipsoid_radius;
  double zslab = p.sigma * (eps - 2.0 * p.rho) * (eps - 2.0 * p.rho);
  double xcap = std::sqrt(std::max(r2 - zslab, 0.0) / p.rho);
  double ycap = std::sqrt(std::max(r2 - zslab, 0.0) / p.sigma);
  if (xcap <= 0.0 || ycap <= 0.0)
    throw SectionInvalid("ellipsoid does not reach the plane z = epsilon");

  std::mt19937_64 rng(kSamplerSeed);
  std::uniform_real_distribution<double> ux(-xcap, xcap), uy(-ycap, ycap);

  TransversalityReport rep;

  // Plane part: zdot = xy - beta*eps must be negative; margin is -zdot.
  {
    PartReport pr;
    pr.part = "plane";
    pr.min_margin = std::numeric_limits<double>::max();
    int accepted = 0;
    while (accepted < n_samples) {
      double x = ux(rng), y = uy(rng);
      State s{x, y, eps};
      if (!(x * y < p.beta * eps) || sec.ellipsoid_value(s) > 0.0) continue;
      ++accepted;
      double margin = p.beta * eps - x * y;
      pr.min_margin = std::min(pr.min_margin, margin);
      if (!(margin > 0.0) || !std::isfinite(margin)) pr.failures.push_back(s);
    }
    pr.n_samples = accepted;
    rep.parts.push_back(std::move(pr));
  }

  // Paraboloid band: N.X >= tangency_margin on members.
  {
    PartReport pr;
    pr.part = "paraboloid";
    pr.min_margin = std::numeric_limits<double>::max();
    int accepted = 0;
    long long attempts = 0;
    while (accepted < n_samples) {
      if (++attempts > 4000LL * n_samples)
        throw SectionInvalid("paraboloid band sampler starved; section badly shaped");
      double x = ux(rng), y = uy(rng);
      if (x * y < p.beta * eps) continue;
      State s{x, y, x * y / p.beta};
      if (sec.ellipsoid_value(s) > 0.0) continue;
      double nx = tangency_value(p, x, y);
      if (!(nx > 0.0)) continue;  // beyond the tangency curves: not part of the band
      ++accepted;
      pr.min_margin = std::min(pr.min_margin, nx);
      if (!(nx >= sp.tangency_margin) || !std::isfinite(nx)) pr.failures.push_back(s);
    }
    pr.n_samples = accepted;
    rep.parts.push_back(std::move(pr));
  }

  // Junction curve xy = beta*eps at z = eps: interior of the section, so the
  // margin requirement applies with full force here. This is where an
  // oversized epsilon (plane touching the tangency curves) shows up.
  {
    PartReport pr;
    pr.part = "junction";
    pr.min_margin = std::numeric_limits<double>::max();
    double c = p.beta * eps;
    double xlo = 1.001 * c / ycap;  // hyperbola leaves the ellipsoid slab at both ends
    double xhi = 0.999 * xcap;
    int n = std::max(n_samples / 4, 64);
    for (int i = 0; i < n; ++i) {
      double f = static_cast<double>(i) / (n - 1);
      double x = xlo * std::pow(xhi / xlo, f);  // log-spaced along the branch
      double y = c / x;
      State s{x, y, eps};
      if (sec.ellipsoid_value(s) > 0.0) continue;
      double nx = tangency_value(p, x, y);
      pr.min_margin = std::min(pr.min_margin, nx);
      ++pr.n_samples;
      if (!(nx >= sp.tangency_margin) || !std::isfinite(nx)) {
        pr.failures.push_back(s);
        pr.failures.push_back(symmetry_map(s));  // mirrored branch fails identically
      }
    }
    rep.parts.push_back(std::move(pr));
  }

  rep.passed = true;
  for (const auto& part : rep.parts)
    if (!part.failures.empty()) rep.passed = false;
  if (strict && !rep.passed) {
    std::string msg = "section transversality violated: ";
    for (const auto& part : rep.parts)
      if (!part.failures.empty()) msg += part.part + ": " + offending(part.failures) + "; ";
    throw SectionInvalid(msg);
  }
  return rep;
}

TrappingReport validate_trapping(const Params& p, double radius, int n_samples, bool strict) {
  if (!(radius > 0.0)) throw ConfigError("trapping radius must be positive");
  if (n_samples < 16) throw ConfigError("too few trapping samples");

  TrappingReport rep;
  rep.radius = radius;
  rep.n_samples = n_samples;
  rep.min_inflow = std::numeric_limits<double>::max();

  // Fibonacci sphere, mapped onto the ellipsoid.
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n_samples; ++i) {
    double zu = 1.0 - 2.0 * (i + 0.5) / n_samples;
    double ru = std::sqrt(std::max(1.0 - zu * zu, 0.0));
    double th = golden * i;
    double ux = ru * std::cos(th), uy = ru * std::sin(th);
    State s{radius * ux / std::sqrt(p.rho), radius * uy / std::sqrt(p.sigma),
            2.0 * p.rho + radius * zu / std::sqrt(p.sigma)};
    Vec3 grad{2.0 * p.rho * s.x, 2.0 * p.sigma * s.y, 2.0 * p.sigma * (s.z - 2.0 * p.rho)};
    double inflow = -dot(grad, vector_field(p, s));
    rep.min_inflow = std::min(rep.min_inflow, inflow);
    if (!(inflow > 0.0) || !std::isfinite(inflow)) rep.failures.push_back(s);
  }
  rep.passed = rep.failures.empty();
  if (strict && !rep.passed)
    throw NotTrapping("ellipsoid radius " + std::to_string(radius) +
                      " is not inward-transverse: " + offending(rep.failures));
  return rep;
}

CrossingScanner::CrossingScanner(const Section& sec, const State& s0, const Options& opt)
    : sec_(sec), opt_(opt), state_(s0), z_max_(s0.z) {
  double x0 = sec.wing_coordinate();
  capture_wing_ = opt_.capture_factor * x0;
  capture_origin_ = opt_.capture_factor * x0;
  auto fp = fixed_points(sec.params());
  p_plus_ = fp.p_plus;
  p_minus_ = fp.p_minus;
  // capture balls arm once the orbit is clearly outside them, so a seed
  // planted next to a fixed point (separatrix offsets) is not re-captured
  armed_plus_ = norm(s0 - p_plus_) > 2.0 * capture_wing_;
  armed_minus_ = norm(s0 - p_minus_) > 2.0 * capture_wing_;
  armed_origin_ = norm(s0) > 2.0 * capture_origin_;
}

CrossingScanner::Result CrossingScanner::next() {
  const Params& p = sec_.params();
  double eps = sec_.spec().epsilon;
  double band_floor = p.beta * (eps - sec_.spec().smoothing_band);

  double leg_limit = opt_.max_time - t_abs_;
  if (leg_limit <= 0.0) {
    Result res;
    res.outcome = Outcome::TimedOut;
    res.state = state_;
    res.t = t_abs_;
    return res;
  }

  auto g_plane = [eps](const Params&, const State& s) { return s.z - eps; };
  auto g_par = [](const Params& pp, const State& s) { return paraboloid_value(pp, s); };

  AdaptiveStepper st(p, state_, opt_.integ, opt_.reverse_time);
  double gp_prev = g_plane(p, state_);
  double gq_prev = g_par(p, state_);
  double arm = 100.0 * opt_.integ.event_tol;
  bool armed_p = std::abs(gp_prev) > arm;
  bool armed_q = std::abs(gq_prev) > arm;

  // In reverse time a geometric passage through the section can have either
  // sign; forward scanning uses the oriented crossings of the return map.
  EventDirection dir_p = opt_.reverse_time ? EventDirection::Any : EventDirection::Down;
  EventDirection dir_q = opt_.reverse_time ? EventDirection::Any : EventDirection::Up;

  while (st.step(leg_limit)) {
    const DenseStep& step = st.last_step();
    z_max_ = std::max(z_max_, st.state().z);

    double gp_now = g_plane(p, st.state());
    double gq_now = g_par(p, st.state());

    constexpr int kSub = 4;
    bool found = false;
    EventHit best{};

    auto scan = [&](double g0, double g1, bool& armed, EventDirection dir, auto&& fn,
                    auto&& accept_root) {
      if (!armed) {
        if (std::abs(g1) > arm) armed = true;
        return;
      }
      double gs[kSub + 1];
      gs[0] = g0;
      gs[kSub] = g1;
      for (int i = 1; i < kSub; ++i)
        gs[i] = fn(p, step.eval(step.t0 + step.h * i / kSub));
      for (int i = 0; i < kSub; ++i) {
        double ta = step.t0 + step.h * i / kSub;
        double tb = step.t0 + step.h * (i + 1) / kSub;
        EventHit hit;
        if (refine_event_in_range(p, step, ta, tb, gs[i], gs[i + 1], fn, dir,
                                  opt_.integ.event_tol, hit)) {
          if (found && hit.t >= best.t) continue;
          if (accept_root(hit.state)) {
            best = hit;
            found = true;
          }
        }
      }
    };

    scan(gp_prev, gp_now, armed_p, dir_p, g_plane, [&](const State& s) {
      if (!(paraboloid_value(p, s) < 0.0)) return false;  // outside P at z=eps
      if (sec_.ellipsoid_value(s) > 0.0) {
        ++flagged_outside_;
        return false;
      }
      return true;
    });
    scan(gq_prev, gq_now, armed_q, dir_q, g_par, [&](const State& s) {
      if (!(s.x * s.y >= band_floor)) return false;  // below the plane junction
      if (sec_.ellipsoid_value(s) > 0.0) {
        ++flagged_outside_;
        return false;
      }
      return true;
    });

    if (found) {
      state_ = best.state;
      t_abs_ += best.t;
      Result res;
      res.outcome = Outcome::Crossed;
      res.state = best.state;
      res.t = t_abs_;
      res.point = sec_.classify(best.state, t_abs_);
      return res;
    }

    gp_prev = gp_now;
    gq_prev = gq_now;

    const State& s = st.state();
    if (!armed_plus_ && norm(s - p_plus_) > 2.0 * capture_wing_) armed_plus_ = true;
    if (!armed_minus_ && norm(s - p_minus_) > 2.0 * capture_wing_) armed_minus_ = true;
    if (!armed_origin_ && norm(s) > 2.0 * capture_origin_) armed_origin_ = true;
    Outcome capture = Outcome::TimedOut;
    if (armed_plus_ && norm(s - p_plus_) < capture_wing_)
      capture = Outcome::CapturedPlus;
    else if (armed_minus_ && norm(s - p_minus_) < capture_wing_)
      capture = Outcome::CapturedMinus;
    else if (armed_origin_ && norm(s) < capture_origin_)
      capture = Outcome::CapturedOrigin;
    if (capture != Outcome::TimedOut) {
      t_abs_ += st.t();
      state_ = s;
      Result res;
      res.outcome = capture;
      res.state = s;
      res.t = t_abs_;
      return res;
    }
  }

  t_abs_ += st.t();
  state_ = st.state();
  Result res;
  res.outcome = Outcome::TimedOut;
  res.state = state_;
  res.t = t_abs_;
  return res;
}

}  // namespace lorenz
