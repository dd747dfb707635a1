#include "lorenz/manifolds.hpp"

#include <algorithm>
#include <cmath>

namespace lorenz {

namespace {

double resolved_offset(const Params& p, const ManifoldConfig& cfg) {
  return cfg.offset > 0.0 ? cfg.offset : 1e-7 * wing_scale(p);
}

Vec3 real_eigvec(const EigenPair& ep) {
  Vec3 v{ep.vector[0].real(), ep.vector[1].real(), ep.vector[2].real()};
  double im = 0.0;
  for (const auto& c : ep.vector) im = std::max(im, std::abs(c.imag()));
  if (im > 1e-8) throw EigenStructureUnexpected("expected a real eigenvector");
  return normalized(v);
}

// Unit unstable eigenvector at the origin, oriented toward positive x.
Vec3 origin_unstable_direction(const Params& p) {
  EigenData ed = eigen_at(p, State{0.0, 0.0, 0.0});
  const EigenPair& top = ed.pairs.back();  // sorted by real part: largest last
  if (!(top.value.real() > 0.0) || std::abs(top.value.imag()) > 0.0)
    throw EigenStructureUnexpected("origin has no real unstable eigenvalue");
  Vec3 u = real_eigvec(top);
  if (u.x < 0.0) u = -u;
  return u;
}

}  // namespace

ManifoldBranch separatrix(const Params& p, Wing side, const ManifoldConfig& cfg) {
  if (!(p.rho > 1.0)) throw DegenerateParameters("separatrix requires rho > 1");
  Vec3 u = origin_unstable_direction(p);
  if (side == Wing::Minus) u = -u;
  double offset = resolved_offset(p, cfg);
  State seed = offset * u;

  double x0 = wing_scale(p);
  double capture = cfg.capture_factor * x0;
  auto fp = fixed_points(p);

  AdaptiveStepper st(p, seed, cfg.integ, false);
  std::vector<DenseStep> steps;
  ManifoldBranch out;
  out.base_point = {0.0, 0.0, 0.0};
  out.direction = u;
  out.offset = offset;
  out.time_sense = TimeSense::Forward;
  out.terminal = ManifoldBranch::Terminal::MaxTime;

  bool origin_armed = false;  // the seed itself sits inside the origin ball
  while (st.step(cfg.max_time)) {
    steps.push_back(st.last_step());
    const State& s = st.state();
    if (norm(s - fp.p_plus) < capture) {
      out.terminal = ManifoldBranch::Terminal::CapturedPlus;
      break;
    }
    if (norm(s - fp.p_minus) < capture) {
      out.terminal = ManifoldBranch::Terminal::CapturedMinus;
      break;
    }
    if (!origin_armed && norm(s) > 2.0 * capture) origin_armed = true;
    if (origin_armed && norm(s) < capture) {
      out.terminal = ManifoldBranch::Terminal::CapturedOrigin;
      break;
    }
  }
  out.trajectory = Trajectory(std::move(steps), st.state(), st.t());
  return out;
}

ManifoldBranch stable_branch(const Params& p, Wing wing, int side, const Section& sec,
                             const ManifoldConfig& cfg) {
  if (side != 1 && side != 2) throw ConfigError("stable_branch side must be 1 or 2");
  auto fp = fixed_points(p);
  State base = wing == Wing::Plus ? fp.p_plus : fp.p_minus;

  EigenData ed = eigen_at(p, base);
  // Most negative real eigenvalue; the proposition guarantees one exists.
  const EigenPair* strong = nullptr;
  for (const auto& ep : ed.pairs) {
    if (std::abs(ep.value.imag()) > 1e-10 * std::max(1.0, std::abs(ep.value.real()))) continue;
    if (ep.value.real() >= 0.0) continue;
    if (!strong || ep.value.real() < strong->value.real()) strong = &ep;
  }
  if (!strong) throw EigenStructureUnexpected("no real negative eigenvalue at wing center");
  Vec3 v = real_eigvec(*strong);

  double offset = resolved_offset(p, cfg);
  State seed = base + (side == 1 ? offset : -offset) * v;

  ManifoldBranch out;
  out.base_point = base;
  out.direction = v;
  out.offset = offset;
  out.time_sense = TimeSense::Backward;
  out.terminal = ManifoldBranch::Terminal::MaxTime;

  // Walk backward counting section passages until the ellipsoid exit.
  AdaptiveStepper st(p, seed, cfg.integ, true);
  std::vector<DenseStep> steps;
  double eps = sec.spec().epsilon;
  double band_floor = p.beta * (eps - sec.spec().smoothing_band);
  double gp_prev = seed.z - eps;
  double gq_prev = paraboloid_value(p, seed);
  double arm = 100.0 * cfg.integ.event_tol;
  bool armed_p = std::abs(gp_prev) > arm, armed_q = std::abs(gq_prev) > arm;

  while (st.step(cfg.max_time)) {
    steps.push_back(st.last_step());
    const DenseStep& step = st.last_step();
    const State& s = st.state();

    auto count_roots = [&](double g0, double g1, bool& armed, auto&& fn, auto&& member) {
      if (!armed) {
        if (std::abs(g1) > arm) armed = true;
        return;
      }
      constexpr int kSub = 4;
      double gs[kSub + 1];
      gs[0] = g0;
      gs[kSub] = g1;
      for (int i = 1; i < kSub; ++i)
        gs[i] = fn(p, step.eval(step.t0 + step.h * i / kSub));
      for (int i = 0; i < kSub; ++i) {
        EventHit hit;
        double ta = step.t0 + step.h * i / kSub;
        double tb = step.t0 + step.h * (i + 1) / kSub;
        if (refine_event_in_range(p, step, ta, tb, gs[i], gs[i + 1], fn, EventDirection::Any,
                                  cfg.integ.event_tol, hit)) {
          if (member(hit.state)) ++out.section_crossings;
        }
      }
    };

    double gp_now = s.z - eps;
    double gq_now = paraboloid_value(p, s);
    count_roots(gp_prev, gp_now, armed_p,
                [eps](const Params&, const State& q) { return q.z - eps; },
                [&](const State& q) {
                  return paraboloid_value(p, q) < 0.0 && sec.ellipsoid_value(q) <= 0.0;
                });
    count_roots(gq_prev, gq_now, armed_q,
                [](const Params& pp, const State& q) { return paraboloid_value(pp, q); },
                [&](const State& q) {
                  return q.x * q.y >= band_floor && sec.ellipsoid_value(q) <= 0.0 &&
                         tangency_value(p, q.x, q.y) > 0.0;
                });
    gp_prev = gp_now;
    gq_prev = gq_now;

    if (sec.ellipsoid_value(s) > 0.0) {
      out.terminal = ManifoldBranch::Terminal::ExitedEllipsoid;
      out.exits_ellipsoid = true;
      break;
    }
  }
  out.trajectory = Trajectory(std::move(steps), st.state(), st.t());
  return out;
}

SymbolSequence kneading_sequence(const Params& p, const Section& sec, int n,
                                 const ManifoldConfig& cfg) {
  if (!in_domain_A(p)) throw SectionInvalid("kneading requires parameters in domain A");
  if (n < 1) throw ConfigError("kneading length must be positive");

  Vec3 u = origin_unstable_direction(p);
  State seed = resolved_offset(p, cfg) * u;

  CrossingScanner::Options opt;
  opt.integ = cfg.integ;
  opt.capture_factor = cfg.capture_factor;
  opt.max_time = cfg.max_time;
  CrossingScanner scan(sec, seed, opt);

  SymbolSequence seq;
  seq.terminal = "max_symbols";
  while (static_cast<int>(seq.symbols.size()) < n) {
    auto res = scan.next();
    switch (res.outcome) {
      case CrossingScanner::Outcome::Crossed:
        if (res.point.symbol == Symbol::Boundary) {
          seq.terminal = "boundary";
          seq.undecided = true;
          return seq;
        }
        seq.symbols.push_back(symbol_char(res.point.symbol));
        seq.times.push_back(res.t);
        break;
      case CrossingScanner::Outcome::CapturedPlus:
        seq.terminal = "p+";
        return seq;
      case CrossingScanner::Outcome::CapturedMinus:
        seq.terminal = "p-";
        return seq;
      case CrossingScanner::Outcome::CapturedOrigin:
        seq.terminal = "origin";
        return seq;
      case CrossingScanner::Outcome::TimedOut:
        seq.terminal = "max_time";
        return seq;
    }
  }
  return seq;
}

namespace {

// Accumulated angle of the planar projection around (cx, cy), in radians.
// Subdivides until each increment is below pi/2 so fast spirals never alias.
class AngleAccumulator {
 public:
  AngleAccumulator(double cx, double cy) : cx_(cx), cy_(cy) {}

  void add(const Trajectory& traj, double t0, double t1, int depth = 0) {
    State a = traj.eval(t0), b = traj.eval(t1);
    double ra = std::hypot(a.x - cx_, a.y - cy_);
    double rb = std::hypot(b.x - cx_, b.y - cy_);
    if (ra < 1e-6 || rb < 1e-6)
      throw TooCloseToAxis("trajectory within 1e-6 of a winding axis");
    double chord = std::hypot(b.x - a.x, b.y - a.y);
    double d = wrapped_increment(a, b);
    // Accept only short, slow-turning sub-arcs; the chord bound keeps a
    // fast spiral from aliasing a full extra turn into a small wrap.
    if (std::abs(d) <= M_PI / 2.0 && chord <= 0.5 * std::min(ra, rb) && depth >= 1) {
      total_ += d;
      return;
    }
    if (depth > 48)
      throw TooCloseToAxis("winding step failed to resolve; trajectory skims an axis");
    double tm = 0.5 * (t0 + t1);
    add(traj, t0, tm, depth + 1);
    add(traj, tm, t1, depth + 1);
  }

  void add_chord(const State& a, const State& b) {
    double ra = std::hypot(a.x - cx_, a.y - cy_);
    double rb = std::hypot(b.x - cx_, b.y - cy_);
    if (ra < 1e-6 || rb < 1e-6)
      throw TooCloseToAxis("curve within 1e-6 of a winding axis");
    total_ += wrapped_increment(a, b);
  }

  // Positive in the flow's own sense of rotation around the wings, which is
  // clockwise in the x-y projection; Chen's rotation counts are positive in
  // this convention.
  double turns() const { return -total_ / (2.0 * M_PI); }

 private:
  double wrapped_increment(const State& a, const State& b) const {
    double wa = std::atan2(a.y - cy_, a.x - cx_);
    double wb = std::atan2(b.y - cy_, b.x - cx_);
    double d = wb - wa;
    while (d > M_PI) d -= 2.0 * M_PI;
    while (d < -M_PI) d += 2.0 * M_PI;
    return d;
  }

  double cx_, cy_;
  double total_ = 0.0;
};

WindingCount accumulate(const Trajectory& traj, const Params& p) {
  double x0 = wing_scale(p);
  AngleAccumulator plus(x0, x0), minus(-x0, -x0);
  for (const auto& step : traj.steps()) {
    double t0 = step.t0, t1 = step.t0 + step.h;
    plus.add(traj, t0, t1);
    minus.add(traj, t0, t1);
  }
  WindingCount w;
  w.raw_plus = plus.turns();
  w.raw_minus = minus.turns();
  w.n_plus = static_cast<int>(std::lround(w.raw_plus));
  w.n_minus = static_cast<int>(std::lround(w.raw_minus));
  return w;
}

}  // namespace

WindingCount winding_numbers_raw(const Trajectory& traj, const Params& p) {
  return accumulate(traj, p);
}

namespace {

WindingCount check_integrality(WindingCount w) {
  if (std::abs(w.raw_plus - w.n_plus) > 0.05 || std::abs(w.raw_minus - w.n_minus) > 0.05)
    throw WindingAmbiguous("accumulated turns not within 0.05 of an integer: plus=" +
                           std::to_string(w.raw_plus) + " minus=" + std::to_string(w.raw_minus));
  return w;
}

}  // namespace

WindingCount winding_numbers(const Trajectory& traj, const Params& p) {
  return check_integrality(accumulate(traj, p));
}

WindingCount winding_numbers(const std::vector<Vec3>& curve, const Params& p) {
  if (curve.size() < 2) throw ConfigError("winding needs at least two curve points");
  double x0 = wing_scale(p);
  AngleAccumulator plus(x0, x0), minus(-x0, -x0);
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    plus.add_chord(curve[i], curve[i + 1]);
    minus.add_chord(curve[i], curve[i + 1]);
  }
  WindingCount w;
  w.raw_plus = plus.turns();
  w.raw_minus = minus.turns();
  w.n_plus = static_cast<int>(std::lround(w.raw_plus));
  w.n_minus = static_cast<int>(std::lround(w.raw_minus));
  return check_integrality(w);
}

}  // namespace lorenz
