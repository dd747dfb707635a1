#include "lorenz/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace lorenz {

namespace {

// Dormand-Prince 5(4) tableau (autonomous field, so the c nodes never appear).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - bhat (4th-order embedded weights), for the error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

constexpr long long kMaxSteps = 200'000'000;

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(event_tol > 0.0))
    throw ConfigError("integrator tolerances must be positive");
  if (!(max_time > 0.0)) throw ConfigError("max_time must be positive");
  if (max_step < 0.0) throw ConfigError("max_step must be non-negative");
}

Vec3 DenseStep::eval(double t) const {
  double th = (t - t0) / h;
  double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Vec3 DenseStep::eval_derivative(double t) const {
  double th = (t - t0) / h;
  double th1 = 1.0 - th;
  Vec3 d = r2 + (1.0 - 2.0 * th) * r3 + th * (2.0 - 3.0 * th) * r4 +
           2.0 * th * th1 * (1.0 - 2.0 * th) * r5;
  return (1.0 / h) * d;
}

Trajectory::Trajectory(std::vector<DenseStep> steps, State last, double t_end)
    : steps_(std::move(steps)), last_(last), t_end_(t_end) {}

State Trajectory::eval(double t) const {
  if (steps_.empty()) return last_;
  if (t <= steps_.front().t0) return steps_.front().r1;
  if (t >= t_end_) return last_;
  // binary search for the step containing t
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (steps_[mid].t0 <= t)
      lo = mid;
    else
      hi = mid - 1;
  }
  return steps_[lo].eval(t);
}

Vec3 Trajectory::derivative(double t) const {
  if (steps_.empty()) return {};
  t = std::clamp(t, t_begin(), t_end_);
  std::size_t lo = 0, hi = steps_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (steps_[mid].t0 <= t)
      lo = mid;
    else
      hi = mid - 1;
  }
  return steps_[lo].eval_derivative(t);
}

std::vector<std::pair<double, State>> Trajectory::nodes() const {
  std::vector<std::pair<double, State>> out;
  out.reserve(steps_.size() + 1);
  for (const auto& s : steps_) out.emplace_back(s.t0, s.r1);
  out.emplace_back(t_end_, last_);
  return out;
}

AdaptiveStepper::AdaptiveStepper(const Params& p, const State& s0, const IntegratorConfig& cfg,
                                 bool reverse_time)
    : p_(p), cfg_(cfg), reverse_(reverse_time), t_(0.0), y_(s0) {
  cfg_.validate();
  if (!finite(s0)) throw Error("initial state not finite");
  k1_ = field(y_);
  // initial step heuristic; the controller adapts from here
  double sc = cfg_.abs_tol + cfg_.rel_tol * norm_inf(y_);
  double d0 = norm(y_), d1n = norm(k1_);
  h_ = (d1n > 1e-10) ? 0.01 * std::max(d0, sc) / d1n : 1e-6;
  h_ = std::min(h_, 1e-2);
  if (cfg_.max_step > 0.0) h_ = std::min(h_, cfg_.max_step);
}

Vec3 AdaptiveStepper::field(const State& s) const {
  Vec3 f = vector_field(p_, s);
  return reverse_ ? -f : f;
}

bool AdaptiveStepper::step(double t_limit) {
  if (t_ >= t_limit) return false;

  for (;;) {
    if (++accepted_ > kMaxSteps) throw StiffnessFailure("step budget exhausted");
    double h = std::min(h_, t_limit - t_);
    if (cfg_.max_step > 0.0) h = std::min(h, cfg_.max_step);
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_)))
      throw StiffnessFailure("step size underflow");

    Vec3 k1 = k1_;
    Vec3 k2 = field(y_ + h * (a21 * k1));
    Vec3 k3 = field(y_ + h * (a31 * k1 + a32 * k2));
    Vec3 k4 = field(y_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Vec3 k5 = field(y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vec3 k6 = field(y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vec3 dy = h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    State y1 = y_ + dy;
    Vec3 k7 = field(y1);  // FSAL

    Vec3 err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int i = 0; i < 3; ++i) {
      double sc = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y1[i]));
      double q = err[i] / sc;
      en += q * q;
    }
    en = std::sqrt(en / 3.0);

    double fac = 0.9 * std::pow(std::max(en, 1e-300), -0.2);
    if (en <= 1.0) {
      last_.t0 = t_;
      last_.h = h;
      last_.r1 = y_;
      last_.r2 = dy;
      last_.r3 = h * k1 - dy;
      last_.r4 = dy - h * k7 - last_.r3;
      last_.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t_ += h;
      y_ = y1;
      k1_ = k7;
      h_ = h * std::clamp(fac, 0.2, 5.0);
      return true;
    }
    h_ = h * std::clamp(fac, 0.2, 1.0);
  }
}

Trajectory integrate(const Params& p, const State& s0, std::pair<double, double> t_span,
                     const IntegratorConfig& cfg) {
  auto [ta, tb] = t_span;
  if (!(tb > ta)) throw ConfigError("t_span must be increasing");
  AdaptiveStepper st(p, s0, cfg, false);
  std::vector<DenseStep> steps;
  double span = tb - ta;
  while (st.step(span)) {
    DenseStep s = st.last_step();
    s.t0 += ta;
    steps.push_back(s);
  }
  return Trajectory(std::move(steps), st.state(), tb);
}

State flow_map(const Params& p, const State& s0, double t, const IntegratorConfig& cfg) {
  if (t == 0.0) return s0;
  AdaptiveStepper st(p, s0, cfg, t < 0.0);
  double span = std::abs(t);
  while (st.step(span)) {
  }
  return st.state();
}

bool refine_event_in_range(const Params& p, const DenseStep& step, double ta, double tb,
                           double ga, double gb,
                           const std::function<double(const Params&, const State&)>& f,
                           EventDirection dir, double event_tol, EventHit& hit) {
  bool up = ga < 0.0 && gb >= 0.0;
  bool down = ga > 0.0 && gb <= 0.0;
  if (!up && !down) return false;
  if (dir == EventDirection::Up && !up) return false;
  if (dir == EventDirection::Down && !down) return false;

  auto geval = [&](double t) { return f(p, step.eval(t)); };

  // bisection to shrink the bracket, then safeguarded secant; every other
  // iteration bisects so the bracket always shrinks geometrically
  for (int it = 0; it < 200; ++it) {
    double tm;
    if (it < 8 || (it % 2 == 0) || std::abs(gb - ga) < 1e-300) {
      tm = 0.5 * (ta + tb);
    } else {
      tm = tb - gb * (tb - ta) / (gb - ga);
      double lo = ta + 0.01 * (tb - ta), hi = tb - 0.01 * (tb - ta);
      tm = std::clamp(tm, std::min(lo, hi), std::max(lo, hi));
    }
    double gm = geval(tm);
    if (std::abs(gm) <= event_tol || (tb - ta) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                                      std::max(1.0, std::abs(tm))) {
      hit.t = tm;
      hit.state = step.eval(tm);
      hit.value = gm;
      // event time-derivative via a centered difference along the interpolant
      double dt = std::max(1e-6 * step.h, 1e-14);
      double tp = std::min(tm + dt, step.t0 + step.h), tq = std::max(tm - dt, step.t0);
      hit.derivative = (geval(tp) - geval(tq)) / (tp - tq);
      hit.grazing = std::abs(hit.derivative) < kGrazingDerivative;
      return true;
    }
    bool sign_a = ga > 0.0;
    if ((gm > 0.0) == sign_a) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
      gb = gm;
    }
  }
  throw Error("event refinement failed to converge");
}

EventHit advance_to_event(const Params& p, const State& s0, const EventSpec& ev,
                          const IntegratorConfig& cfg,
                          const std::function<bool(double, const State&)>& accept) {
  if (!ev.value) throw ConfigError("event function not set");
  AdaptiveStepper st(p, s0, cfg, false);
  double g_prev = ev.value(p, s0);
  if (!std::isfinite(g_prev)) throw Error("event function not finite at start");

  // Minimum-progress guard: when starting on (or numerically at) the event
  // set, detection stays disarmed until the value has moved clearly away
  // from zero, so a just-found event is never reported twice.
  double arm = 100.0 * cfg.event_tol;
  bool armed = std::abs(g_prev) > arm;

  while (st.step(cfg.max_time)) {
    const DenseStep& step = st.last_step();
    double g_now = ev.value(p, st.state());

    if (!armed) {
      if (std::abs(g_now) > arm) armed = true;
      g_prev = g_now;
      continue;
    }

    // Sub-sample the step so closely spaced roots are bracketed separately
    // (the direction filter must see each crossing, not their net effect).
    constexpr int kSub = 4;
    double gs[kSub + 1];
    gs[0] = g_prev;
    gs[kSub] = g_now;
    for (int i = 1; i < kSub; ++i)
      gs[i] = ev.value(p, step.eval(step.t0 + step.h * i / kSub));
    for (int i = 0; i < kSub; ++i) {
      double ta = step.t0 + step.h * i / kSub;
      double tb = step.t0 + step.h * (i + 1) / kSub;
      EventHit hit;
      if (refine_event_in_range(p, step, ta, tb, gs[i], gs[i + 1], ev.value, ev.direction,
                                cfg.event_tol, hit)) {
        if (!accept || accept(hit.t, hit.state)) return hit;
      }
    }
    g_prev = g_now;
  }
  throw NoEvent("no event before max_time");
}

void write_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,x,y,z\n";
  char buf[128];
  auto row = [&](double t, const State& s) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", t, s.x, s.y, s.z);
    os << buf;
  };
  for (const auto& [t, s] : traj.nodes()) row(t, s);
}

}  // namespace lorenz
