#ifndef LORENZ_INTEGRATE_HPP
#define LORENZ_INTEGRATE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "lorenz/core.hpp"

namespace lorenz {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = no cap
  double max_time = 1000.0;
  double event_tol = 1e-12;

  void validate() const;
};

// One accepted step of the 5(4) pair with the quartic dense-output
// coefficients, enough to evaluate the solution anywhere in [t0, t0+h].
struct DenseStep {
  double t0 = 0.0, h = 0.0;
  Vec3 r1, r2, r3, r4, r5;

  Vec3 eval(double t) const;
  Vec3 eval_derivative(double t) const;  // d/dt of the interpolant
};

// Immutable dense-output solution over a time span.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<DenseStep> steps, State last, double t_end);

  double t_begin() const { return steps_.empty() ? t_end_ : steps_.front().t0; }
  double t_end() const { return t_end_; }
  std::size_t step_count() const { return steps_.size(); }

  State front() const { return steps_.empty() ? last_ : steps_.front().r1; }
  State back() const { return last_; }

  // Dense evaluation; t clamped to round-off at the span edges.
  State eval(double t) const;
  Vec3 derivative(double t) const;

  // (t, state) at every accepted step boundary.
  std::vector<std::pair<double, State>> nodes() const;

  const std::vector<DenseStep>& steps() const { return steps_; }

 private:
  std::vector<DenseStep> steps_;
  State last_;
  double t_end_ = 0.0;
};

enum class EventDirection { Up, Down, Any };

struct EventSpec {
  std::function<double(const Params&, const State&)> value;
  EventDirection direction = EventDirection::Any;
};

struct EventHit {
  double t = 0.0;
  State state;
  double value = 0.0;       // event function at the root
  double derivative = 0.0;  // d/dt of the event function at the root
  bool grazing = false;     // |derivative| below the grazing threshold
};

// |d(event)/dt| below this at a root flags the hit as grazing.
inline constexpr double kGrazingDerivative = 1e-8;

// Low-level adaptive stepper; integrate()/advance_to_event() are built on it.
// Each step() call advances by one accepted step of the embedded pair.
class AdaptiveStepper {
 public:
  AdaptiveStepper(const Params& p, const State& s0, const IntegratorConfig& cfg,
                  bool reverse_time = false);

  // Advance one accepted step, never past t_limit. Returns false once t == t_limit.
  bool step(double t_limit);

  const DenseStep& last_step() const { return last_; }
  double t() const { return t_; }
  const State& state() const { return y_; }
  const Params& params() const { return p_; }
  bool reversed() const { return reverse_; }

 private:
  Vec3 field(const State& s) const;

  Params p_;
  IntegratorConfig cfg_;
  bool reverse_;
  double t_;
  double h_;
  State y_;
  Vec3 k1_;  // FSAL
  DenseStep last_;
  long long accepted_ = 0;
};

// Flow over an increasing span; local error controlled by (rel_tol, abs_tol).
Trajectory integrate(const Params& p, const State& s0, std::pair<double, double> t_span,
                     const IntegratorConfig& cfg);

// Phi^t(s0); negative t integrates the time-reversed field.
State flow_map(const Params& p, const State& s0, double t, const IntegratorConfig& cfg);

// First root of ev.value along the orbit of s0, in (0, max_time], matching the
// requested direction. `accept` can veto a root, in which case scanning
// continues past it. Throws NoEvent if the horizon is reached.
EventHit advance_to_event(const Params& p, const State& s0, const EventSpec& ev,
                          const IntegratorConfig& cfg,
                          const std::function<bool(double, const State&)>& accept = {});

// Root search on [ta, tb] inside one dense step (ga, gb are f at the range
// ends); used by multi-event scanners. Returns true and fills `hit` when a
// sign change matching `dir` lies in the range.
bool refine_event_in_range(const Params& p, const DenseStep& step, double ta, double tb,
                           double ga, double gb,
                           const std::function<double(const Params&, const State&)>& f,
                           EventDirection dir, double event_tol, EventHit& hit);

// CSV export: header t,x,y,z, one row per accepted step, 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& os);

}  // namespace lorenz

#endif
