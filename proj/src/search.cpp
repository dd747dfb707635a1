#include "lorenz/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lorenz {

namespace {

Section section_for(const Params& p, const SearchConfig& cfg) {
  return build_section(p, cfg.section, /*validation_samples=*/0);
}

Vec3 gamma_plus_seed(const Params& p, const SearchConfig& cfg) {
  EigenData ed = eigen_at(p, State{0.0, 0.0, 0.0});
  const EigenPair& top = ed.pairs.back();
  if (!(top.value.real() > 0.0))
    throw EigenStructureUnexpected("origin is not a saddle: no unstable direction");
  Vec3 u{top.vector[0].real(), top.vector[1].real(), top.vector[2].real()};
  u = normalized(u);
  if (u.x < 0.0) u = -u;
  double offset = cfg.manifold.offset > 0.0 ? cfg.manifold.offset : 1e-7 * wing_scale(p);
  return offset * u;
}

}  // namespace

SignatureResult first_return_signature(const Params& p, const SearchConfig& cfg) {
  if (!in_domain_A(p)) throw SectionInvalid("signature requires parameters in domain A");
  Section sec = section_for(p, cfg);
  State seed = gamma_plus_seed(p, cfg);

  CrossingScanner::Options opt;
  opt.integ = cfg.manifold.integ;
  opt.capture_factor = cfg.manifold.capture_factor;
  opt.max_time = cfg.max_orbit_time;
  CrossingScanner scan(sec, seed, opt);

  SignatureResult out;
  for (;;) {
    auto res = scan.next();
    switch (res.outcome) {
      case CrossingScanner::Outcome::Crossed:
        if (res.point.part == SectionPart::Plane) {
          out.kind = SignatureResult::Kind::Value;
          out.x = res.state.x;
          out.t = res.t;
          return out;
        }
        ++out.band_hits_before;
        break;
      case CrossingScanner::Outcome::CapturedPlus:
        out.kind = SignatureResult::Kind::CapturedPlus;
        out.t = res.t;
        return out;
      case CrossingScanner::Outcome::CapturedMinus:
        out.kind = SignatureResult::Kind::CapturedMinus;
        out.t = res.t;
        return out;
      case CrossingScanner::Outcome::CapturedOrigin:
        // numerically indistinguishable from a boundary return; treat as a
        // zero-signature value so bisection tightens onto it
        out.kind = SignatureResult::Kind::Value;
        out.x = 0.0;
        out.t = res.t;
        return out;
      case CrossingScanner::Outcome::TimedOut:
        out.kind = SignatureResult::Kind::TimedOut;
        out.t = res.t;
        return out;
    }
  }
}

ConnectionResult find_homoclinic(double beta, double sigma, std::pair<double, double> rho_bracket,
                                 const SearchConfig& cfg) {
  auto [lo, hi] = rho_bracket;
  if (!(hi > lo)) throw BracketInvalid("rho bracket must be increasing");

  auto side_at = [&](double rho) {
    Params p{sigma, rho, beta};
    auto sig = first_return_signature(p, cfg);
    auto s = sig.side();
    if (!s)
      throw BracketInvalid("signature undefined (timed out) at rho = " + std::to_string(rho));
    return *s;
  };

  int side_lo = side_at(lo);
  int side_hi = side_at(hi);
  if (side_lo == side_hi)
    throw BracketInvalid("first-return side does not flip across the bracket");

  int iters = 0;
  while (hi - lo > cfg.param_tol) {
    if (++iters > cfg.max_iters) throw SearchFailed("homoclinic bisection exceeded max_iters");
    double mid = 0.5 * (lo + hi);
    if (side_at(mid) == side_lo)
      lo = mid;
    else
      hi = mid;
  }

  double rho_star = 0.5 * (lo + hi);
  Params p{sigma, rho_star, beta};

  // Connecting arc: gamma+ up to the final plane-part return. The winding of
  // this arc is the homoclinic loop's winding; closure through the origin
  // ball adds less than 0.05 turns.
  SignatureResult sig = first_return_signature(p, cfg);
  ConnectionResult out;
  out.kind = ConnectionResult::Kind::Homoclinic;
  out.sigma = sigma;
  out.rho = rho_star;
  out.beta = beta;
  out.iterations = iters;
  out.residual = 0.5 * (hi - lo);
  if (sig.kind == SignatureResult::Kind::Value) {
    State seed = gamma_plus_seed(p, cfg);
    Trajectory arc = integrate(p, seed, {0.0, sig.t}, cfg.manifold.integ);
    out.winding = winding_numbers(arc, p);
    out.hits_before_connection = sig.band_hits_before + 1;
    out.n_index = out.winding.n_plus + out.winding.n_minus;
  } else {
    throw SearchFailed("no plane return at the bisection root");
  }
  return out;
}

HeteroclinicResidual heteroclinic_residual(const Params& p, const SearchConfig& cfg) {
  if (!in_domain_A(p)) throw SectionInvalid("residual requires parameters in domain A");
  Section sec = section_for(p, cfg);
  auto fp = fixed_points(p);
  double x0 = wing_scale(p);
  double rm = cfg.match_radius_factor * x0;
  double capture_plus = cfg.manifold.capture_factor * x0;

  // Real stable direction at p- and a transverse orthonormal frame.
  EigenData ed = eigen_at(p, fp.p_minus);
  const EigenPair* strong = nullptr;
  for (const auto& ep : ed.pairs) {
    if (std::abs(ep.value.imag()) > 1e-10 * std::max(1.0, std::abs(ep.value.real()))) continue;
    if (ep.value.real() >= 0.0) continue;
    if (!strong || ep.value.real() < strong->value.real()) strong = &ep;
  }
  if (!strong) throw EigenStructureUnexpected("no real stable direction at p-");
  Vec3 vs = normalized(Vec3{strong->vector[0].real(), strong->vector[1].real(),
                            strong->vector[2].real()});
  Vec3 ref = std::abs(vs.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
  Vec3 e1 = normalized(cross(vs, ref));
  Vec3 e2 = cross(vs, e1);

  State seed = gamma_plus_seed(p, cfg);
  const Params& pp = sec.params();
  double eps = sec.spec().epsilon;
  double band_floor = pp.beta * (eps - sec.spec().smoothing_band);

  auto g_plane = [eps](const Params&, const State& s) { return s.z - eps; };
  auto g_par = [](const Params& q, const State& s) { return paraboloid_value(q, s); };
  auto g_ball = [&fp, rm](const Params&, const State& s) {
    Vec3 d = s - fp.p_minus;
    return dot(d, d) - rm * rm;
  };

  AdaptiveStepper st(pp, seed, cfg.manifold.integ, false);
  double gp_prev = g_plane(pp, seed), gq_prev = g_par(pp, seed), gb_prev = g_ball(pp, seed);
  double arm = 100.0 * cfg.manifold.integ.event_tol;
  bool armed_p = std::abs(gp_prev) > arm, armed_q = std::abs(gq_prev) > arm;

  HeteroclinicResidual out;
  out.min_distance = norm(seed - fp.p_minus);

  while (st.step(cfg.max_orbit_time)) {
    const DenseStep& step = st.last_step();
    const State& s = st.state();
    out.min_distance = std::min(out.min_distance, norm(s - fp.p_minus));

    bool found = false;
    EventHit best{};
    int best_id = -1;  // 0 plane, 1 paraboloid, 2 ball

    auto scan = [&](double g0, double g1, bool* armed, EventDirection dir, auto&& fn,
                    auto&& accept, int id) {
      if (armed) {
        if (!*armed) {
          if (std::abs(g1) > arm) *armed = true;
          return;
        }
      }
      constexpr int kSub = 4;
      double gs[kSub + 1];
      gs[0] = g0;
      gs[kSub] = g1;
      for (int i = 1; i < kSub; ++i)
        gs[i] = fn(pp, step.eval(step.t0 + step.h * i / kSub));
      for (int i = 0; i < kSub; ++i) {
        double ta = step.t0 + step.h * i / kSub;
        double tb = step.t0 + step.h * (i + 1) / kSub;
        EventHit hit;
        if (refine_event_in_range(pp, step, ta, tb, gs[i], gs[i + 1], fn, dir,
                                  cfg.manifold.integ.event_tol, hit)) {
          if (found && hit.t >= best.t) continue;
          if (accept(hit.state)) {
            best = hit;
            best_id = id;
            found = true;
          }
        }
      }
    };

    double gp_now = g_plane(pp, s), gq_now = g_par(pp, s), gb_now = g_ball(pp, s);
    scan(gp_prev, gp_now, &armed_p, EventDirection::Down, g_plane,
         [&](const State& q) {
           return paraboloid_value(pp, q) < 0.0 && sec.ellipsoid_value(q) <= 0.0;
         },
         0);
    scan(gq_prev, gq_now, &armed_q, EventDirection::Up, g_par,
         [&](const State& q) {
           return q.x * q.y >= band_floor && sec.ellipsoid_value(q) <= 0.0;
         },
         1);
    scan(gb_prev, gb_now, nullptr, EventDirection::Down, g_ball,
         [](const State&) { return true; }, 2);
    gp_prev = gp_now;
    gq_prev = gq_now;
    gb_prev = gb_now;

    if (found) {
      if (best_id == 2) {
        out.kind = HeteroclinicResidual::Kind::Matched;
        out.entry = best.state;
        out.t_entry = best.t;
        Vec3 w = best.state - fp.p_minus;
        out.offset = {dot(w, e1), dot(w, e2)};
        out.cost = std::hypot(out.offset[0], out.offset[1]);
        out.min_distance = std::min(out.min_distance, norm(w));
        return out;
      }
      // section hit: sentinel encoding side and closeness
      out.kind = HeteroclinicResidual::Kind::SectionHit;
      out.entry = best.state;
      out.t_entry = best.t;
      out.section_side = best.state.x > 0.0 ? 1 : -1;
      out.hits_before = 1;
      out.cost = cfg.sentinel * (1.0 + out.min_distance / x0);
      out.offset = {out.section_side * out.cost, 0.0};
      return out;
    }

    if (norm(s - fp.p_plus) < capture_plus) {
      out.kind = HeteroclinicResidual::Kind::CapturedPlus;
      out.entry = s;
      out.t_entry = st.t();
      out.cost = cfg.sentinel * (2.0 + out.min_distance / x0);
      out.offset = {out.cost, 0.0};
      return out;
    }
  }

  out.kind = HeteroclinicResidual::Kind::TimedOut;
  out.cost = 4.0 * cfg.sentinel;
  out.offset = {out.cost, 0.0};
  return out;
}

namespace {

bool params_ok(double rho, double sigma, double beta) {
  if (!(sigma > 1e-3) || !(rho > 1.0) || !(beta > 0.0)) return false;
  return in_domain_A(Params{sigma, rho, beta});
}

}  // namespace

ConnectionResult find_tpoint(double beta, std::pair<double, double> guess_rho_sigma,
                             const SearchConfig& cfg) {
  auto [rho0, sigma0] = guess_rho_sigma;
  int evals = 0;

  auto cost_at = [&](double rho, double sigma) -> HeteroclinicResidual {
    ++evals;
    if (!params_ok(rho, sigma, beta)) {
      HeteroclinicResidual bad;
      bad.kind = HeteroclinicResidual::Kind::TimedOut;
      bad.cost = 16.0 * cfg.sentinel;
      return bad;
    }
    return heteroclinic_residual(Params{sigma, rho, beta}, cfg);
  };

  // --- Nelder-Mead descent on ||residual|| -------------------------------
  struct Vertex {
    double rho, sigma;
    HeteroclinicResidual res;
  };
  auto make = [&](double r, double s) { return Vertex{r, s, cost_at(r, s)}; };

  double h = cfg.simplex_scale;
  std::array<Vertex, 3> simp = {make(rho0, sigma0), make(rho0 + h, sigma0),
                                make(rho0, sigma0 + h)};
  auto by_cost = [](const Vertex& a, const Vertex& b) { return a.res.cost < b.res.cost; };

  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    std::sort(simp.begin(), simp.end(), by_cost);
    const Vertex& best = simp[0];
    if (best.res.cost <= cfg.residual_tol) break;
    double diam = std::max(std::hypot(simp[1].rho - simp[0].rho, simp[1].sigma - simp[0].sigma),
                           std::hypot(simp[2].rho - simp[0].rho, simp[2].sigma - simp[0].sigma));
    if (best.res.kind == HeteroclinicResidual::Kind::Matched && diam < 1e-3) break;
    if (diam < 1e-10) break;

    double crho = 0.5 * (simp[0].rho + simp[1].rho);
    double csigma = 0.5 * (simp[0].sigma + simp[1].sigma);
    Vertex refl = make(crho + (crho - simp[2].rho), csigma + (csigma - simp[2].sigma));
    if (refl.res.cost < simp[0].res.cost) {
      Vertex expand =
          make(crho + 2.0 * (crho - simp[2].rho), csigma + 2.0 * (csigma - simp[2].sigma));
      simp[2] = expand.res.cost < refl.res.cost ? expand : refl;
    } else if (refl.res.cost < simp[1].res.cost) {
      simp[2] = refl;
    } else {
      Vertex contr = make(crho + 0.5 * (simp[2].rho - crho), csigma + 0.5 * (simp[2].sigma - csigma));
      if (contr.res.cost < simp[2].res.cost) {
        simp[2] = contr;
      } else {
        for (int i = 1; i < 3; ++i) {
          simp[i].rho = 0.5 * (simp[i].rho + simp[0].rho);
          simp[i].sigma = 0.5 * (simp[i].sigma + simp[0].sigma);
          simp[i].res = cost_at(simp[i].rho, simp[i].sigma);
        }
      }
    }
  }
  std::sort(simp.begin(), simp.end(), by_cost);
  Vertex cur = simp[0];

  // --- damped finite-difference Newton polish on the 2-vector residual ----
  int newton = 0;
  while (cur.res.cost > cfg.residual_tol && newton < 40) {
    if (cur.res.kind != HeteroclinicResidual::Kind::Matched)
      throw SearchFailed("simplex stage did not reach the smooth basin of the T-point");
    ++newton;
    double dh = 1e-5;
    HeteroclinicResidual fr = cost_at(cur.rho + dh, cur.sigma);
    HeteroclinicResidual fs = cost_at(cur.rho, cur.sigma + dh);
    if (fr.kind != HeteroclinicResidual::Kind::Matched ||
        fs.kind != HeteroclinicResidual::Kind::Matched)
      throw SearchFailed("finite-difference stencil left the smooth basin");
    double j11 = (fr.offset[0] - cur.res.offset[0]) / dh;
    double j21 = (fr.offset[1] - cur.res.offset[1]) / dh;
    double j12 = (fs.offset[0] - cur.res.offset[0]) / dh;
    double j22 = (fs.offset[1] - cur.res.offset[1]) / dh;
    double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-14) throw SearchFailed("singular residual Jacobian");
    double drho = -(j22 * cur.res.offset[0] - j12 * cur.res.offset[1]) / det;
    double dsigma = -(-j21 * cur.res.offset[0] + j11 * cur.res.offset[1]) / det;

    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 8; ++bt, scale *= 0.5) {
      Vertex trial = make(cur.rho + scale * drho, cur.sigma + scale * dsigma);
      if (trial.res.cost < cur.res.cost) {
        cur = trial;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  if (cur.res.cost > cfg.residual_tol) {
    std::ostringstream os;
    os << "T-point search did not converge: best residual " << cur.res.cost << " at (rho, sigma) = ("
       << cur.rho << ", " << cur.sigma << ")";
    throw SearchFailed(os.str());
  }

  Params p{cur.sigma, cur.rho, beta};
  ConnectionResult out;
  out.kind = ConnectionResult::Kind::Heteroclinic;
  out.sigma = cur.sigma;
  out.rho = cur.rho;
  out.beta = beta;
  out.residual = cur.res.cost;
  out.hits_before_connection = cur.res.hits_before;
  out.iterations = iters + newton;

  // Winding of the connecting arc, seed to match-ball entry.
  State seed = gamma_plus_seed(p, cfg);
  Trajectory arc = integrate(p, seed, {0.0, cur.res.t_entry}, cfg.manifold.integ);
  WindingCount w = winding_numbers_raw(arc, p);
  w.n_plus = static_cast<int>(std::lround(w.raw_plus));
  w.n_minus = static_cast<int>(std::lround(w.raw_minus));
  out.winding = w;
  return out;
}

PathScanResult path_scan(const ParamPath& path, int n, const SearchConfig& cfg) {
  if (n < 2) throw ConfigError("path scan needs at least two samples");
  PathScanResult out;
  out.samples.reserve(n);

  for (int i = 0; i < n; ++i) {
    double s = static_cast<double>(i) / (n - 1);
    Params p = path(s);
    if (!in_domain_A(p)) {
      std::ostringstream os;
      os << "path leaves domain A at s = " << s << " (sigma=" << p.sigma << ", rho=" << p.rho
         << ", beta=" << p.beta << ")";
      throw PathOutsideDomain(os.str());
    }
    PathSample sample;
    sample.s = s;
    sample.sigma = p.sigma;
    sample.rho = p.rho;
    sample.beta = p.beta;
    Section sec = section_for(p, cfg);
    SymbolSequence seq = kneading_sequence(p, sec, cfg.kneading_prefix, cfg.manifold);
    sample.kneading = seq.symbols;
    if (!seq.terminal.empty() && seq.terminal != "max_symbols")
      sample.kneading += "|" + seq.terminal;
    sample.signature = first_return_signature(p, cfg);
    out.samples.push_back(std::move(sample));
  }

  for (std::size_t i = 0; i + 1 < out.samples.size(); ++i) {
    auto a = out.samples[i].signature.side();
    auto b = out.samples[i + 1].signature.side();
    if (a && b && *a != *b)
      out.signature_flips.emplace_back(out.samples[i].s, out.samples[i + 1].s);
    if (out.samples[i].kneading != out.samples[i + 1].kneading) ++out.kneading_changes;
  }
  return out;
}

}  // namespace lorenz
