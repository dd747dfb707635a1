#include "lorenz/knots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "lorenz/parallel.hpp"

namespace lorenz {

bool is_primitive(const std::string& w) {
  std::size_t n = w.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    bool repeats = true;
    for (std::size_t i = d; i < n && repeats; ++i)
      if (w[i] != w[i - d]) repeats = false;
    if (repeats) return false;
  }
  return n > 0;
}

Word::Word(std::string w) : letters(std::move(w)) {
  if (letters.empty()) throw ConfigError("word must be nonempty");
  for (char c : letters)
    if (c != 'A' && c != 'B') throw ConfigError("word letters must be A or B");
  primitive = is_primitive(letters);
}

// ---------------------------------------------------------------------------
// Braid combinatorics

LorenzBraid lorenz_braid(const Word& w) {
  if (!w.primitive) throw NotPrimitive("word '" + w.letters + "' is a proper power");
  int n = static_cast<int>(w.letters.size());

  // rank the cyclic shifts lexicographically (A < B)
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto shift_less = [&](int a, int b) {
    for (int k = 0; k < n; ++k) {
      char ca = w.letters[(a + k) % n], cb = w.letters[(b + k) % n];
      if (ca != cb) return ca < cb;
    }
    return a < b;  // unreachable for primitive words
  };
  std::sort(order.begin(), order.end(), shift_less);

  std::vector<int> rank(n);
  for (int r = 0; r < n; ++r) rank[order[r]] = r;

  LorenzBraid braid;
  braid.permutation.resize(n);
  for (int r = 0; r < n; ++r) braid.permutation[r] = rank[(order[r] + 1) % n];

  std::vector<int> perm = braid.permutation;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (perm[i] > perm[j]) ++braid.crossing_count;

  // positive braid word from a bubble sort: one adjacent transposition per
  // inversion, reading the permutation diagram bottom to top
  for (int pass = n - 1; pass > 0; --pass) {
    for (int i = 0; i < pass; ++i) {
      if (perm[i] > perm[i + 1]) {
        std::swap(perm[i], perm[i + 1]);
        braid.generators.push_back(i + 1);
      }
    }
  }
  return braid;
}

std::string LorenzBraid::generator_text() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (i) os << ' ';
    os << 's' << generators[i];
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Gauss linking number

namespace {

// Signed solid angle of the triangle (a, b, c) seen from the origin
// (van Oosterom-Strackee).
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  double la = norm(a), lb = norm(b), lc = norm(c);
  double numer = dot(a, cross(b, c));
  double denom = la * lb * lc + dot(a, b) * lc + dot(a, c) * lb + dot(b, c) * la;
  return 2.0 * std::atan2(numer, denom);
}

// Gauss-map solid angle of one segment pair: quadrilateral split into two
// triangles with corner vectors b1-a1, b1-a2, b2-a2, b2-a1.
double pair_solid_angle(const Vec3& a1, const Vec3& a2, const Vec3& b1, const Vec3& b2) {
  Vec3 alpha = b1 - a1, beta = b1 - a2, gamma = b2 - a2, delta = b2 - a1;
  return triangle_solid_angle(alpha, beta, gamma) + triangle_solid_angle(gamma, delta, alpha);
}

double segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  // standard clamped closest-approach of two segments
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  double s, t;
  constexpr double tiny = 1e-30;
  if (a <= tiny && e <= tiny) return norm(r);
  if (a <= tiny) {
    s = 0.0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = dot(d1, r);
    if (e <= tiny) {
      t = 0.0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = dot(d1, d2);
      double den = a * e - b * b;
      s = den > tiny ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return norm((p1 + s * d1) - (p2 + t * d2));
}

}  // namespace

LinkingResult gauss_linking(const Polyline& c1, const Polyline& c2) {
  if (c1.size() < 3 || c2.size() < 3)
    throw ConfigError("linking needs closed polylines with at least 3 vertices");

  std::size_t n1 = c1.size(), n2 = c2.size();
  double max_seg = 0.0;
  for (std::size_t i = 0; i < n1; ++i)
    max_seg = std::max(max_seg, norm(c1[(i + 1) % n1] - c1[i]));
  for (std::size_t j = 0; j < n2; ++j)
    max_seg = std::max(max_seg, norm(c2[(j + 1) % n2] - c2[j]));

  double min_dist = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      min_dist = std::min(min_dist, segment_distance(c1[i], c1[(i + 1) % n1], c2[j],
                                                     c2[(j + 1) % n2]));
  if (min_dist < 10.0 * max_seg)
    throw SeparationTooSmall("curves separated by " + std::to_string(min_dist) +
                             " but sampled at scale " + std::to_string(max_seg));

  double omega = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    const Vec3& a1 = c1[i];
    const Vec3& a2 = c1[(i + 1) % n1];
    for (std::size_t j = 0; j < n2; ++j)
      omega += pair_solid_angle(a1, a2, c2[j], c2[(j + 1) % n2]);
  }

  LinkingResult out;
  out.raw = omega / (4.0 * M_PI);
  long rounded = std::lround(out.raw);
  if (std::abs(out.raw - rounded) > 0.1)
    throw ResolutionTooCoarse("raw linking " + std::to_string(out.raw) +
                              " is not within 0.1 of an integer");
  out.linking = static_cast<int>(rounded);
  return out;
}

Polyline axis_closure(const Params& p, Wing wing, double half_height, int n) {
  if (n < 8) throw ConfigError("axis closure needs at least 8 points");
  double x0 = wing_scale(p);
  double s = wing == Wing::Plus ? 1.0 : -1.0;

  Polyline out;
  out.reserve(n);
  int nv = n / 2, na = n - nv;
  // up along the axis from -H to +H
  for (int i = 0; i < nv; ++i) {
    double z = -half_height + (2.0 * half_height) * i / nv;
    out.push_back({s * x0, s * x0, z});
  }
  // back down through a distant half circle in the plane y = s*x0
  for (int i = 0; i < na; ++i) {
    double ang = M_PI * i / na;
    out.push_back({s * (x0 + half_height * std::sin(ang)), s * x0,
                   half_height * std::cos(ang)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Periodic orbits

namespace {

struct ChartPoint {
  double x = 0.0, y = 0.0;
  SectionPart part = SectionPart::Paraboloid;
};

State unchart(const Params& p, double eps, const ChartPoint& c) {
  if (c.part == SectionPart::Plane) return {c.x, c.y, eps};
  return {c.x, c.y, c.x * c.y / p.beta};
}

struct MapResult {
  ChartPoint image;
  Symbol symbol = Symbol::Boundary;
  bool grazing = false;
  double time = 0.0;
};

// One application of the section return map in chart coordinates.
MapResult apply_return(const Section& sec, const ChartPoint& from, const IntegratorConfig& integ,
                       double max_time) {
  CrossingScanner::Options opt;
  opt.integ = integ;
  opt.max_time = max_time;
  CrossingScanner scan(sec, unchart(sec.params(), sec.spec().epsilon, from), opt);
  auto res = scan.next();
  if (res.outcome != CrossingScanner::Outcome::Crossed)
    throw RefineFailed("return map left the section (capture or timeout)");
  MapResult out;
  out.image = {res.state.x, res.state.y, res.point.part};
  out.symbol = res.point.symbol;
  out.grazing = res.point.grazing;
  out.time = res.t;
  return out;
}

// Dense LU solve with partial pivoting for the shooting system.
void solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-300) throw RefineFailed("singular shooting Jacobian");
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
    b[r] = s / a[r * n + r];
  }
}

bool cyclic_match(const std::string& have, std::size_t at, const std::string& want) {
  for (std::size_t k = 0; k < want.size(); ++k)
    if (have[at + k] != want[k]) return false;
  return true;
}

}  // namespace

PeriodicOrbit find_periodic_orbit(const Params& p, const Section& sec, const Word& w,
                                  const OrbitSearchConfig& cfg) {
  if (!w.primitive) throw NotPrimitive("word '" + w.letters + "' is a proper power");
  const int m = static_cast<int>(w.letters.size());
  const double eps = sec.spec().epsilon;

  // --- seeding: collect crossings of a long free run ----------------------
  State start = flow_map(p, State{1.0, 1.0, 1.0}, cfg.transient, cfg.integ);
  CrossingScanner::Options opt;
  opt.integ = cfg.integ;
  opt.max_time = cfg.seed_time;
  CrossingScanner scan(sec, start, opt);

  std::vector<ChartPoint> crossings;
  std::string symbols;
  for (;;) {
    auto res = scan.next();
    if (res.outcome != CrossingScanner::Outcome::Crossed) break;
    if (res.point.symbol == Symbol::Boundary) continue;
    crossings.push_back({res.state.x, res.state.y, res.point.part});
    symbols.push_back(symbol_char(res.point.symbol));
  }
  if (static_cast<int>(crossings.size()) < 2 * m)
    throw SeedNotFound("seeding run produced too few section crossings");

  struct Candidate {
    std::size_t index;
    double gap;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i + m < crossings.size(); ++i) {
    if (!cyclic_match(symbols, i, w.letters)) continue;
    double dx = crossings[i + m].x - crossings[i].x;
    double dy = crossings[i + m].y - crossings[i].y;
    candidates.push_back({i, std::hypot(dx, dy)});
  }
  if (candidates.empty())
    throw SeedNotFound("no crossing window realizes word '" + w.letters + "'");
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });

  const int dim = 2 * m;
  auto residual_of = [&](const std::vector<ChartPoint>& pts, std::vector<double>& r,
                         std::vector<MapResult>& images) {
    r.assign(dim, 0.0);
    images.resize(m);
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
      images[j] = apply_return(sec, pts[j], cfg.integ, 50.0);
      int k = (j + 1) % m;
      r[2 * j] = images[j].image.x - pts[k].x;
      r[2 * j + 1] = images[j].image.y - pts[k].y;
      worst = std::max({worst, std::abs(r[2 * j]), std::abs(r[2 * j + 1])});
    }
    return worst;
  };

  std::string last_error = "refinement failed";
  int tried = 0;
  for (const Candidate& cand : candidates) {
    if (++tried > cfg.max_candidates) break;
    std::vector<ChartPoint> pts(crossings.begin() + cand.index,
                                crossings.begin() + cand.index + m);
    try {
      std::vector<double> r;
      std::vector<MapResult> base;
      double rn = residual_of(pts, r, base);
      for (int it = 0; it < cfg.max_newton && rn > cfg.tol; ++it) {
        // finite-difference Jacobian, one column block per shooting point
        std::vector<double> jac(dim * dim, 0.0);
        for (int j = 0; j < m; ++j) {
          int k = (j + 1) % m;
          jac[(2 * j) * dim + 2 * k] -= 1.0;
          jac[(2 * j + 1) * dim + 2 * k + 1] -= 1.0;
          for (int c = 0; c < 2; ++c) {
            ChartPoint bumped = pts[j];
            double h = cfg.fd_step * std::max(1.0, std::abs(c == 0 ? pts[j].x : pts[j].y));
            if (c == 0)
              bumped.x += h;
            else
              bumped.y += h;
            MapResult mr = apply_return(sec, bumped, cfg.integ, 50.0);
            jac[(2 * j) * dim + 2 * j + c] += (mr.image.x - base[j].image.x) / h;
            jac[(2 * j + 1) * dim + 2 * j + c] += (mr.image.y - base[j].image.y) / h;
          }
        }
        std::vector<double> step(r);
        for (auto& v : step) v = -v;
        solve_dense(jac, step, dim);

        double alpha = 1.0;
        bool ok = false;
        for (int bt = 0; bt < 8; ++bt, alpha *= 0.5) {
          std::vector<ChartPoint> trial = pts;
          for (int j = 0; j < m; ++j) {
            trial[j].x += alpha * step[2 * j];
            trial[j].y += alpha * step[2 * j + 1];
          }
          std::vector<double> r2;
          std::vector<MapResult> img2;
          double rn2 = residual_of(trial, r2, img2);
          if (rn2 < rn) {
            pts = trial;
            r = r2;
            base = img2;
            rn = rn2;
            ok = true;
            break;
          }
        }
        if (!ok) throw RefineFailed("line search stalled at residual " + std::to_string(rn));
      }
      if (rn > cfg.tol)
        throw RefineFailed("Newton did not reach tolerance; residual " + std::to_string(rn));

      // verify realized word and assemble the orbit
      PeriodicOrbit orbit;
      orbit.sigma = p.sigma;
      orbit.rho = p.rho;
      orbit.beta = p.beta;
      orbit.word = w.letters;
      orbit.residual = rn;

      std::string realized;
      std::vector<SectionPoint> spts;
      std::vector<double> times;
      double t_abs = 0.0;
      for (int j = 0; j < m; ++j) {
        State s = unchart(p, eps, pts[j]);
        spts.push_back(sec.classify(s, t_abs));
        realized.push_back(symbol_char(spts.back().symbol));
        times.push_back(base[j].time);
        t_abs += base[j].time;
      }
      // align the cycle so the realized word equals the request
      int shift = -1;
      std::string doubled = realized + realized;
      for (int sft = 0; sft < m; ++sft) {
        if (doubled.compare(sft, m, w.letters) == 0) {
          shift = sft;
          break;
        }
      }
      if (shift < 0)
        throw RefineFailed("converged orbit realizes '" + realized + "', not '" + w.letters + "'");
      std::rotate(spts.begin(), spts.begin() + shift, spts.end());
      std::rotate(times.begin(), times.begin() + shift, times.end());
      double t0 = 0.0;
      for (int j = 0; j < m; ++j) {
        spts[j].crossing_time = t0;
        t0 += times[j];
      }
      orbit.section_points = std::move(spts);
      orbit.return_times = std::move(times);
      orbit.period = std::accumulate(orbit.return_times.begin(), orbit.return_times.end(), 0.0);
      return orbit;
    } catch (const RefineFailed& e) {
      last_error = e.what();
      continue;
    }
  }
  throw RefineFailed(last_error + " (word '" + w.letters + "', " +
                     std::to_string(std::min<std::size_t>(tried, candidates.size())) +
                     " candidate(s) tried)");
}

Polyline orbit_polyline(const Params& p, const PeriodicOrbit& orbit, int points_per_return,
                        const IntegratorConfig& cfg) {
  if (orbit.section_points.empty()) throw ConfigError("orbit has no section points");
  Polyline out;
  Trajectory traj = integrate(p, orbit.section_points.front().state, {0.0, orbit.period}, cfg);
  int total = points_per_return * static_cast<int>(orbit.section_points.size());
  out.reserve(total);
  for (int i = 0; i < total; ++i)
    out.push_back(traj.eval(orbit.period * i / total));
  return out;
}

// ---------------------------------------------------------------------------
// Template (two bananas) check

TemplateReport template_check(const Params& p, const Section& sec, int grid_n,
                              const TemplateConfig& cfg) {
  if (!in_domain_A(p)) throw SectionInvalid("template check requires domain A");
  if (grid_n < 16) throw ConfigError("template grid too small");

  double x0 = wing_scale(p);
  double eps = sec.spec().epsilon;
  double box = cfg.core_scale * x0;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Dynamic side classification: where does the funnel eject this point.
  auto eject_side = [&](const State& s) -> int {
    AdaptiveStepper st(p, s, cfg.integ, false);
    while (st.step(cfg.max_time)) {
      double x = st.state().x;
      if (std::abs(x) > 0.75 * x0) return x > 0.0 ? 1 : -1;
    }
    return 0;
  };

  auto plane_member = [&](const State& s) {
    return s.x * s.y < p.beta * eps && sec.ellipsoid_value(s) <= 0.0 &&
           std::abs(s.x) > sec.spec().boundary_tol;
  };

  // Sample A-side plane-part points; the B grid is the symmetry image.
  std::vector<State> grid_a;
  long long attempts = 0;
  int near_eta_budget = static_cast<int>(cfg.near_eta_fraction * grid_n);

  // Near-boundary samples: locate the symbol boundary on chords u -> pi(u)
  // (the ejection side flips exactly once there by equivariance), then lay
  // log-spaced offsets on the A side. These orbits shadow the separatrix and
  // stretch the image cloud toward the opposite corner.
  {
    const int anchors = 8;
    int per_anchor = std::max(near_eta_budget / anchors, 1);
    for (int a = 0; a < anchors && static_cast<int>(grid_a.size()) < near_eta_budget; ++a) {
      State u{0.0, 0.0, eps};
      int side_u = 0;
      for (int tries = 0; tries < 200; ++tries) {
        u = {u01(rng) * box, -(u01(rng)) * box, eps};  // the x>0, y<0 wedge
        if (!plane_member(u)) continue;
        side_u = eject_side(u);
        if (side_u != 0) break;
      }
      if (side_u == 0) continue;
      if (side_u < 0) u = symmetry_map(u);
      // bisect toward the mirror point until the boundary is pinned
      State lo = u, hi = symmetry_map(u);
      for (int it = 0; it < 40; ++it) {
        State mid{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y), eps};
        int sm = eject_side(mid);
        if (sm > 0)
          lo = mid;
        else if (sm < 0)
          hi = mid;
        else
          break;
      }
      double ux = u.x - lo.x, uy = u.y - lo.y;
      double un = std::hypot(ux, uy);
      if (un < 1e-12) continue;
      for (int k = 0; k < per_anchor; ++k) {
        double d = box * std::pow(10.0, -6.0 + 4.0 * (k + 0.5) / per_anchor);
        State q{lo.x + d * ux / un, lo.y + d * uy / un, eps};
        if (plane_member(q) && eject_side(q) > 0) grid_a.push_back(q);
      }
    }
  }

  while (static_cast<int>(grid_a.size()) < grid_n) {
    if (++attempts > 2000LL * grid_n)
      throw GridTooSparse("plane-part sampler could not fill the requested grid");
    State s{u01(rng) * box, (2.0 * u01(rng) - 1.0) * box, eps};
    if (!plane_member(s)) continue;
    int side = eject_side(s);
    if (side > 0)
      grid_a.push_back(s);
    else if (side < 0)
      grid_a.push_back(symmetry_map(s));  // mirror lands on the A side
  }

  struct ImagePoint {
    double x = 0.0, y = 0.0;
    int symbol = 0;  // +1 A, -1 B, 0 boundary
    bool ok = false;
    bool grazing = false;
  };
  std::vector<ImagePoint> img_a(grid_n), img_b(grid_n);

  auto map_one = [&](const State& s, ImagePoint& out) {
    try {
      CrossingScanner::Options opt;
      opt.integ = cfg.integ;
      opt.max_time = cfg.max_time;
      CrossingScanner scan(sec, s, opt);
      auto res = scan.next();
      if (res.outcome != CrossingScanner::Outcome::Crossed) return;
      out.x = res.state.x;
      out.y = res.state.y;
      out.symbol = res.point.symbol == Symbol::A ? 1 : (res.point.symbol == Symbol::B ? -1 : 0);
      out.grazing = res.point.grazing;
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  };

  parallel_for(static_cast<std::size_t>(2 * grid_n), [&](std::size_t i) {
    if (i < static_cast<std::size_t>(grid_n))
      map_one(grid_a[i], img_a[i]);
    else
      map_one(symmetry_map(grid_a[i - grid_n]), img_b[i - grid_n]);
  });

  TemplateReport rep;
  rep.grid_per_side = grid_n;
  bool a_has_a = false, a_has_b = false, b_has_a = false, b_has_b = false;
  double dplus = std::numeric_limits<double>::max(), dminus = dplus;
  std::vector<ImagePoint> va, vb;
  for (const auto& ip : img_a)
    if (ip.ok) {
      va.push_back(ip);
      if (ip.grazing) ++rep.grazing;
      if (ip.symbol > 0) a_has_a = true;
      if (ip.symbol < 0) a_has_b = true;
      dplus = std::min(dplus, std::hypot(ip.x - x0, ip.y - x0));
      dminus = std::min(dminus, std::hypot(ip.x + x0, ip.y + x0));
    }
  for (const auto& ip : img_b)
    if (ip.ok) {
      vb.push_back(ip);
      if (ip.grazing) ++rep.grazing;
      if (ip.symbol > 0) b_has_a = true;
      if (ip.symbol < 0) b_has_b = true;
    }
  rep.returned_a = static_cast<int>(va.size());
  rep.returned_b = static_cast<int>(vb.size());
  if (rep.returned_a < grid_n / 2 || rep.returned_b < grid_n / 2)
    throw GridTooSparse("less than half of the template grid returned to the section");

  double sep = std::numeric_limits<double>::max();
  for (const auto& a : va)
    for (const auto& b : vb)
      sep = std::min(sep, std::hypot(a.x - b.x, a.y - b.y));

  rep.separation = sep;
  rep.disjoint = sep > 0.0;
  rep.a_has_both = a_has_a && a_has_b;
  rep.b_has_both = b_has_a && b_has_b;
  rep.a_dist_pplus = dplus;
  rep.a_dist_pminus = dminus;
  for (const auto& ip : va) rep.image_a.push_back({ip.x, ip.y, static_cast<double>(ip.symbol)});
  for (const auto& ip : vb) rep.image_b.push_back({ip.x, ip.y, static_cast<double>(ip.symbol)});
  rep.passed = rep.disjoint && rep.a_has_both && rep.b_has_both;
  return rep;
}

}  // namespace lorenz
