#include "lorenz/cli.hpp"

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lorenz/io.hpp"

namespace lorenz {

SearchConfig RunConfig::search_config() const {
  SearchConfig sc;
  sc.param_tol = param_tol;
  sc.residual_tol = residual_tol;
  sc.max_iters = max_iters;
  sc.section = section;
  sc.manifold = manifold_config();
  return sc;
}

ManifoldConfig RunConfig::manifold_config() const {
  ManifoldConfig mc;
  mc.integ = integ;
  mc.max_time = std::max(time, 100.0);
  return mc;
}

OrbitSearchConfig RunConfig::orbit_config() const {
  OrbitSearchConfig oc;
  oc.integ = integ;
  oc.seed_time = seed_time;
  return oc;
}

namespace {

void add_options(CLI::App& app, RunConfig& cfg) {
  app.set_config("--config", "", "key=value configuration file with [sections]");
  app.allow_config_extras(false);

  auto* params = app.add_option_group("params");
  params->add_option("--sigma", cfg.sigma, "Prandtl-like parameter")
      ->check(CLI::PositiveNumber)
      ->configurable();
  params->add_option("--rho", cfg.rho, "Rayleigh-like parameter")
      ->check(CLI::PositiveNumber)
      ->configurable();
  params->add_option("--beta", cfg.beta, "geometric parameter")
      ->check(CLI::PositiveNumber)
      ->configurable();

  auto* integ = app.add_option_group("integrator");
  integ->add_option("--rel-tol", cfg.integ.rel_tol)->check(CLI::PositiveNumber)->configurable();
  integ->add_option("--abs-tol", cfg.integ.abs_tol)->check(CLI::PositiveNumber)->configurable();
  integ->add_option("--max-step", cfg.integ.max_step)->check(CLI::NonNegativeNumber)->configurable();
  integ->add_option("--max-time", cfg.integ.max_time)->check(CLI::PositiveNumber)->configurable();
  integ->add_option("--event-tol", cfg.integ.event_tol)->check(CLI::PositiveNumber)->configurable();

  auto* section = app.add_option_group("section");
  section->add_option("--epsilon", cfg.section.epsilon, "plane height; 0 means 0.01*(rho-1)")
      ->check(CLI::NonNegativeNumber)
      ->configurable();
  section->add_option("--ellipsoid-radius", cfg.section.ellipsoid_radius)
      ->check(CLI::PositiveNumber)
      ->configurable();
  section->add_option("--tangency-margin", cfg.section.tangency_margin)
      ->check(CLI::PositiveNumber)
      ->configurable();
  section->add_option("--boundary-tol", cfg.section.boundary_tol)
      ->check(CLI::PositiveNumber)
      ->configurable();

  auto* search = app.add_option_group("search");
  search->add_option("--param-tol", cfg.param_tol)->check(CLI::PositiveNumber)->configurable();
  search->add_option("--residual-tol", cfg.residual_tol)
      ->check(CLI::PositiveNumber)
      ->configurable();
  search->add_option("--max-iters", cfg.max_iters)->check(CLI::PositiveNumber)->configurable();

  auto* output = app.add_option_group("output");
  output->add_option("--out", cfg.out_dir, "artifact directory")->configurable();
  output->add_flag("--plot,!--no-plot", cfg.plots, "write SVG plots")->configurable();
}

std::string error_type_name(const Error& e) {
#define LORENZ_NAME_FOR(T)                 \
  if (dynamic_cast<const T*>(&e)) return #T
  LORENZ_NAME_FOR(DegenerateParameters);
  LORENZ_NAME_FOR(EigenFailure);
  LORENZ_NAME_FOR(StiffnessFailure);
  LORENZ_NAME_FOR(NoEvent);
  LORENZ_NAME_FOR(SectionInvalid);
  LORENZ_NAME_FOR(NotOnSection);
  LORENZ_NAME_FOR(NotTrapping);
  LORENZ_NAME_FOR(EmptyCurves);
  LORENZ_NAME_FOR(EigenStructureUnexpected);
  LORENZ_NAME_FOR(TooCloseToAxis);
  LORENZ_NAME_FOR(WindingAmbiguous);
  LORENZ_NAME_FOR(BracketInvalid);
  LORENZ_NAME_FOR(SearchFailed);
  LORENZ_NAME_FOR(PathOutsideDomain);
  LORENZ_NAME_FOR(SeedNotFound);
  LORENZ_NAME_FOR(RefineFailed);
  LORENZ_NAME_FOR(NotPrimitive);
  LORENZ_NAME_FOR(SeparationTooSmall);
  LORENZ_NAME_FOR(ResolutionTooCoarse);
  LORENZ_NAME_FOR(GridTooSparse);
  LORENZ_NAME_FOR(Captured);
#undef LORENZ_NAME_FOR
  return "Error";
}

json error_json(const std::string& type, const std::string& what) {
  return json{{"error", {{"type", type}, {"what", what}}}};
}

void emit(const RunConfig& cfg, const std::string& name, const json& j) {
  write_text_atomic(std::filesystem::path(cfg.out_dir) / name, j.dump(2) + "\n");
}

void emit_config(const RunConfig& cfg) {
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "effective.cfg",
                    effective_config_text(cfg));
}

void emit_plots(const RunConfig& cfg, const std::vector<SvgSeries>& series, const Params& p) {
  if (!cfg.plots) return;
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "plot_xz.svg",
                    render_svg(series, p, true));
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "plot_xy.svg",
                    render_svg(series, p, false));
}

Polyline trajectory_polyline(const Trajectory& traj, int max_points = 20000) {
  Polyline line;
  auto nodes = traj.nodes();
  std::size_t stride = std::max<std::size_t>(1, nodes.size() / max_points);
  for (std::size_t i = 0; i < nodes.size(); i += stride) line.push_back(nodes[i].second);
  if (!nodes.empty()) line.push_back(nodes.back().second);
  return line;
}

int cmd_simulate(const RunConfig& cfg) {
  Params p = cfg.params();
  State s0{cfg.initial[0], cfg.initial[1], cfg.initial[2]};
  Trajectory traj = integrate(p, s0, {0.0, cfg.time}, cfg.integ);

  std::ostringstream csv;
  write_csv(traj, csv);
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "trajectory.csv", csv.str());
  emit_plots(cfg, {{trajectory_polyline(traj), "#1f77b4", 0.6}}, p);

  State sf = traj.back();
  emit(cfg, "result.json",
       json{{"command", "simulate"},
            {"params", to_json(p)},
            {"t_end", traj.t_end()},
            {"steps", traj.step_count()},
            {"final_state", {sf.x, sf.y, sf.z}}});
  return 0;
}

int cmd_section_map(const RunConfig& cfg) {
  Params p = cfg.params();
  Section sec = build_section(p, cfg.section);
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "delta_plus.csv",
                    polyline_csv(sec.curves().delta_plus));
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "delta_minus.csv",
                    polyline_csv(sec.curves().delta_minus));

  State s0{cfg.initial[0], cfg.initial[1], cfg.initial[2]};
  CrossingScanner::Options opt;
  opt.integ = cfg.integ;
  opt.max_time = cfg.time;
  CrossingScanner scan(sec, s0, opt);
  std::vector<SectionPoint> points;
  std::string outcome = "max_time";
  for (;;) {
    auto res = scan.next();
    if (res.outcome == CrossingScanner::Outcome::Crossed) {
      points.push_back(res.point);
      continue;
    }
    switch (res.outcome) {
      case CrossingScanner::Outcome::CapturedPlus: outcome = "p+"; break;
      case CrossingScanner::Outcome::CapturedMinus: outcome = "p-"; break;
      case CrossingScanner::Outcome::CapturedOrigin: outcome = "origin"; break;
      default: outcome = "max_time"; break;
    }
    break;
  }
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "crossings.csv", crossings_csv(points));

  Polyline cloud;
  for (const auto& sp : points) cloud.push_back(sp.state);
  emit_plots(cfg,
             {{sec.curves().delta_plus, "#d62728", 1.2},
              {sec.curves().delta_minus, "#2ca02c", 1.2},
              {cloud, "#1f77b4", 0.0}},
             p);

  int n_a = 0, n_b = 0, n_boundary = 0, n_grazing = 0;
  for (const auto& sp : points) {
    if (sp.symbol == Symbol::A) ++n_a;
    if (sp.symbol == Symbol::B) ++n_b;
    if (sp.symbol == Symbol::Boundary) ++n_boundary;
    if (sp.grazing) ++n_grazing;
  }
  emit(cfg, "result.json",
       json{{"command", "section-map"},
            {"params", to_json(p)},
            {"crossings", points.size()},
            {"symbol_a", n_a},
            {"symbol_b", n_b},
            {"boundary", n_boundary},
            {"grazing", n_grazing},
            {"outcome", outcome},
            {"flagged_outside_ellipsoid", scan.flagged_outside_ellipsoid()}});
  return 0;
}

int cmd_kneading(const RunConfig& cfg) {
  Params p = cfg.params();
  Section sec = build_section(p, cfg.section);
  ManifoldConfig mc = cfg.manifold_config();
  SymbolSequence seq = kneading_sequence(p, sec, cfg.kneading_n, mc);
  emit(cfg, "result.json", to_json(seq, p));
  return 0;
}

int cmd_find_homoclinic(const RunConfig& cfg) {
  SearchConfig sc = cfg.search_config();
  ConnectionResult res =
      find_homoclinic(cfg.beta, cfg.sigma, {cfg.bracket[0], cfg.bracket[1]}, sc);
  emit(cfg, "result.json", to_json(res));
  return 0;
}

int cmd_find_tpoint(const RunConfig& cfg) {
  SearchConfig sc = cfg.search_config();
  ConnectionResult res = find_tpoint(cfg.beta, {cfg.guess[0], cfg.guess[1]}, sc);
  emit(cfg, "result.json", to_json(res));

  if (cfg.plots) {
    Params p{res.sigma, res.rho, res.beta};
    SearchConfig at_root = sc;
    HeteroclinicResidual hr = heteroclinic_residual(p, at_root);
    if (hr.kind == HeteroclinicResidual::Kind::Matched) {
      EigenData ed = eigen_at(p, State{0.0, 0.0, 0.0});
      Vec3 u{ed.pairs.back().vector[0].real(), ed.pairs.back().vector[1].real(),
             ed.pairs.back().vector[2].real()};
      u = normalized(u);
      if (u.x < 0.0) u = -u;
      Trajectory arc = integrate(p, 1e-7 * wing_scale(p) * u, {0.0, hr.t_entry}, cfg.integ);
      emit_plots(cfg, {{trajectory_polyline(arc), "#9467bd", 1.0}}, p);
    }
  }
  return 0;
}

int cmd_periodic(const RunConfig& cfg) {
  if (cfg.word.empty()) throw ConfigError("periodic requires --word");
  Params p = cfg.params();
  Word w(cfg.word);
  if (!w.primitive) throw NotPrimitive("word '" + cfg.word + "' is a proper power");
  Section sec = build_section(p, cfg.section);
  PeriodicOrbit orbit = find_periodic_orbit(p, sec, w, cfg.orbit_config());
  emit(cfg, "result.json", to_json(orbit));
  Polyline line = orbit_polyline(p, orbit, 400, cfg.integ);
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "orbit.csv", polyline_csv(line));
  emit_plots(cfg, {{line, "#1f77b4", 1.0}}, p);
  return 0;
}

int cmd_braid(const RunConfig& cfg) {
  if (cfg.word.empty()) throw ConfigError("braid requires --word");
  Word w(cfg.word);
  LorenzBraid braid = lorenz_braid(w);
  emit(cfg, "result.json", to_json(braid, w.letters));
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "braid.txt",
                    braid.generator_text() + "\n");
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  Params p = cfg.params();
  Section sec = build_section(p, cfg.section, /*validation_samples=*/0);
  TransversalityReport tr = validate_transversality(p, sec, cfg.validate_samples, false);
  TrappingReport trap = validate_trapping(p, cfg.trapping_radius, cfg.validate_samples, false);
  bool passed = tr.passed && trap.passed;
  emit(cfg, "result.json", json{{"command", "validate"},
                                {"params", to_json(p)},
                                {"transversality", to_json(tr)},
                                {"trapping", to_json(trap)},
                                {"passed", passed}});
  return passed ? 0 : 1;
}

}  // namespace

std::string effective_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "[params]\n";
  os << "sigma=" << cfg.sigma << "\nrho=" << cfg.rho << "\nbeta=" << cfg.beta << "\n\n";
  os << "[integrator]\n";
  os << "rel-tol=" << cfg.integ.rel_tol << "\nabs-tol=" << cfg.integ.abs_tol
     << "\nmax-step=" << cfg.integ.max_step << "\nmax-time=" << cfg.integ.max_time
     << "\nevent-tol=" << cfg.integ.event_tol << "\n\n";
  os << "[section]\n";
  os << "epsilon=" << cfg.section.epsilon << "\nellipsoid-radius=" << cfg.section.ellipsoid_radius
     << "\ntangency-margin=" << cfg.section.tangency_margin
     << "\nboundary-tol=" << cfg.section.boundary_tol << "\n\n";
  os << "[search]\n";
  os << "param-tol=" << cfg.param_tol << "\nresidual-tol=" << cfg.residual_tol
     << "\nmax-iters=" << cfg.max_iters << "\n\n";
  os << "[output]\n";
  os << "out=" << cfg.out_dir << "\n";
  return os.str();
}

ParsedInvocation parse_config(const std::vector<std::string>& args) {
  ParsedInvocation inv;
  CLI::App app{"lorenz-lab: cross-section, connection, and knot computations for the Lorenz system"};
  add_options(app, inv.config);

  const std::vector<std::string> commands = {"simulate",        "section-map", "kneading",
                                             "find-homoclinic", "find-tpoint", "periodic",
                                             "braid",           "validate"};
  app.add_option("command", inv.command, "one of: simulate section-map kneading find-homoclinic"
                                        " find-tpoint periodic braid validate")
      ->required()
      ->check(CLI::IsMember(commands));

  app.add_option("--word", inv.config.word, "symbolic word over A/B (periodic, braid)");
  app.add_option("--initial", inv.config.initial, "initial state x,y,z")->delimiter(',');
  app.add_option("--time", inv.config.time, "integration horizon")->check(CLI::PositiveNumber);
  app.add_option("--kneading-n", inv.config.kneading_n, "symbols to compute")
      ->check(CLI::PositiveNumber);
  app.add_option("--bracket", inv.config.bracket, "rho bracket lo,hi (find-homoclinic)")
      ->delimiter(',');
  app.add_option("--guess", inv.config.guess, "initial rho,sigma (find-tpoint)")->delimiter(',');
  app.add_option("--samples", inv.config.validate_samples, "validation sample count")
      ->check(CLI::PositiveNumber);
  app.add_option("--radius", inv.config.trapping_radius, "trapping ellipsoid radius")
      ->check(CLI::PositiveNumber);
  app.add_option("--grid", inv.config.grid, "template grid per side")->check(CLI::PositiveNumber);
  app.add_option("--seed-time", inv.config.seed_time, "close-return seeding run length")
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  return inv;
}

int run_command(const std::string& name, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  emit_config(cfg);
  try {
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "section-map") return cmd_section_map(cfg);
    if (name == "kneading") return cmd_kneading(cfg);
    if (name == "find-homoclinic") return cmd_find_homoclinic(cfg);
    if (name == "find-tpoint") return cmd_find_tpoint(cfg);
    if (name == "periodic") return cmd_periodic(cfg);
    if (name == "braid") return cmd_braid(cfg);
    if (name == "validate") return cmd_validate(cfg);
    throw ConfigError("unknown command: " + name);
  } catch (const ConfigError&) {
    throw;  // usage problem: no result.json, exit 2 upstream
  } catch (const Error& e) {
    emit(cfg, "result.json", error_json(error_type_name(e), e.what()));
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    ParsedInvocation inv = parse_config(args);
    return run_command(inv.command, inv.config);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lorenz
