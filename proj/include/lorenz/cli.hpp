#ifndef LORENZ_CLI_HPP
#define LORENZ_CLI_HPP

#include <array>
#include <string>
#include <vector>

#include "lorenz/knots.hpp"
#include "lorenz/search.hpp"

namespace lorenz {

// Everything a batch run needs; a run is reproducible from this alone.
struct RunConfig {
  double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;

  IntegratorConfig integ;
  SectionSpec section;

  // search
  double param_tol = 1e-6;
  double residual_tol = 1e-6;
  int max_iters = 200;

  // command options
  std::string out_dir = "out";
  std::string word;
  std::array<double, 3> initial{1.0, 1.0, 1.0};
  double time = 50.0;
  int kneading_n = 16;
  std::array<double, 2> bracket{13.0, 15.0};
  std::array<double, 2> guess{30.8, 10.2};
  int validate_samples = 10000;
  double trapping_radius = 1000.0;
  int grid = 1000;
  double seed_time = 500.0;
  bool plots = true;

  Params params() const { return Params{sigma, rho, beta}; }
  SearchConfig search_config() const;
  ManifoldConfig manifold_config() const;
  OrbitSearchConfig orbit_config() const;
};

// Parses [--config FILE] plus flag overrides and a command name. Flags beat
// config-file values beat defaults. Throws ConfigError on unknown keys or
// out-of-range values.
struct ParsedInvocation {
  std::string command;
  RunConfig config;
};
ParsedInvocation parse_config(const std::vector<std::string>& args);

// INI echo of the effective configuration, written into every run directory.
std::string effective_config_text(const RunConfig& cfg);

// Dispatches one command; writes artifacts under cfg.out_dir. Returns 0 on
// success and 1 when a domain error was recorded in result.json.
int run_command(const std::string& name, const RunConfig& cfg);

// argv entry point used by the binary: parse, dispatch, map exit codes
// (0 success, 1 domain error, 2 usage error).
int cli_main(int argc, char** argv);

}  // namespace lorenz

#endif
