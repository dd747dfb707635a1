#include "lorenz/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lorenz {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json state_json(const State& s) { return json::array({s.x, s.y, s.z}); }

}  // namespace

json to_json(const Params& p) {
  return {{"sigma", p.sigma}, {"rho", p.rho}, {"beta", p.beta}};
}

json to_json(const WindingCount& w) {
  return {{"plus", w.n_plus},
          {"minus", w.n_minus},
          {"raw_plus", w.raw_plus},
          {"raw_minus", w.raw_minus}};
}

json to_json(const TransversalityReport& rep) {
  json parts = json::array();
  for (const auto& pr : rep.parts) {
    json fails = json::array();
    for (const auto& s : pr.failures) fails.push_back(state_json(s));
    parts.push_back({{"part", pr.part},
                     {"n_samples", pr.n_samples},
                     {"min_margin", pr.min_margin},
                     {"failures", fails}});
  }
  return {{"parts", parts}, {"passed", rep.passed}};
}

json to_json(const TrappingReport& rep) {
  json fails = json::array();
  for (const auto& s : rep.failures) fails.push_back(state_json(s));
  return {{"radius", rep.radius},
          {"n_samples", rep.n_samples},
          {"min_inflow", rep.min_inflow},
          {"failures", fails},
          {"passed", rep.passed}};
}

json to_json(const ConnectionResult& res) {
  return {{"kind", res.kind == ConnectionResult::Kind::Homoclinic ? "homoclinic" : "heteroclinic"},
          {"N", res.n_index},
          {"beta", res.beta},
          {"sigma", res.sigma},
          {"rho", res.rho},
          {"residual", res.residual},
          {"winding", to_json(res.winding)},
          {"hits_before_connection", res.hits_before_connection},
          {"iterations", res.iterations}};
}

json to_json(const SymbolSequence& seq, const Params& p) {
  return {{"params", to_json(p)},
          {"symbols", seq.symbols},
          {"times", seq.times},
          {"terminal", seq.terminal},
          {"undecided", seq.undecided}};
}

json to_json(const PeriodicOrbit& orbit) {
  json pts = json::array();
  for (const auto& sp : orbit.section_points) pts.push_back(state_json(sp.state));
  return {{"word", orbit.word},
          {"period", orbit.period},
          {"residual", orbit.residual},
          {"points", pts},
          {"return_times", orbit.return_times},
          {"params", json{{"sigma", orbit.sigma}, {"rho", orbit.rho}, {"beta", orbit.beta}}}};
}

json to_json(const TemplateReport& rep) {
  return {{"grid_per_side", rep.grid_per_side},
          {"returned_a", rep.returned_a},
          {"returned_b", rep.returned_b},
          {"grazing", rep.grazing},
          {"separation", rep.separation},
          {"disjoint", rep.disjoint},
          {"a_image_has_both_symbols", rep.a_has_both},
          {"b_image_has_both_symbols", rep.b_has_both},
          {"a_image_min_dist_p_plus", rep.a_dist_pplus},
          {"a_image_min_dist_p_minus", rep.a_dist_pminus},
          {"passed", rep.passed}};
}

json to_json(const LorenzBraid& braid, const std::string& word) {
  return {{"word", word},
          {"strands", braid.permutation.size()},
          {"permutation", braid.permutation},
          {"crossings", braid.crossing_count},
          {"generators", braid.generators},
          {"braid_word", braid.generator_text()}};
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
  }
  fs::rename(tmp, path);
}

std::string polyline_csv(const Polyline& line) {
  std::ostringstream os;
  os << "x,y,z\n";
  for (const auto& v : line)
    os << fmt17(v.x) << ',' << fmt17(v.y) << ',' << fmt17(v.z) << '\n';
  return os.str();
}

std::string crossings_csv(const std::vector<SectionPoint>& points) {
  std::ostringstream os;
  os << "t,x,y,z,part,symbol,transversality,grazing\n";
  for (const auto& sp : points) {
    os << fmt17(sp.crossing_time) << ',' << fmt17(sp.state.x) << ',' << fmt17(sp.state.y) << ','
       << fmt17(sp.state.z) << ',' << (sp.part == SectionPart::Plane ? "plane" : "paraboloid")
       << ',' << symbol_char(sp.symbol) << ',' << fmt17(sp.transversality) << ','
       << (sp.grazing ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string render_svg(const std::vector<SvgSeries>& series, const Params& p,
                       bool xz_projection) {
  // smallest ellipsoid of the trapping family containing the data
  double r2 = 0.0;
  for (const auto& s : series)
    for (const auto& v : s.points) {
      double dz = v.z - 2.0 * p.rho;
      r2 = std::max(r2, p.rho * v.x * v.x + p.sigma * v.y * v.y + p.sigma * dz * dz);
    }
  double r = 1.1 * std::sqrt(std::max(r2, 1.0));

  double xmin = -r / std::sqrt(p.rho), xmax = r / std::sqrt(p.rho);
  double ymin, ymax;
  if (xz_projection) {
    ymin = 2.0 * p.rho - r / std::sqrt(p.sigma);
    ymax = 2.0 * p.rho + r / std::sqrt(p.sigma);
  } else {
    ymin = -r / std::sqrt(p.sigma);
    ymax = r / std::sqrt(p.sigma);
  }

  const double W = 800, H = 800, pad = 40;
  auto mapx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto mapy = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  os << "<rect x='0' y='0' width='" << W << "' height='" << H << "' fill='white'/>\n";
  os << "<rect x='" << pad << "' y='" << pad << "' width='" << W - 2 * pad << "' height='"
     << H - 2 * pad << "' fill='none' stroke='#999'/>\n";
  os << "<text x='" << W / 2 << "' y='" << H - 10 << "' text-anchor='middle' font-size='12'>x</text>\n";
  os << "<text x='12' y='" << H / 2 << "' text-anchor='middle' font-size='12'>"
     << (xz_projection ? "z" : "y") << "</text>\n";
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='" << s.width
       << "' points='";
    for (const auto& v : s.points) {
      double u = v.x, w = xz_projection ? v.z : v.y;
      os << mapx(u) << ',' << mapy(w) << ' ';
    }
    os << "'/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lorenz
