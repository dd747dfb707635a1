#ifndef LORENZ_IO_HPP
#define LORENZ_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lorenz/knots.hpp"
#include "lorenz/manifolds.hpp"
#include "lorenz/search.hpp"

namespace lorenz {

using json = nlohmann::json;

json to_json(const Params& p);
json to_json(const WindingCount& w);
json to_json(const TransversalityReport& rep);
json to_json(const TrappingReport& rep);
json to_json(const ConnectionResult& res);
json to_json(const SymbolSequence& seq, const Params& p);
json to_json(const PeriodicOrbit& orbit);
json to_json(const TemplateReport& rep);
json to_json(const LorenzBraid& braid, const std::string& word);

// Write-to-temp-then-rename; the artifact appears atomically.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string polyline_csv(const Polyline& line);
std::string crossings_csv(const std::vector<SectionPoint>& points);

// Static x-z / x-y projections. Axes come from the smallest trapping-family
// ellipsoid that contains the data.
struct SvgSeries {
  Polyline points;
  std::string color = "#1f77b4";
  double width = 0.6;
};
std::string render_svg(const std::vector<SvgSeries>& series, const Params& p, bool xz_projection);

}  // namespace lorenz

#endif
