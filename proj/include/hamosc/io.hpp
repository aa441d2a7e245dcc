#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hamosc/coefsys.hpp"
#include "hamosc/criteria.hpp"
#include "hamosc/odeint.hpp"

namespace hamosc::io {

std::string_view tool_version();

struct ScenarioFile {
  std::string name;
  std::string family;
  std::string table_csv_path;
  Params params;
  Window window;
  Options options;
  /// Known answer for the catalogue entries; verify falls back to it when
  /// the analysis is Inconclusive.
  std::optional<VerdictKind> expected;
  /// Directory that relative table paths are resolved against.
  std::string base_dir = ".";
};

/// Parses a scenario document. A report document is accepted too: its
/// embedded "scenario" object is used. Throws Error(ParseError) with line and
/// column for malformed JSON and Error(InvalidInput) for schema violations.
ScenarioFile parse_scenario(std::string_view text, const std::string& base_dir = ".");

/// Reads a file, or a built-in catalogue entry when `path_or_name` is not an
/// existing file but names one.
ScenarioFile load_scenario(const std::string& path_or_name);

/// Builds the coefficient provider, checks that the window lies in its
/// domain and runs validate_scenario on it.
Scenario build_scenario(const ScenarioFile& f);

/// The scenario document with every option spelled out.
std::string scenario_json(const ScenarioFile& f, int indent = 2);

std::string report_json(const ScenarioFile& f, const AnalysisResult& r);

struct CatalogueEntry {
  std::string name;
  std::string anchor;
  std::string json;
};
const std::vector<CatalogueEntry>& catalogue();

/// Locale-independent "%.17g".
std::string format_double(double x);

/// det Phi along one run at `samples` uniform points plus `events`.
/// Columns t,re_det,im_det,abs_det,conjoined_defect,log_scale; det is that
/// of the renormalized frame, the true value is det * exp(log_scale).
void write_det_csv(std::ostream& out, const HamiltonianRun& run, const Window& w, const std::vector<double>& events,
                   int samples = 1000);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace hamosc::io
