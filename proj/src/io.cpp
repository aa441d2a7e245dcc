#include "hamosc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace hamosc::io {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidInput, what); }

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto pos = msg.find(": ", msg.find("parse error")); pos != std::string::npos) msg = msg.substr(pos + 2);
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) bad("'" + key + "' must be a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& key, int lo) {
  if (!j.is_number_integer()) bad("'" + key + "' must be an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1'000'000) bad("'" + key + "' out of range");
  return static_cast<int>(v);
}

std::string text_of(const json& j, const std::string& key) {
  if (!j.is_string()) bad("'" + key + "' must be a string");
  return j.get<std::string>();
}

std::string_view sign_name(SignConvention s) { return s == SignConvention::PlusC12 ? "plus_c12" : "minus_c12"; }
std::string_view source_name(ExponentSource s) { return s == ExponentSource::P ? "p" : "a"; }
std::string_view chi_name(ChiConvention c) { return c == ChiConvention::Corrected ? "corrected" : "literal"; }

VerdictKind verdict_kind(const std::string& s) {
  if (s == "Oscillatory") return VerdictKind::Oscillatory;
  if (s == "NonOscillatory") return VerdictKind::NonOscillatory;
  if (s == "Inconclusive") return VerdictKind::Inconclusive;
  bad("unknown verdict '" + s + "'");
}

void read_options(const json& j, Options& o) {
  if (!j.is_object()) bad("'options' must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "rtol") {
      o.rtol = number(v, key);
    } else if (key == "atol") {
      o.atol = number(v, key);
    } else if (key == "n_min") {
      o.n_min = integer(v, key, 1);
    } else if (key == "max_points") {
      o.max_points = integer(v, key, 2);
    } else if (key == "grid") {
      o.grid = integer(v, key, 8);
    } else if (key == "grid_per_interval") {
      o.grid_per_interval = integer(v, key, 2);
    } else if (key == "hypothesis_grid") {
      o.hypothesis_grid = integer(v, key, 2);
    } else if (key == "burn_in") {
      o.burn_in = number(v, key);
      if (o.burn_in < 0.0 || o.burn_in >= 1.0) bad("'burn_in' must lie in [0, 1)");
    } else if (key == "log_clock") {
      if (!v.is_boolean()) bad("'log_clock' must be true or false");
      o.log_clock = v.get<bool>();
    } else if (key == "sign_convention") {
      const std::string s = text_of(v, key);
      if (s == "plus_c12") {
        o.sign = SignConvention::PlusC12;
      } else if (s == "minus_c12") {
        o.sign = SignConvention::MinusC12;
      } else {
        bad("sign_convention must be plus_c12 or minus_c12");
      }
    } else if (key == "exponent_source") {
      const std::string s = text_of(v, key);
      if (s == "p") {
        o.exponent_source = ExponentSource::P;
      } else if (s == "a") {
        o.exponent_source = ExponentSource::A;
      } else {
        bad("exponent_source must be a or p");
      }
    } else if (key == "chi_convention") {
      const std::string s = text_of(v, key);
      if (s == "corrected") {
        o.chi = ChiConvention::Corrected;
      } else if (s == "literal") {
        o.chi = ChiConvention::Literal;
      } else {
        bad("chi_convention must be corrected or literal");
      }
    } else if (key == "F_override") {
      if (v.is_null()) {
        o.F_override.reset();
      } else if (v.is_string() && v.get<std::string>() == sqrt2_identity_override().label) {
        o.F_override = sqrt2_identity_override();
      } else {
        bad("F_override must be \"" + sqrt2_identity_override().label + "\" or null");
      }
    } else if (key == "eps_zero" || key == "ε_zero") {
      o.eps_zero = number(v, key);
    } else if (key == "n_starts") {
      o.n_starts = integer(v, key, 1);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) bad("'seed' must be a nonnegative integer");
      o.seed = v.get<unsigned long long>();
    } else {
      bad("unknown option '" + key + "'");
    }
  }
  if (!(o.rtol > 0.0) || !(o.atol > 0.0)) bad("rtol and atol must be positive");
  if (!(o.eps_zero > 0.0)) bad("eps_zero must be positive");
}

json options_json(const Options& o) {
  json j;
  j["rtol"] = o.rtol;
  j["atol"] = o.atol;
  j["n_min"] = o.n_min;
  j["burn_in"] = o.burn_in;
  j["log_clock"] = o.log_clock;
  j["max_points"] = o.max_points;
  j["grid"] = o.grid;
  j["grid_per_interval"] = o.grid_per_interval;
  j["hypothesis_grid"] = o.hypothesis_grid;
  j["sign_convention"] = sign_name(o.sign);
  j["exponent_source"] = source_name(o.exponent_source);
  j["chi_convention"] = chi_name(o.chi);
  j["F_override"] = o.F_override ? json(o.F_override->label) : json(nullptr);
  j["eps_zero"] = o.eps_zero;
  j["n_starts"] = o.n_starts;
  j["seed"] = o.seed;
  return j;
}

json scenario_object(const ScenarioFile& f) {
  json j;
  j["name"] = f.name;
  if (!f.family.empty()) {
    j["family"] = f.family;
  } else {
    j["table_csv_path"] = f.table_csv_path;
  }
  json params = json::object();
  for (const auto& [k, v] : f.params) params[k] = v;
  j["params"] = params;
  j["window"] = {f.window.t0, f.window.t1};
  j["options"] = options_json(f.options);
  if (f.expected) j["expected"] = to_string(*f.expected);
  return j;
}

json verdict_json(const Verdict& v) {
  json j;
  j["kind"] = to_string(v.kind);
  j["theorem"] = v.theorem;
  j["window"] = {v.window.t0, v.window.t1};
  j["notes"] = v.notes;
  return j;
}

json report_object(const CriterionReport& r) {
  json j;
  j["criterion"] = r.criterion;
  j["verdict"] = verdict_json(r.verdict);
  j["applicable"] = r.applicable();
  json hyps = json::array();
  for (const Hypothesis& h : r.applicability) hyps.push_back({{"name", h.name}, {"held", h.held}, {"detail", h.detail}});
  j["applicability"] = hyps;
  json wit = json::object();
  for (const auto& [k, v] : r.witnesses) wit[k] = v;
  j["witnesses"] = wit;
  return j;
}

const char* kHarmonic = R"({
  "name": "harmonic",
  "family": "harmonic",
  "params": {},
  "window": [0, 50],
  "options": {},
  "expected": "Oscillatory"
})";

const char* kZero = R"({
  "name": "zero",
  "family": "zero",
  "params": {},
  "window": [0, 10],
  "options": {},
  "expected": "NonOscillatory"
})";

const char* kEuler = R"({
  "name": "euler",
  "family": "euler",
  "params": {"c": 2.0},
  "window": [1, 10000],
  "options": {"n_min": 2, "burn_in": 0.25, "log_clock": true},
  "expected": "Oscillatory"
})";

const char* kExample31 = R"({
  "name": "example_3_1",
  "family": "vector_schrodinger",
  "params": {"p1": 1, "p2": 1, "lambda1": 1, "lambda2": 1.4142135623730951, "theta1": 0, "theta2": 0},
  "window": [0, 200],
  "options": {"n_min": 10},
  "expected": "Oscillatory"
})";

const char* kExample31Short = R"({
  "name": "example_3_1_short",
  "family": "vector_schrodinger",
  "params": {"p1": 1, "p2": 1, "lambda1": 1, "lambda2": 1.4142135623730951, "theta1": 0, "theta2": 0},
  "window": [0, 1],
  "options": {"n_min": 10},
  "expected": "Oscillatory"
})";

const char* kZeroDrift = R"({
  "name": "example_3_2_zero_drift",
  "family": "ones_B_zero_drift",
  "params": {"a": 0.5, "b": 0.5, "sigma": -1},
  "window": [0, 100],
  "options": {"F_override": "paper_sqrt2_identity"},
  "expected": "Oscillatory"
})";

const char* kEulerA05 = R"({
  "name": "example_3_2_euler_a05",
  "family": "ones_B_euler",
  "params": {"alpha": 0.5},
  "window": [1, 1000],
  "options": {"F_override": null},
  "expected": "NonOscillatory"
})";

const char* kAlpha = R"({
  "name": "example_3_2_alpha",
  "family": "ones_B_alpha_conditions",
  "params": {"r0": 1, "r1": 0.01, "sigma": 0},
  "window": [0, 100],
  "options": {},
  "expected": "NonOscillatory"
})";

}  // namespace

std::string_view tool_version() { return HAMOSC_VERSION; }

ScenarioFile parse_scenario(std::string_view text, const std::string& base_dir) {
  json doc = parse_text(text);
  if (doc.is_object() && doc.contains("scenario") && doc.contains("reports")) doc = doc["scenario"];
  if (!doc.is_object()) bad("scenario document must be a JSON object");
  ScenarioFile f;
  f.base_dir = base_dir;
  bool has_window = false;
  for (const auto& [key, v] : doc.items()) {
    if (key == "name") {
      f.name = text_of(v, key);
    } else if (key == "family") {
      f.family = text_of(v, key);
      if (f.family.empty()) bad("'family' must not be empty");
    } else if (key == "table_csv_path") {
      f.table_csv_path = text_of(v, key);
      if (f.table_csv_path.empty()) bad("'table_csv_path' must not be empty");
    } else if (key == "params") {
      if (!v.is_object()) bad("'params' must be an object");
      for (const auto& [pk, pv] : v.items()) f.params[pk] = number(pv, "params." + pk);
    } else if (key == "window") {
      if (!v.is_array() || v.size() != 2) bad("'window' must be [t0, T]");
      f.window = {number(v[0], "window[0]"), number(v[1], "window[1]")};
      has_window = true;
    } else if (key == "options") {
      read_options(v, f.options);
    } else if (key == "expected") {
      f.expected = verdict_kind(text_of(v, key));
    } else {
      bad("unknown key '" + key + "'");
    }
  }
  if (f.family.empty() == f.table_csv_path.empty()) bad("exactly one of 'family' and 'table_csv_path' is required");
  if (!has_window) bad("'window' is required");
  if (!std::isfinite(f.window.t0) || !std::isfinite(f.window.t1)) bad("window must be finite");
  if (!(f.window.t1 > f.window.t0)) bad("window needs T > t0");
  if (f.name.empty()) f.name = f.family.empty() ? fs::path(f.table_csv_path).stem().string() : f.family;
  return f;
}

ScenarioFile load_scenario(const std::string& path_or_name) {
  std::error_code ec;
  if (!fs::is_regular_file(path_or_name, ec)) {
    for (const CatalogueEntry& e : catalogue()) {
      if (e.name == path_or_name) return parse_scenario(e.json);
    }
    bad("no such file or built-in scenario: " + path_or_name);
  }
  std::ifstream in(path_or_name, std::ios::binary);
  if (!in) bad("cannot read " + path_or_name);
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path dir = fs::path(path_or_name).parent_path();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

Scenario build_scenario(const ScenarioFile& f) {
  Scenario s;
  if (!f.family.empty()) {
    s = make_family(f.family, f.params);
  } else {
    if (!f.params.empty()) bad("'params' is only meaningful with 'family'");
    fs::path p(f.table_csv_path);
    if (p.is_relative()) p = fs::path(f.base_dir) / p;
    s = from_table(read_coeff_csv_file(p.string()), f.name);
  }
  s.name = f.name;
  if (!s.contains(f.window.t0) || !s.contains(f.window.t1)) {
    bad("window [" + format_double(f.window.t0) + ", " + format_double(f.window.t1) +
        "] leaves the coefficient domain starting at " + format_double(s.t0));
  }
  validate_scenario(s, f.window);
  return s;
}

std::string scenario_json(const ScenarioFile& f, int indent) { return scenario_object(f).dump(indent) + "\n"; }

std::string report_json(const ScenarioFile& f, const AnalysisResult& r) {
  json doc;
  doc["tool"] = {{"name", "hamosc"}, {"version", tool_version()}};
  doc["scenario"] = scenario_object(f);
  const Options& o = f.options;
  doc["settings"] = {
      {"grid", o.grid},
      {"grid_per_interval", o.grid_per_interval},
      {"hypothesis_grid", o.hypothesis_grid},
      {"simulation_grid", 2000},
      {"tolerances",
       {{"rtol", o.rtol},
        {"atol", o.atol},
        {"eps_zero", o.eps_zero},
        {"hermitian_rel", 1e-10},
        {"singular_rel", 1e-12},
        {"positivity_rel", 1e-9},
        {"condition_rel", 1e-10},
        {"sandwich_residual_rel", 1e-8},
        {"conjoined_defect", 1e-8},
        {"riccati_escape", 1e8},
        {"quadrature", 1e-12}}},
  };
  json reports = json::array();
  for (const CriterionReport& c : r.reports) reports.push_back(report_object(c));
  doc["reports"] = reports;
  doc["overall"] = verdict_json(r.overall);
  doc["conflict"] = r.conflict;
  return doc.dump(2) + "\n";
}

const std::vector<CatalogueEntry>& catalogue() {
  static const std::vector<CatalogueEntry> entries{
      {"harmonic", "sanity family: A = 0, B = I, C = -I", kHarmonic},
      {"zero", "sanity family: A = B = C = 0", kZero},
      {"euler", "Euler equation phi'' + (c/t^2) phi = 0 in both components", kEuler},
      {"example_3_1", "Example 3.1, Eq. (3.28)", kExample31},
      {"example_3_1_short", "Example 3.1, Eq. (3.28) on a deliberately short window", kExample31Short},
      {"example_3_2_zero_drift", "Example 3.2, Eqs. (3.29), (3.32)", kZeroDrift},
      {"example_3_2_euler_a05", "Example 3.2, Eqs. (3.29), (3.33), alpha = 0.5", kEulerA05},
      {"example_3_2_alpha", "Example 3.2, Eq. (3.29) with conditions on the row sums of A", kAlpha},
  };
  return entries;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_det_csv(std::ostream& out, const HamiltonianRun& run, const Window& w, const std::vector<double>& events,
                   int samples) {
  std::vector<double> ts;
  ts.reserve(samples + 1 + events.size());
  const double t_end = std::min(w.t1, run.traj.t_last());
  for (int i = 0; i <= samples; ++i) {
    const double t = i == samples ? w.t1 : w.t0 + w.length() * i / samples;
    if (t <= t_end) ts.push_back(t);
  }
  for (double t : events) {
    if (t >= w.t0 && t <= t_end) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  out << "t,re_det,im_det,abs_det,conjoined_defect,log_scale\n";
  for (double t : ts) {
    const Mat2 phi = run.phi(t), psi = run.psi(t);
    const Cx d = phi.det();
    out << format_double(t) << ',' << format_double(d.real()) << ',' << format_double(d.imag()) << ','
        << format_double(std::abs(d)) << ',' << format_double(conjoined_defect(phi, psi)) << ','
        << format_double(run.log_scale_at(t)) << '\n';
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) bad("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) bad("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    bad("cannot rename onto " + path);
  }
}

}  // namespace hamosc::io
