#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hamosc/criteria.hpp"
#include "hamosc/io.hpp"

using namespace hamosc;

namespace {

constexpr int kOk = 0;
constexpr int kFault = 1;
constexpr int kInvalid = 2;
constexpr int kConflict = 3;
constexpr int kMismatch = 4;

struct Loaded {
  io::ScenarioFile file;
  Scenario scenario;
};

Loaded load(const std::string& path) {
  Loaded l{io::load_scenario(path), {}};
  if (const char* env = std::getenv("HAMOSC_SEED")) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') throw Error(ErrorCode::InvalidInput, "HAMOSC_SEED must be an unsigned integer");
    l.file.options.seed = seed;
  }
  l.scenario = io::build_scenario(l.file);
  return l;
}

std::string csv_path_for(const std::string& base, std::size_t start) {
  if (start == 0) return base;
  const std::filesystem::path p(base);
  std::filesystem::path out = p.parent_path() / p.stem();
  out += ".start" + std::to_string(start);
  out += p.extension();
  return out.string();
}

int cmd_analyze(const Loaded& l, const std::string& out) {
  const AnalysisResult r = run_criteria(l.scenario, l.file.window, l.file.options);
  const std::string doc = io::report_json(l.file, r);
  if (out.empty()) {
    std::cout << doc;
  } else {
    io::write_atomic(out, doc);
    std::cout << l.file.name << ": " << to_string(r.overall.kind);
    if (!r.overall.theorem.empty()) std::cout << " (" << r.overall.theorem << ")";
    std::cout << "\n";
  }
  if (r.conflict) {
    std::cerr << "CriteriaConflict: criteria disagree on " << l.file.name << "\n";
    return kConflict;
  }
  return kOk;
}

int cmd_simulate(const Loaded& l, int n_starts, const std::string& csv) {
  const Window& w = l.file.window;
  const Options& o = l.file.options;
  const auto starts = conjoined_starts(n_starts, o.seed);
  std::cout << "scenario " << l.file.name << " window [" << io::format_double(w.t0) << ", " << io::format_double(w.t1)
            << "]\n";
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const HamiltonianRun run = solve_hamiltonian(l.scenario, starts[i].first, starts[i].second, w, {o.rtol, o.atol});
    const StartRecord rec = observe_start(run, w, o.eps_zero);
    std::cout << "start " << start_label(i) << ": " << rec.zeros.size() << " zeros, min |det Phi| "
              << io::format_double(rec.min_abs_det) << ", max defect ratio "
              << io::format_double(rec.max_defect_ratio) << "\n";
    std::vector<double> events;
    for (const ZeroRecord& z : rec.zeros) {
      std::cout << "  zero t=" << io::format_double(z.time) << " residual=" << io::format_double(z.residual) << " "
                << (z.kind == ZeroKind::SignChange ? "sign_change" : "modulus_dip") << "\n";
      events.push_back(z.time);
    }
    if (!csv.empty()) {
      std::ostringstream ss;
      io::write_det_csv(ss, run, w, events);
      io::write_atomic(csv_path_for(csv, i), ss.str());
    }
  }
  return kOk;
}

std::string agreement(VerdictKind v, SimOutcome sim) {
  if (v == VerdictKind::Inconclusive || sim == SimOutcome::Undecided) return "-";
  const bool same = (v == VerdictKind::Oscillatory) == (sim == SimOutcome::Oscillatory);
  return same ? "consistent" : "MISMATCH";
}

int cmd_verify(const Loaded& l) {
  const Window& w = l.file.window;
  const AnalysisResult r = run_criteria(l.scenario, w, l.file.options);
  Verdict target = r.overall;
  if (target.kind == VerdictKind::Inconclusive && l.file.expected) {
    target = {*l.file.expected, "expected", w, "analysis inconclusive; compared against the catalogue answer"};
  }
  const CrossValidation cv = cross_validate(l.scenario, w, target, l.file.options);
  std::printf("%-10s %-24s %-20s %s\n", "criterion", "verdict", "simulation", "agreement");
  const std::string sim(to_string(cv.simulation));
  for (const CriterionReport& c : r.reports) {
    std::printf("%-10s %-24s %-20s %s\n", c.criterion.c_str(), std::string(to_string(c.verdict.kind)).c_str(),
                sim.c_str(), agreement(c.verdict.kind, cv.simulation).c_str());
  }
  std::string overall(to_string(target.kind));
  if (!target.theorem.empty()) overall += " (" + target.theorem + ")";
  std::printf("%-10s %-24s %-20s %s\n", "overall", overall.c_str(), sim.c_str(),
              cv.consistent ? "consistent" : "MISMATCH");
  for (const StartRecord& s : cv.starts) {
    std::cout << "start " << s.label << ": " << s.zeros.size() << " zeros";
    if (!s.zeros.empty()) std::cout << ", last at " << io::format_double(s.zeros.back().time);
    std::cout << ", min |det Phi| " << io::format_double(s.min_abs_det) << "\n";
  }
  if (!cv.hint.empty()) std::cout << "hint: " << cv.hint << "\n";
  if (r.conflict) {
    std::cerr << "CriteriaConflict: criteria disagree on " << l.file.name << "\n";
    return kConflict;
  }
  return cv.consistent ? kOk : kMismatch;
}

int cmd_list() {
  std::printf("%-24s %-26s %s\n", "name", "family", "reference");
  for (const io::CatalogueEntry& e : io::catalogue()) {
    const io::ScenarioFile f = io::parse_scenario(e.json);
    std::printf("%-24s %-26s %s\n", e.name.c_str(), f.family.c_str(), e.anchor.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillation analysis of four-dimensional linear Hamiltonian systems"};
  app.set_version_flag("--version", std::string(io::tool_version()));
  app.require_subcommand(1);

  std::string scenario, out, csv;
  int starts = 0;

  auto* analyze = app.add_subcommand("analyze", "Run every criterion and write a JSON report");
  analyze->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  analyze->add_option("--out", out, "Write the report here instead of standard output");

  auto* simulate = app.add_subcommand("simulate", "Integrate conjoined solutions and print the zeros of det Phi");
  simulate->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  simulate->add_option("--csv", csv, "Write det Phi samples as CSV");
  simulate->add_option("--starts", starts, "Number of conjoined starts (default 1)")->check(CLI::Range(1, 1000));

  auto* verify = app.add_subcommand("verify", "Compare the criteria with direct simulation");
  verify->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  verify->add_option("--starts", starts, "Number of conjoined starts (default from the scenario)")
      ->check(CLI::Range(1, 1000));

  auto* list = app.add_subcommand("list", "List the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  if (list->parsed()) return cmd_list();

  Loaded l;
  try {
    l = load(scenario);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(l, out);
    if (simulate->parsed()) return cmd_simulate(l, starts > 0 ? starts : 1, csv);
    if (starts > 0) l.file.options.n_starts = starts;
    return cmd_verify(l);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFault;
  }
}
