#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hamosc/coefsys.hpp"
#include "hamosc/error.hpp"
#include "hamosc/odeint.hpp"
#include "hamosc/riccati.hpp"

namespace hamosc {

// ---------------------------------------------------------------------------
// Scalar systems phi' = f11 phi + f12 psi, psi' = f21 phi + f22 psi

struct ScalarSystem {
  ScalarFn f11, f12, f21, f22;
};

enum class ScalarVerdict { Oscillatory, NonOscillatory, Undecided };

struct ScalarTestOptions {
  int n_min = 5;
  /// Fraction of the window (on the chosen clock) ignored by the
  /// nonoscillation test.
  double burn_in = 0.1;
  /// Measure window fractions in log t instead of t (needs t0 > 0).
  bool log_clock = false;
  double rtol = 1e-10;
  double atol = 1e-12;
};

struct ScalarOscResult {
  ScalarVerdict verdict = ScalarVerdict::Undecided;
  /// Zeros of phi for the starts (phi, psi) = (1, 0) and (0, 1).
  std::vector<double> zeros_a, zeros_b;
  /// Escape time of y = psi / phi from y(t0) = 0, if it escapes.
  std::optional<double> riccati_escape;
};

ScalarOscResult scalar_osc_test(const ScalarSystem& sys, const Window& w, const ScalarTestOptions& opts = {});

// ---------------------------------------------------------------------------
// Reports

enum class VerdictKind { Oscillatory, NonOscillatory, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::string theorem;
  Window window;
  std::string notes;
};

struct Hypothesis {
  std::string name;
  bool held = true;
  std::string detail;
};

struct CriterionReport {
  /// "3.1", "3.2", "3.3", "C3.1" or "3.4".
  std::string criterion;
  Verdict verdict;
  std::vector<Hypothesis> applicability;
  std::map<std::string, std::vector<double>> witnesses;

  bool applicable() const;
};

enum class ExponentSource { A, P };

struct FOverride {
  std::string label;
  std::function<Mat2(double)> F;
};

/// F = sqrt(2) I in place of the minimum-norm solution, as the B = ones
/// scenarios are usually written.
FOverride sqrt2_identity_override();

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  int n_min = 5;
  double burn_in = 0.1;
  bool log_clock = false;
  int max_points = 64;
  int grid = 1024;
  int grid_per_interval = 64;
  int hypothesis_grid = 256;
  SignConvention sign = SignConvention::PlusC12;
  ExponentSource exponent_source = ExponentSource::P;
  ChiConvention chi = ChiConvention::Corrected;
  std::optional<FOverride> F_override;
  double eps_zero = 1e-7;
  int n_starts = 5;
  unsigned long long seed = 42;

  ScalarTestOptions scalar() const { return {n_min, burn_in, log_clock, rtol, atol}; }
};

CriterionReport thm31(const Scenario& s, const Window& w, const Options& opts = {});
CriterionReport thm32(const Scenario& s, const Window& w, const Options& opts = {});
CriterionReport thm33(const Scenario& s, const Window& w, const Options& opts = {});

// ---------------------------------------------------------------------------
// Nonnegative B: reduction through sqrt(B)

struct PsdReduction {
  std::function<Mat2(double)> sqrtB, F, P, Q;
  /// |sqrt(B) F M - M| with M = A sqrt(B) - sqrt(B)'.
  std::function<double(double)> residual;
  std::string F_label;
  double max_residual = 0.0;
  double max_residual_time = 0.0;
  double max_q_asymmetry = 0.0;
  bool residual_ok = true;
};

/// Samples the residual on `samples + 1` points. Throws Error(NotPSD) when
/// the scenario is not tagged B >= 0.
PsdReduction psd_reduce(const Scenario& s, const Window& w, const std::optional<FOverride>& F_override,
                        int samples = 256);

CriterionReport cor31(const Scenario& s, const Window& w, const Options& opts = {});
CriterionReport thm34(const Scenario& s, const Window& w, const Options& opts = {});

/// chi~_3 and chi~_4 of the reduced system on a window.
struct ReducedChi34 {
  std::function<double(double)> chi3, chi4;
};
ReducedChi34 reduced_chi34(const PsdReduction& red, const Window& w, SignConvention sign);

// ---------------------------------------------------------------------------
// Aggregation

struct AnalysisResult {
  std::vector<CriterionReport> reports;
  Verdict overall;
  bool conflict = false;
};

/// Runs 3.1, 3.2, 3.3, C3.1, 3.4 in that order; the overall verdict is the
/// first one that is not Inconclusive.
AnalysisResult run_criteria(const Scenario& s, const Window& w, const Options& opts = {});

class CriteriaConflictError : public Error {
 public:
  explicit CriteriaConflictError(AnalysisResult r);
  const AnalysisResult& result() const noexcept { return result_; }

 private:
  AnalysisResult result_;
};

/// run_criteria, throwing CriteriaConflictError when one criterion says
/// Oscillatory and another NonOscillatory.
AnalysisResult analyze(const Scenario& s, const Window& w, const Options& opts = {});

enum class SimOutcome { Oscillatory, NonOscillatory, Undecided };

struct StartRecord {
  std::string label;
  std::vector<ZeroRecord> zeros;
  double min_abs_det = 0.0;
  double max_defect_ratio = 0.0;
};

struct CrossValidation {
  std::vector<StartRecord> starts;
  SimOutcome simulation = SimOutcome::Undecided;
  Verdict analysis;
  bool consistent = true;
  std::string hint;
};

/// Zeros of det Phi and the minimum of |det Phi| (nodes plus 2000 grid
/// points, evaluated through the accumulated log scale).
StartRecord observe_start(const HamiltonianRun& run, const Window& w, double eps_zero);

/// Conjoined starts (I, 0), (I, I) and (I, G G*) with random G.
std::vector<std::pair<Mat2, Mat2>> conjoined_starts(int n_starts, unsigned long long seed);

/// "(I,0)", "(I,I)", "(I,GG*) #k".
std::string start_label(std::size_t i);

CrossValidation cross_validate(const Scenario& s, const Window& w, const Options& opts = {});
/// Same, against an analysis that was already run.
CrossValidation cross_validate(const Scenario& s, const Window& w, const Verdict& analysis, const Options& opts);

std::string_view to_string(VerdictKind k);
std::string_view to_string(ScalarVerdict k);
std::string_view to_string(SimOutcome k);

}  // namespace hamosc
