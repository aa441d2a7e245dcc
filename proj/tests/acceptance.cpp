#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "hamosc/criteria.hpp"

using namespace hamosc;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_conflicts = 0;
int g_analyses = 0;
double g_max_defect = 0.0;

AnalysisResult tracked(const Scenario& s, const Window& w, const Options& o = {}) {
  AnalysisResult r = run_criteria(s, w, o);
  ++g_analyses;
  if (r.conflict) ++g_conflicts;
  return r;
}

HamiltonianRun tracked_run(const Scenario& s, const Mat2& phi0, const Mat2& psi0, const Window& w) {
  HamiltonianRun run = solve_hamiltonian(s, phi0, psi0, w);
  g_max_defect = std::max(g_max_defect, run.max_defect_ratio);
  return run;
}

CrossValidation tracked_cv(const Scenario& s, const Window& w, const Verdict& v, const Options& o) {
  CrossValidation cv = cross_validate(s, w, v, o);
  for (const StartRecord& r : cv.starts) g_max_defect = std::max(g_max_defect, r.max_defect_ratio);
  return cv;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

ScalarFn constant(double v) {
  return [v](double) { return v; };
}

Outcome harmonic_ground_truth() {
  const Scenario s = make_family("harmonic", {});
  const Window w{0.0, 100.0};
  const HamiltonianRun run = tracked_run(s, Mat2::identity(), Mat2::zero(), w);
  const auto zeros = detect_det_zeros(run);
  Outcome o;
  double worst = 0.0;
  o.pass = zeros.size() == 32;
  for (std::size_t k = 0; k < std::min<std::size_t>(zeros.size(), 32); ++k) {
    worst = std::max(worst, std::abs(zeros[k].time - (kPi / 2 + k * kPi)));
  }
  o.pass = o.pass && worst <= 1e-6;
  const VerdictKind a = thm31(s, w).verdict.kind, b = cor31(s, w).verdict.kind;
  o.pass = o.pass && a == VerdictKind::Oscillatory && b == VerdictKind::Oscillatory;
  tracked(s, w);
  o.detail = std::to_string(zeros.size()) + " zeros, max error " + fmt(worst) + ", 3.1 " +
             std::string(to_string(a)) + ", C3.1 " + std::string(to_string(b));
  return o;
}

Outcome vector_schrodinger_reproduction() {
  const Scenario s = make_family("vector_schrodinger", {{"p1", 1}, {"p2", 1}, {"lambda1", 1},
                                                        {"lambda2", std::numbers::sqrt2}, {"theta1", 0},
                                                        {"theta2", 0}});
  const Window w{0.0, 200.0};
  Options opts;
  opts.n_min = 10;
  const CriterionReport r = thm31(s, w, opts);
  Outcome o;
  const auto& t = r.witnesses.at("t");
  const auto& chi1 = r.witnesses.at("chi1");
  double chi_err = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    chi_err = std::max(chi_err, std::abs(chi1[i] - (std::sin(t[i]) + std::sin(std::numbers::sqrt2 * t[i]))));
  }
  const bool first_scalar = r.verdict.notes.find("scalar system 1: oscillatory") != std::string::npos;
  o.pass = r.verdict.kind == VerdictKind::Oscillatory && first_scalar && chi_err <= 1e-12;

  const AnalysisResult a = tracked(s, w, opts);
  const CrossValidation cv = tracked_cv(s, w, a.overall, opts);
  // Frozen from the simulation with seed 42.
  const std::vector<std::size_t> frozen{37, 37, 37, 37, 37};
  std::string counts;
  bool match = cv.starts.size() == frozen.size();
  for (std::size_t i = 0; i < cv.starts.size(); ++i) {
    counts += (i ? "/" : "") + std::to_string(cv.starts[i].zeros.size());
    match = match && cv.starts[i].zeros.size() == frozen[i] && cv.starts[i].zeros.size() >= 5;
  }
  o.pass = o.pass && cv.simulation == SimOutcome::Oscillatory && match && cv.consistent;
  o.detail = "3.1 " + std::string(to_string(r.verdict.kind)) + " (chi1 = mu within " + fmt(chi_err) + "), " +
             std::string(to_string(cv.simulation)) + ", zeros per start " + counts;
  return o;
}

Outcome zero_drift_oscillatory() {
  const Scenario s = make_family("ones_B_zero_drift", {{"a", 0.5}, {"b", 0.5}, {"sigma", -1.0}});
  const Window w{0.0, 100.0};
  Options opts;
  opts.F_override = sqrt2_identity_override();
  const CriterionReport r = cor31(s, w, opts);
  const AnalysisResult a = tracked(s, w, opts);
  const CrossValidation cv = tracked_cv(s, w, a.overall, opts);
  double worst = 0.0;
  std::size_t fewest = std::numeric_limits<std::size_t>::max();
  for (const StartRecord& st : cv.starts) {
    fewest = std::min(fewest, st.zeros.size());
    for (std::size_t k = 1; k < st.zeros.size(); ++k) {
      worst = std::max(worst, std::abs(st.zeros[k].time - st.zeros[k - 1].time - kPi));
    }
  }
  Outcome o;
  o.pass = r.verdict.kind == VerdictKind::Oscillatory && cv.simulation == SimOutcome::Oscillatory && fewest >= 30 &&
           worst <= 1e-3;
  o.detail = "C3.1 " + std::string(to_string(r.verdict.kind)) + " with F=sqrt2 I, " +
             std::string(to_string(cv.simulation)) + ", >= " + std::to_string(fewest) +
             " zeros per start, max |spacing - pi| " + fmt(worst);
  return o;
}

Outcome ones_b_euler_nonoscillatory() {
  const Scenario s = make_family("ones_B_euler", {{"alpha", 0.5}});
  const Window w{1.0, 1000.0};
  std::string combos;
  bool certified = false;
  for (SignConvention sign : {SignConvention::PlusC12, SignConvention::MinusC12}) {
    for (ExponentSource src : {ExponentSource::P, ExponentSource::A}) {
      Options opts;
      opts.sign = sign;
      opts.exponent_source = src;
      const VerdictKind k = thm34(s, w, opts).verdict.kind;
      certified = certified || k == VerdictKind::NonOscillatory;
      combos += std::string(sign == SignConvention::PlusC12 ? "plus" : "minus") + "/" +
                (src == ExponentSource::P ? "p" : "a") + "=" + std::string(to_string(k)) + " ";
    }
  }
  const AnalysisResult a = tracked(s, w);
  const CrossValidation cv = tracked_cv(s, w, a.overall, {});
  // Frozen: det Phi starts at 1 and grows for every start.
  const std::vector<double> frozen{1.0, 1.0, 1.0, 1.0, 1.0};
  bool match = cv.starts.size() == frozen.size();
  std::string mins;
  for (std::size_t i = 0; i < cv.starts.size(); ++i) {
    mins += (i ? "/" : "") + fmt(cv.starts[i].min_abs_det);
    match = match && cv.starts[i].min_abs_det > 0.0 && cv.starts[i].zeros.empty() &&
            std::abs(cv.starts[i].min_abs_det - frozen[i]) <= 1e-9;
  }
  Outcome o;
  o.pass = certified && match && cv.simulation == SimOutcome::NonOscillatory;
  o.detail = "3.4 " + combos + "; min |det Phi| " + mins;
  return o;
}

Outcome euler_threshold() {
  ScalarTestOptions so;
  so.n_min = 2;
  so.burn_in = 0.25;
  so.log_clock = true;
  const Window w{1.0, 1e4};
  Outcome o;
  double worst_ratio = 0.0;
  for (double c : {0.2, 0.25, 1.0, 2.5}) {
    const ScalarSystem sys{constant(0), constant(1), [c](double t) { return -c / (t * t); }, constant(0)};
    const ScalarOscResult r = scalar_osc_test(sys, w, so);
    const ScalarVerdict want = c <= 0.25 ? ScalarVerdict::NonOscillatory : ScalarVerdict::Oscillatory;
    o.pass = o.pass && r.verdict == want;
    o.detail += "c=" + fmt(c) + " " + std::string(to_string(r.verdict)) + ", ";
    if (c == 2.5) {
      const double ratio = std::exp(kPi / 1.5);
      for (const auto* zs : {&r.zeros_a, &r.zeros_b}) {
        o.pass = o.pass && zs->size() >= 3;
        for (std::size_t k = 1; k < zs->size(); ++k) {
          worst_ratio = std::max(worst_ratio, std::abs((*zs)[k] / (*zs)[k - 1] / ratio - 1.0));
        }
      }
    }
  }
  o.pass = o.pass && worst_ratio <= 1e-3;
  o.detail += "zero ratio error " + fmt(worst_ratio);
  return o;
}

Outcome comparison_oracle_campaign() {
  const Window w{0.0, 3.0};
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
  int ok = 0;
  for (int k = 0; k < 100; ++k) {
    const double f0 = pos(rng), f2 = pos(rng), g0 = u(rng), g1 = u(rng), h0 = u(rng), h1 = u(rng), gap = pos(rng);
    const double y1 = u(rng), y0 = y1 + pos(rng);
    const ScalarFn f = [=](double t) { return f0 + f2 * t * t; };
    const ScalarFn g = [=](double t) { return g0 + g1 * t; };
    const ScalarFn hh1 = [=](double t) { return h0 + h1 * std::sin(t); };
    const ScalarFn hh = [=](double t) { return hh1(t) - gap * (1.0 + std::cos(t)); };
    if (thm21_compare_oracle(f, g, hh, hh1, y1, y0, w)) ++ok;
  }
  return {ok == 100, std::to_string(ok) + "/100 instances ordered"};
}

Outcome condition_checker() {
  const Window w{0.0, 2.0 * kPi};
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 1.0);
  int neg_ok = 0, pos_ok = 0;
  for (int k = 0; k < 20; ++k) {
    const double a = u(rng), b = u(rng), c = pos(rng), d = u(rng);
    const ScalarFn g = [=](double t) { return a + b * std::cos(t); };
    const Kernel nonpos{g, [=](double t) { return -c * (1.0 + std::sin(d * t)); }};
    if (thm22_check(nonpos, {w.t0}, w).holds) ++neg_ok;
    const Kernel positive{g, [=](double t) { return c + 0.5 * c * (1.0 + std::sin(d * t)); }};
    const Thm22Result r = thm22_check(positive, {w.t0, w.t0 + w.length() / 2}, w);
    if (!r.holds && r.first_violation && r.first_violation->first == 0) ++pos_ok;
  }
  return {neg_ok == 20 && pos_ok == 20,
          "h <= 0: " + std::to_string(neg_ok) + "/20 hold; h >= c > 0: " + std::to_string(pos_ok) +
              "/20 fail in the first subinterval"};
}

Outcome bound_campaign() {
  std::mt19937_64 rng(99);
  int held = 0, nontrivial = 0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Scenario s = gen::random_diag(rng, k % 2 == 1);
    const Lemma22Result r = lemma22_check(s, {0.0, 3.0});
    if (r.held) ++held;
    if (r.checked_until > 0.0) ++nontrivial;
    worst = std::max(worst, r.worst_excess);
  }
  return {held == 50, std::to_string(held) + "/50 within bounds (" + std::to_string(nontrivial) +
                          " with a nonempty checked stretch), worst relative excess " + fmt(worst)};
}

Outcome algebra() {
  std::mt19937_64 rng(7);
  double trace_worst = 0.0, sqrt_worst = 0.0, sandwich_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat2 a = gen::random_mat(rng), b = gen::random_mat(rng);
    trace_worst = std::max(trace_worst, std::abs((a * b).trace() - (b * a).trace()) / (kEps * a.norm() * b.norm()));
    const Mat2 g = gen::random_mat(rng, 3.0);
    const Mat2 psd = g * g.adjoint();
    const Mat2 r = sqrt_psd(psd);
    sqrt_worst = std::max(sqrt_worst, (r * r - psd).norm() / (1.0 + psd.norm()));
    if (try_inverse(a)) sandwich_worst = std::max(sandwich_worst, solve_sandwich(a, b).residual);
  }
  return {trace_worst <= 4.0 && sqrt_worst <= 1e-10 && sandwich_worst <= 1e-12,
          "trace commutator " + fmt(trace_worst) + " eps, sqrt round trip " + fmt(sqrt_worst) +
              ", sandwich residual " + fmt(sandwich_worst)};
}

Outcome correspondence() {
  std::mt19937_64 rng(2024);
  double ric_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Mat2 g = gen::random_mat(rng, 0.7);
    const Scenario s =
        make_constant("random", {gen::random_mat(rng, 0.7), g * g.adjoint(), gen::random_hermitian(rng, 0.7)});
    const Mat2 z0 = gen::random_hermitian(rng, 0.7);
    const Window w{0.0, 2.0};
    const RiccatiRun ric = solve_matrix_riccati(s, z0, w);
    const HamiltonianRun ham = tracked_run(s, Mat2::identity(), z0, w);
    for (std::size_t k = 0; k < ric.traj.times.size(); ++k) {
      const Mat2 z = riccati_z(ric.traj.states[k]);
      if (z.norm() > 1e3) break;
      const double t = ric.traj.times[k];
      const Mat2 phi = ham.phi(t), psi = ham.psi(t);
      ric_worst = std::max(ric_worst, (psi - z * phi).norm() / (1.0 + psi.norm()));
    }
  }

  std::mt19937_64 rng2(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double sub_worst = 0.0;
  int compared = 0;
  for (int k = 0; k < 10; ++k) {
    const Scenario s = gen::random_diag(rng2, true);
    const Mat2 z0{1.0 + u(rng2), Cx{u(rng2), u(rng2)}, 0.0, 1.0 + u(rng2)};
    const Mat2 z{z0.e11, z0.e12, std::conj(z0.e12), z0.e22};
    const Window w{0.0, 1.5};
    const RiccatiRun full = solve_matrix_riccati(s, z, w);
    if (full.blowup) continue;
    ++compared;
    const RatioFns rf = ratio_fns(s);
    const Trajectory sub = subsystem_solve(s, Subsystem::Sys28, z.e11.real(), z.e12 + rf.r2(0.0), w, z.e22.real());
    for (std::size_t i = 0; i < full.traj.times.size(); ++i) {
      const double t = full.traj.times[i];
      const Mat2 zt = riccati_z(full.traj.states[i]);
      const State y = sub.dense_eval(t);
      sub_worst = std::max({sub_worst, std::abs(y[0] - zt.e11.real()), std::abs(Cx{y[1], y[2]} - (zt.e12 + rf.r2(t))),
                            std::abs(y[3] - zt.e22.real())});
    }
  }
  return {ric_worst <= 1e-6 && sub_worst <= 1e-6 && compared >= 5 && g_max_defect <= 1e-8,
          "Psi - Z Phi " + fmt(ric_worst) + ", subsystem vs full " + fmt(sub_worst) + " (" +
              std::to_string(compared) + " runs), conjoined defect " + fmt(g_max_defect)};
}

Outcome no_conflict() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 2.0);
  for (int k = 0; k < 200; ++k) {
    Scenario s;
    switch (k % 4) {
      case 0:
        s = make_family("diag_B", {{"b1", pos(rng)}, {"b2", pos(rng)}, {"c11", 2 * u(rng)}, {"c22", 2 * u(rng)},
                                   {"c12_re", 0.3 * u(rng)}, {"a11_re", 0.5 * u(rng)}, {"a22_re", 0.5 * u(rng)},
                                   {"a12_re", 0.2 * u(rng)}, {"a21_im", 0.2 * u(rng)}, {"c11_t", 0.05 * u(rng)}});
        break;
      case 1:
        s = make_family("diag_B", {{"b1", pos(rng)}, {"b2", -pos(rng)}, {"c11", u(rng)}, {"c22", u(rng)},
                                   {"a11_re", 0.3 * u(rng)}, {"a22_re", 0.3 * u(rng)}});
        break;
      case 2:
        s = make_family("ones_B_zero_drift", {{"a", u(rng)}, {"b", u(rng)}, {"sigma", 2 * u(rng)}, {"gamma", u(rng)}});
        break;
      default:
        s = make_family("ones_B_alpha_conditions", {{"r0", pos(rng)}, {"r1", 0.1 * pos(rng)}, {"sigma", u(rng)}});
    }
    tracked(s, {0.0, 10.0});
  }
  return {g_conflicts == 0, std::to_string(g_conflicts) + " conflicts in " + std::to_string(g_analyses) + " analyses"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"harmonic ground truth", harmonic_ground_truth},
      {"vector Schrodinger example", vector_schrodinger_reproduction},
      {"B = ones, zero drift, oscillatory", zero_drift_oscillatory},
      {"B = ones, Euler drift, nonoscillatory", ones_b_euler_nonoscillatory},
      {"Euler threshold", euler_threshold},
      {"comparison oracle campaign", comparison_oracle_campaign},
      {"integral condition checker", condition_checker},
      {"diagonal bound campaign", bound_campaign},
      {"2x2 algebra", algebra},
      {"correspondence invariants", correspondence},
      {"no conflicting verdicts", no_conflict},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
