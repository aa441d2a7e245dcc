#include "hamosc/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace hamosc {
namespace {

std::vector<double> sample_grid(const Window& w, int n) {
  std::vector<double> ts(n + 1);
  for (int i = 0; i <= n; ++i) ts[i] = i == n ? w.t1 : w.t0 + w.length() * i / n;
  return ts;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Window fraction on a linear or logarithmic clock.
struct Clock {
  Window w;
  bool log = false;

  Clock(const Window& win, bool use_log) : w(win), log(use_log) {
    if (log && !(w.t0 > 0.0)) throw Error(ErrorCode::InvalidInput, "log clock needs t0 > 0");
  }
  double operator()(double t) const {
    if (log) return std::log(t / w.t0) / std::log(w.t1 / w.t0);
    return (t - w.t0) / w.length();
  }
};

// Zeros of phi through the Pruefer angle: phi = r sin(theta),
// psi = r cos(theta). theta stays bounded where phi and psi grow
// exponentially, and phi vanishes exactly when theta crosses a multiple of pi.
std::vector<double> phi_zeros(const ScalarSystem& sys, double phi0, double psi0, const Window& w,
                              const ScalarTestOptions& o) {
  Field f = [&sys](double t, const State& y, State& d) {
    const double s = std::sin(y[0]), c = std::cos(y[0]);
    d[0] = (sys.f11(t) - sys.f22(t)) * s * c + sys.f12(t) * c * c - sys.f21(t) * s * s;
  };
  SolveOptions so;
  so.rtol = o.rtol;
  so.atol = o.atol;
  const Trajectory tr = adaptive_solve(f, {std::atan2(phi0, psi0)}, w, so);
  constexpr double pi = std::numbers::pi;
  auto branch = [](double theta) { return std::floor(theta / pi); };
  std::vector<double> zeros;
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) {
    const double a = tr.times[k], b = tr.times[k + 1];
    double ta = a, th_a = tr.states[k][0];
    for (int i = 1; i <= 8; ++i) {
      const double tb = i == 8 ? b : a + (b - a) * i / 8;
      const double th_b = i == 8 ? tr.states[k + 1][0] : tr.dense_eval(tb)[0];
      const double ka = branch(th_a), kb = branch(th_b);
      // One root per multiple of pi crossed, in time order.
      const int crossings = static_cast<int>(std::abs(kb - ka));
      for (int m = 1; m <= crossings; ++m) {
        const double level = pi * (kb > ka ? ka + m : ka - m + 1);
        double lo = ta, hi = tb;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double v = tr.dense_eval(mid)[0] - level;
          if ((v < 0.0) == (th_a - level < 0.0)) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        zeros.push_back(0.5 * (lo + hi));
      }
      ta = tb;
      th_a = th_b;
    }
  }
  std::erase_if(zeros, [&](double t) { return t <= w.t0; });
  return zeros;
}

bool recurring(const std::vector<double>& zeros, const Clock& clock, int n_min) {
  return static_cast<int>(zeros.size()) >= n_min && !zeros.empty() && clock(zeros.back()) >= 0.75;
}

bool quiet_after_burn_in(const std::vector<double>& zeros, const Clock& clock, double burn_in) {
  return std::none_of(zeros.begin(), zeros.end(), [&](double t) { return clock(t) > burn_in; });
}

CriterionReport make_report(const std::string& name, const Window& w) {
  CriterionReport r;
  r.criterion = name;
  r.verdict.theorem = name;
  r.verdict.window = w;
  return r;
}

CriterionReport& inconclusive(CriterionReport& r, const std::string& why) {
  r.verdict.kind = VerdictKind::Inconclusive;
  if (!r.verdict.notes.empty()) r.verdict.notes += "; ";
  r.verdict.notes += why;
  return r;
}

void add_note(CriterionReport& r, const std::string& note) {
  if (!r.verdict.notes.empty()) r.verdict.notes += "; ";
  r.verdict.notes += note;
}

void put_series(CriterionReport& r, const std::string& key, const std::vector<double>& ts, const ScalarFn& f) {
  std::vector<double> v(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) v[i] = f(ts[i]);
  r.witnesses[key] = std::move(v);
}

std::string jstr(int j) { return std::to_string(j); }

double coupling_tol(const Mat2& a) { return 1e-10 * (1.0 + a.norm()); }

// b_j >= 0 on the grid and both off-diagonal entries of A vanish where b_j
// does; returns the failure detail or an empty string.
std::string sign_and_coupling(const Scenario& s, const std::vector<double>& ts, int j, double sign) {
  for (double t : ts) {
    const Coeffs c = s.at(t);
    const double b = (j == 1 ? c.B.e11 : c.B.e22).real();
    const double tol = tol_pos(c.B);
    if (sign * b < -tol) return "b" + jstr(j) + " has the wrong sign at t=" + fmt(t);
    if (std::abs(b) <= tol) {
      const double ct = coupling_tol(c.A);
      if (std::abs(c.A.e12) > ct || std::abs(c.A.e21) > ct) {
        return "b" + jstr(j) + " vanishes at t=" + fmt(t) + " but a12 or a21 does not";
      }
    }
  }
  return {};
}

struct KernelOutcome {
  bool certified = false;
  bool fast_path = false;
  PartitionSearch search;
};

// Certifies the integral condition on the window: sign-definite free
// term first, then the greedy partition search.
KernelOutcome certify(const Kernel& k, const Window& w, const Options& o) {
  KernelOutcome out;
  const std::vector<double> ts = sample_grid(w, o.grid);
  if (std::all_of(ts.begin(), ts.end(), [&](double t) { return k.h(t) <= 0.0; })) {
    out.certified = true;
    out.fast_path = true;
    out.search.found = true;
    out.search.partition = {w.t0, w.t1};
    return out;
  }
  out.search = partition_search(k, w, o.max_points, o.grid, o.grid_per_interval);
  out.certified = out.search.found;
  return out;
}

void record_kernel(CriterionReport& r, int j, const KernelOutcome& k) {
  r.witnesses["partition_" + jstr(j)] = k.search.partition;
  if (k.fast_path) {
    add_note(r, "free term " + jstr(j) + " nonpositive on the grid");
  } else if (!k.certified) {
    add_note(r, "no partition for kernel " + jstr(j) + " beyond t=" + fmt(k.search.stuck_at));
  }
}

// Second differences of f on the grid, scaled by the grid step.
double max_second_difference(const std::function<Cx(double)>& f, const std::vector<double>& ts) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    const double h = ts[i] - ts[i - 1];
    worst = std::max(worst, std::abs(f(ts[i + 1]) - 2.0 * f(ts[i]) + f(ts[i - 1])) / (h * h));
  }
  return worst;
}

// Derivative of f restricted to [lo, hi]: central difference inside, second
// order one-sided near the ends.
Cx derivative_in(const std::function<Cx(double)>& f, double t, double lo, double hi) {
  const double h = fd_step(t);
  if (t - h >= lo && t + h <= hi) return (f(t + h) - f(t - h)) / (2.0 * h);
  if (t + 2.0 * h <= hi) return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h);
  return (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h);
}

}  // namespace

std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Oscillatory: return "Oscillatory";
    case VerdictKind::NonOscillatory: return "NonOscillatory";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::string_view to_string(ScalarVerdict k) {
  switch (k) {
    case ScalarVerdict::Oscillatory: return "oscillatory";
    case ScalarVerdict::NonOscillatory: return "non_oscillatory";
    case ScalarVerdict::Undecided: return "undecided";
  }
  return "undecided";
}

std::string_view to_string(SimOutcome k) {
  switch (k) {
    case SimOutcome::Oscillatory: return "SIM-oscillatory";
    case SimOutcome::NonOscillatory: return "SIM-nonoscillatory";
    case SimOutcome::Undecided: return "SIM-undecided";
  }
  return "SIM-undecided";
}

bool CriterionReport::applicable() const {
  return std::all_of(applicability.begin(), applicability.end(), [](const Hypothesis& h) { return h.held; });
}

FOverride sqrt2_identity_override() {
  return {"paper_sqrt2_identity", [](double) { return std::numbers::sqrt2 * Mat2::identity(); }};
}

ScalarOscResult scalar_osc_test(const ScalarSystem& sys, const Window& w, const ScalarTestOptions& opts) {
  if (opts.n_min < 1) throw Error(ErrorCode::InvalidInput, "n_min must be positive");
  const Clock clock(w, opts.log_clock);
  ScalarOscResult out;
  out.zeros_a = phi_zeros(sys, 1.0, 0.0, w, opts);
  out.zeros_b = phi_zeros(sys, 0.0, 1.0, w, opts);
  if (recurring(out.zeros_a, clock, opts.n_min) && recurring(out.zeros_b, clock, opts.n_min)) {
    out.verdict = ScalarVerdict::Oscillatory;
  } else if (quiet_after_burn_in(out.zeros_a, clock, opts.burn_in) &&
             quiet_after_burn_in(out.zeros_b, clock, opts.burn_in)) {
    out.verdict = ScalarVerdict::NonOscillatory;
  }
  try {
    const ScalarFn g = [&sys](double t) { return sys.f11(t) - sys.f22(t); };
    const ScalarFn h = [&sys](double t) { return -sys.f21(t); };
    const RiccatiRun rr = solve_scalar_riccati(sys.f12, g, h, 0.0, w, 1e8, opts.rtol, opts.atol);
    if (rr.blowup) out.riccati_escape = rr.blowup->escape_time;
  } catch (const StepUnderflow& e) {
    out.riccati_escape = e.time();
  }
  return out;
}

CriterionReport thm31(const Scenario& s, const Window& w, const Options& opts) {
  CriterionReport r = make_report("3.1", w);
  r.applicability.push_back({"B diagonal", s.tags.b_diagonal, ""});
  if (!s.tags.b_diagonal) return inconclusive(r, "B is not diagonal");
  const std::vector<double> ts = sample_grid(w, opts.hypothesis_grid);
  for (int j = 1; j <= 2; ++j) {
    const std::string detail = sign_and_coupling(s, ts, j, 1.0);
    r.applicability.push_back({"b" + jstr(j) + " >= 0, couplings vanish where b" + jstr(j) + " = 0", detail.empty(),
                               detail});
  }
  if (!r.applicable()) return inconclusive(r, "hypotheses fail");

  r.witnesses["t"] = ts;
  for (int j = 1; j <= 2; ++j) {
    const ChiProfile chi = chi_diag(s, j, opts.chi);
    put_series(r, "chi" + jstr(j), ts, chi.values);
    const ScalarSystem sys{
        [&s, j](double t) { return 2.0 * (j == 1 ? s.at(t).A.e11 : s.at(t).A.e22).real(); },
        [&s, j](double t) { return (j == 1 ? s.at(t).B.e11 : s.at(t).B.e22).real(); },
        [chi](double t) { return -chi.values(t); },
        [](double) { return 0.0; },
    };
    const ScalarOscResult res = scalar_osc_test(sys, w, opts.scalar());
    r.witnesses["zeros_" + jstr(j) + "_a"] = res.zeros_a;
    r.witnesses["zeros_" + jstr(j) + "_b"] = res.zeros_b;
    add_note(r, "scalar system " + jstr(j) + ": " + std::string(to_string(res.verdict)));
    if (res.verdict == ScalarVerdict::Oscillatory && r.verdict.kind != VerdictKind::Oscillatory) {
      r.verdict.kind = VerdictKind::Oscillatory;
    }
  }
  return r;
}

CriterionReport thm32(const Scenario& s, const Window& w, const Options& opts) {
  CriterionReport r = make_report("3.2", w);
  r.applicability.push_back({"B diagonal", s.tags.b_diagonal, ""});
  if (!s.tags.b_diagonal) return inconclusive(r, "B is not diagonal");
  const std::vector<double> ts = sample_grid(w, opts.hypothesis_grid);
  // Case one: b1 >= 0, b2 <= 0; case two: b1 <= 0, b2 >= 0.
  const bool case_one = sign_and_coupling(s, ts, 1, 1.0).empty() && sign_and_coupling(s, ts, 2, -1.0).empty();
  const bool case_two = !case_one && sign_and_coupling(s, ts, 1, -1.0).empty() && sign_and_coupling(s, ts, 2, 1.0).empty();
  r.applicability.push_back({"b1 >= 0 >= b2 or b1 <= 0 <= b2, couplings vanish where b_j = 0", case_one || case_two,
                             case_one ? "b1 >= 0, b2 <= 0" : case_two ? "b1 <= 0, b2 >= 0" : "sign pattern fails"});
  if (!case_one && !case_two) return inconclusive(r, "sign pattern of B fails");

  r.witnesses["t"] = ts;
  bool all = true;
  for (int j = 1; j <= 2; ++j) {
    const ChiProfile chi = chi_diag(s, j, opts.chi);
    put_series(r, "chi" + jstr(j), ts, chi.values);
    const double flip = (j == 1) == case_one ? 1.0 : -1.0;
    const Kernel k{[&s, j](double t) { return 2.0 * (j == 1 ? s.at(t).A.e11 : s.at(t).A.e22).real(); },
                   [chi, flip](double t) { return flip * chi.values(t); }};
    const KernelOutcome ko = certify(k, w, opts);
    record_kernel(r, j, ko);
    all = all && ko.certified;
  }
  if (all) r.verdict.kind = VerdictKind::NonOscillatory;
  return r;
}

CriterionReport thm33(const Scenario& s, const Window& w, const Options& opts) {
  CriterionReport r = make_report("3.3", w);
  r.applicability.push_back({"B diagonal", s.tags.b_diagonal, ""});
  r.applicability.push_back({"b1, b2 > 0", s.tags.b_positive, ""});
  r.applicability.push_back({"a12/b1, conj(a21)/b2 continuously differentiable", true, "smooth coefficients"});
  if (!r.applicable()) return inconclusive(r, "hypotheses fail");
  const Coeffs c0 = s.at(w.t0);
  if (std::abs(c0.A.e12) > coupling_tol(c0.A) || std::abs(c0.A.e21) > coupling_tol(c0.A)) {
    add_note(r, "a12(t0) or a21(t0) nonzero; the bound on z12 + ratio assumes they vanish");
  }
  const auto prof = std::make_shared<Chi34Profile>(s, w, opts.sign, 4 * opts.grid);
  const std::vector<double> ts = sample_grid(w, opts.hypothesis_grid);
  r.witnesses["t"] = ts;
  put_series(r, "chi3", ts, [prof](double t) { return prof->chi3(t); });
  put_series(r, "chi4", ts, [prof](double t) { return prof->chi4(t); });
  put_series(r, "frak_m", ts, [prof](double t) { return prof->envelope().frak_m(t); });
  bool all = true;
  for (int j = 1; j <= 2; ++j) {
    const Kernel k{[&s, j](double t) { return 2.0 * (j == 1 ? s.at(t).A.e11 : s.at(t).A.e22).real(); },
                   [prof, j](double t) { return j == 1 ? prof->chi3(t) : prof->chi4(t); }};
    const KernelOutcome ko = certify(k, w, opts);
    record_kernel(r, j, ko);
    all = all && ko.certified;
  }
  if (all) r.verdict.kind = VerdictKind::NonOscillatory;
  return r;
}

PsdReduction psd_reduce(const Scenario& s, const Window& w, const std::optional<FOverride>& F_override, int samples) {
  if (!s.tags.b_psd) throw Error(ErrorCode::NotPSD, s.name);
  PsdReduction red;
  red.sqrtB = [s](double t) { return sqrt_psd(s.at(t).B); };
  auto M = [s](double t) {
    const Coeffs c = s.at(t);
    return c.A * sqrt_psd(c.B) - coeff_derivative(s, CoeffKind::SqrtB, t);
  };
  if (F_override) {
    red.F = F_override->F;
    red.F_label = F_override->label;
  } else {
    red.F = [s, M](double t) { return solve_sandwich(sqrt_psd(s.at(t).B), M(t)).F; };
    red.F_label = "minimum_norm";
  }
  red.P = [F = red.F, M](double t) { return F(t) * M(t); };
  red.Q = [s](double t) {
    const Coeffs c = s.at(t);
    const Mat2 S = sqrt_psd(c.B);
    return hermitian_part(S * c.C * S);
  };
  red.residual = [s, F = red.F, M](double t) {
    const Mat2 m = M(t);
    return (sqrt_psd(s.at(t).B) * F(t) * m - m).norm();
  };
  for (double t : sample_grid(w, samples)) {
    const Mat2 m = M(t);
    const double res = red.residual(t);
    if (res > red.max_residual) {
      red.max_residual = res;
      red.max_residual_time = t;
    }
    if (res > 1e-8 * (1.0 + m.norm())) red.residual_ok = false;
    const Coeffs c = s.at(t);
    const Mat2 S = sqrt_psd(c.B);
    const Mat2 q = S * c.C * S;
    red.max_q_asymmetry = std::max(red.max_q_asymmetry, (q - q.adjoint()).norm());
  }
  return red;
}

namespace {

// Shared preamble of the reduced-system criteria; nullopt when inapplicable.
std::optional<PsdReduction> reduce_for(CriterionReport& r, const Scenario& s, const Window& w, const Options& opts) {
  r.applicability.push_back({"B >= 0", s.tags.b_psd, ""});
  if (!s.tags.b_psd) {
    inconclusive(r, "B is not nonnegative");
    return std::nullopt;
  }
  PsdReduction red = psd_reduce(s, w, opts.F_override, opts.hypothesis_grid);
  r.witnesses["residual_max"] = {red.max_residual, red.max_residual_time};
  r.applicability.push_back({"sqrt(B) F M = M solvable", red.residual_ok,
                             "F=" + red.F_label + ", max residual " + fmt(red.max_residual) + " at t=" +
                                 fmt(red.max_residual_time)});
  if (!red.residual_ok) {
    inconclusive(r, std::string(to_string(ErrorCode::ResidualTooLarge)));
    return std::nullopt;
  }
  add_note(r, "F=" + red.F_label);
  return red;
}

}  // namespace

CriterionReport cor31(const Scenario& s, const Window& w, const Options& opts) {
  CriterionReport r = make_report("C3.1", w);
  const std::optional<PsdReduction> red = reduce_for(r, s, w, opts);
  if (!red) return r;
  const std::vector<double> ts = sample_grid(w, opts.hypothesis_grid);
  r.witnesses["t"] = ts;
  const bool literal = opts.chi == ChiConvention::Literal;
  for (int j = 1; j <= 2; ++j) {
    const ScalarFn chi = [P = red->P, Q = red->Q, j, literal](double t) {
      const Mat2 p = P(t), q = Q(t);
      const double v = (j == 1 ? q.e11 : q.e22).real() + std::norm(j == 1 ? p.e21 : p.e12);
      return literal ? v : -v;
    };
    put_series(r, "chi_tilde" + jstr(j), ts, chi);
    const ScalarSystem sys{
        [](double) { return 0.0; },
        [](double) { return 1.0; },
        [chi](double t) { return -chi(t); },
        [P = red->P, j](double t) { return -2.0 * (j == 1 ? P(t).e11 : P(t).e22).real(); },
    };
    const ScalarOscResult res = scalar_osc_test(sys, w, opts.scalar());
    r.witnesses["zeros_" + jstr(j) + "_a"] = res.zeros_a;
    r.witnesses["zeros_" + jstr(j) + "_b"] = res.zeros_b;
    add_note(r, "scalar equation " + jstr(j) + ": " + std::string(to_string(res.verdict)));
    if (res.verdict == ScalarVerdict::Oscillatory) r.verdict.kind = VerdictKind::Oscillatory;
  }
  return r;
}

ReducedChi34 reduced_chi34(const PsdReduction& red, const Window& w, SignConvention sign) {
  EnvelopeInputs in;
  const auto P = red.P;
  const auto Q = red.Q;
  in.q = [P](double t) {
    const Mat2 p = P(t);
    return std::conj(p.e11) + p.e22;
  };
  in.r1 = [P](double t) { return P(t).e12; };
  in.r2 = [P](double t) { return std::conj(P(t).e21); };
  in.dr1 = [r1 = in.r1, w](double t) { return derivative_in(r1, t, w.t0, w.t1); };
  in.dr2 = [r2 = in.r2, w](double t) { return derivative_in(r2, t, w.t0, w.t1); };
  in.c12 = [Q](double t) { return Q(t).e12; };
  const auto env = std::make_shared<Envelope>(in, w, sign);
  ReducedChi34 out;
  out.chi3 = [env, P, Q](double t) {
    const double m = env->bracket3(t);
    return m * m - std::norm(P(t).e21) - Q(t).e11.real();
  };
  out.chi4 = [env, P, Q](double t) {
    const double m = env->bracket4(t);
    return m * m - std::norm(P(t).e12) - Q(t).e22.real();
  };
  return out;
}

CriterionReport thm34(const Scenario& s, const Window& w, const Options& opts) {
  CriterionReport r = make_report("3.4", w);
  const std::optional<PsdReduction> red = reduce_for(r, s, w, opts);
  if (!red) return r;
  const std::vector<double> ts = sample_grid(w, opts.hypothesis_grid);
  const auto P = red->P;
  double scale = 0.0;
  for (double t : ts) scale = std::max(scale, P(t).max_abs());
  const double d12 = max_second_difference([P](double t) { return P(t).e12; }, ts);
  const double d21 = max_second_difference([P](double t) { return P(t).e21; }, ts);
  const double bound = 1e6 * (1.0 + scale) / std::min(1.0, w.length() * w.length());
  const bool smooth = std::isfinite(d12) && std::isfinite(d21) && d12 <= bound && d21 <= bound;
  r.applicability.push_back({"p12, p21 continuously differentiable", smooth,
                             "max second differences " + fmt(d12) + ", " + fmt(d21)});
  if (!smooth) return inconclusive(r, "p12 or p21 not smooth on the grid");
  const Mat2 p0 = P(w.t0);
  if (std::abs(p0.e12) > coupling_tol(p0) || std::abs(p0.e21) > coupling_tol(p0)) {
    add_note(r, "p12(t0) or p21(t0) nonzero; the bound on z12 + ratio assumes they vanish");
  }
  const ReducedChi34 chi = reduced_chi34(*red, w, opts.sign);
  r.witnesses["t"] = ts;
  put_series(r, "chi_tilde3", ts, chi.chi3);
  put_series(r, "chi_tilde4", ts, chi.chi4);
  add_note(r, std::string("c12 sign ") + (opts.sign == SignConvention::PlusC12 ? "plus" : "minus") +
                  ", exponent from " + (opts.exponent_source == ExponentSource::P ? "p" : "a"));
  bool all = true;
  for (int j = 1; j <= 2; ++j) {
    ScalarFn g;
    if (opts.exponent_source == ExponentSource::P) {
      g = [P, j](double t) { return 2.0 * (j == 1 ? P(t).e11 : P(t).e22).real(); };
    } else {
      g = [&s, j](double t) { return 2.0 * (j == 1 ? s.at(t).A.e11 : s.at(t).A.e22).real(); };
    }
    const KernelOutcome ko = certify({g, j == 1 ? chi.chi3 : chi.chi4}, w, opts);
    record_kernel(r, j, ko);
    all = all && ko.certified;
  }
  if (all) r.verdict.kind = VerdictKind::NonOscillatory;
  return r;
}

AnalysisResult run_criteria(const Scenario& s, const Window& w, const Options& opts) {
  using Fn = CriterionReport (*)(const Scenario&, const Window&, const Options&);
  constexpr std::pair<const char*, Fn> order[] = {
      {"3.1", thm31}, {"3.2", thm32}, {"3.3", thm33}, {"C3.1", cor31}, {"3.4", thm34}};
  AnalysisResult out;
  out.overall.window = w;
  for (const auto& [name, fn] : order) {
    CriterionReport r;
    try {
      r = fn(s, w, opts);
    } catch (const Error& e) {
      r = make_report(name, w);
      r.applicability.push_back({"evaluation", false, e.what()});
      inconclusive(r, e.what());
    }
    out.reports.push_back(std::move(r));
  }
  bool osc = false, non = false;
  for (const CriterionReport& r : out.reports) {
    osc = osc || r.verdict.kind == VerdictKind::Oscillatory;
    non = non || r.verdict.kind == VerdictKind::NonOscillatory;
    if (r.verdict.kind != VerdictKind::Inconclusive && out.overall.kind == VerdictKind::Inconclusive) {
      out.overall = r.verdict;
    }
  }
  out.conflict = osc && non;
  if (out.overall.kind == VerdictKind::Inconclusive) out.overall.notes = "no criterion fired";
  return out;
}

CriteriaConflictError::CriteriaConflictError(AnalysisResult r)
    : Error(ErrorCode::CriteriaConflict, "one criterion says Oscillatory, another NonOscillatory"),
      result_(std::move(r)) {}

AnalysisResult analyze(const Scenario& s, const Window& w, const Options& opts) {
  AnalysisResult r = run_criteria(s, w, opts);
  if (r.conflict) throw CriteriaConflictError(std::move(r));
  return r;
}

std::vector<std::pair<Mat2, Mat2>> conjoined_starts(int n_starts, unsigned long long seed) {
  if (n_starts < 1) throw Error(ErrorCode::InvalidInput, "need at least one start");
  std::vector<std::pair<Mat2, Mat2>> out{{Mat2::identity(), Mat2::zero()}, {Mat2::identity(), Mat2::identity()}};
  out.resize(std::min<std::size_t>(out.size(), n_starts));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  while (static_cast<int>(out.size()) < n_starts) {
    const Mat2 g{{n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}, {n(rng), n(rng)}};
    out.push_back({Mat2::identity(), hermitian_part(g * g.adjoint())});
  }
  return out;
}

std::string start_label(std::size_t i) {
  return i == 0 ? "(I,0)" : i == 1 ? "(I,I)" : "(I,GG*) #" + std::to_string(i - 1);
}

StartRecord observe_start(const HamiltonianRun& run, const Window& w, double eps_zero) {
  StartRecord rec;
  rec.zeros = detect_det_zeros(run, eps_zero);
  rec.max_defect_ratio = run.max_defect_ratio;
  double min_log = std::numeric_limits<double>::infinity();
  auto visit = [&](double t) {
    const double d = std::abs(run.phi(t).det());
    min_log = std::min(min_log, d > 0.0 ? std::log(d) + run.log_scale_at(t) : -std::numeric_limits<double>::infinity());
  };
  for (double t : run.traj.times) visit(t);
  for (double t : sample_grid(w, 2000)) {
    if (t <= run.traj.t_last()) visit(t);
  }
  rec.min_abs_det = std::exp(min_log);
  return rec;
}

CrossValidation cross_validate(const Scenario& s, const Window& w, const Verdict& analysis, const Options& opts) {
  CrossValidation cv;
  cv.analysis = analysis;
  const Clock clock(w, opts.log_clock);
  const auto starts = conjoined_starts(opts.n_starts, opts.seed);
  bool all_recurring = true, some_quiet = false;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const HamiltonianRun run = solve_hamiltonian(s, starts[i].first, starts[i].second, w, {opts.rtol, opts.atol});
    StartRecord rec = observe_start(run, w, opts.eps_zero);
    rec.label = start_label(i);
    std::vector<double> times;
    for (const ZeroRecord& z : rec.zeros) times.push_back(z.time);
    all_recurring = all_recurring && times.size() >= 2 && clock(times.back()) >= 0.75;
    some_quiet = some_quiet || quiet_after_burn_in(times, clock, opts.burn_in);
    cv.starts.push_back(std::move(rec));
  }
  if (all_recurring) {
    cv.simulation = SimOutcome::Oscillatory;
  } else if (some_quiet) {
    cv.simulation = SimOutcome::NonOscillatory;
  }
  switch (analysis.kind) {
    case VerdictKind::Oscillatory:
      cv.consistent = cv.simulation == SimOutcome::Oscillatory;
      break;
    case VerdictKind::NonOscillatory:
      cv.consistent = cv.simulation == SimOutcome::NonOscillatory;
      break;
    case VerdictKind::Inconclusive:
      cv.consistent = true;
      cv.hint = "analysis inconclusive; simulation recorded only";
      break;
  }
  if (!cv.consistent) {
    cv.hint = "window too short or tolerances too loose for the simulation to show the asymptotic behaviour";
  }
  return cv;
}

CrossValidation cross_validate(const Scenario& s, const Window& w, const Options& opts) {
  return cross_validate(s, w, run_criteria(s, w, opts).overall, opts);
}

}  // namespace hamosc
