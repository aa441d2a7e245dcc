#include "hamosc/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "hamosc/error.hpp"

namespace hamosc {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

bool all_finite(const State& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double error_norm(const State& y, const State& ynew, const State& err, double rtol, double atol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    sum += (err[i] / sc) * (err[i] / sc);
  }
  return std::sqrt(sum / static_cast<double>(y.size()));
}

// Hairer's starting step heuristic.
double initial_step(const Field& f, double t, const State& y, const State& f0, double span, double rtol, double atol) {
  const std::size_t n = y.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = atol + rtol * std::abs(y[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y[i] / sk) * (y[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, span);
  State y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h * f0[i];
  f(t + h, y1, f1);
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = atol + rtol * std::abs(y[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, span});
}

}  // namespace

bool Trajectory::has_event(std::string_view kind) const {
  return std::any_of(events.begin(), events.end(), [&](const Event& e) { return e.kind == kind; });
}

void Trajectory::add_segment(std::vector<double> rcont) { rcont_.push_back(std::move(rcont)); }

std::size_t Trajectory::segment_of(double t) const {
  if (times.size() < 2) return 0;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return std::min(k, times.size() - 2);
}

State Trajectory::dense_eval(double t) const {
  if (t < times.front() || t > times.back()) {
    throw Error(ErrorCode::OutOfDomain, "dense output requested outside the trajectory");
  }
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (*it == t) return states[it - times.begin()];
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double h = times[k + 1] - times[k];
  const double th = (t - times[k]) / h;
  const double th1 = 1.0 - th;
  const std::size_t n = dim();
  const std::vector<double>& r = rcont_[k];
  State y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = r[i] + th * (r[n + i] + th1 * (r[2 * n + i] + th * (r[3 * n + i] + th1 * r[4 * n + i])));
  }
  return y;
}

Trajectory adaptive_solve(const Field& f, const State& y0, const Window& w, const SolveOptions& opts) {
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw Error(ErrorCode::InvalidInput, "tolerances must be positive");
  if (!(w.t1 > w.t0)) throw Error(ErrorCode::InvalidInput, "integration window is empty");
  const std::size_t n = y0.size();
  Trajectory traj;
  traj.times.push_back(w.t0);
  traj.states.push_back(y0);

  State y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  double t = w.t0;
  f(t, y, k1);
  if (!all_finite(y) || !all_finite(k1)) throw Error(ErrorCode::InvalidInput, "field not finite at the start");

  const double span = w.t1 - w.t0;
  const double h_max = opts.h_max > 0.0 ? opts.h_max : span;
  double h = opts.h0 > 0.0 ? opts.h0 : initial_step(f, t, y, k1, span, opts.rtol, opts.atol);
  h = std::min(h, h_max);

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 5.0, facc2 = 0.1;
  double facold = 1e-4;
  bool last_rejected = false;
  long steps = 0;

  while (t < w.t1) {
    if (++steps > opts.max_steps) throw StepUnderflow(t, "step budget exhausted");
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      if (opts.throw_on_underflow) throw StepUnderflow(t, "step size collapsed");
      traj.events.push_back({"step_underflow", t, "step size collapsed"});
      return traj;
    }
    bool last = false;
    if (t + 1.01 * h >= w.t1) {
      h = w.t1 - t;
      last = true;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    f(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i) {
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    const double tph = last ? w.t1 : t + h;
    f(tph, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    f(tph, ynew, k7);

    if (!all_finite(ynew) || !all_finite(k7)) {
      h *= 0.5;
      last_rejected = true;
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    const double enorm = error_norm(y, ynew, err, opts.rtol, opts.atol);
    const double fac11 = std::pow(enorm, expo1);

    if (enorm <= 1.0) {
      facold = std::max(enorm, 1e-4);
      std::vector<double> rcont(5 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        rcont[i] = y[i];
        rcont[n + i] = ydiff;
        rcont[2 * n + i] = bspl;
        rcont[3 * n + i] = ydiff - h * k7[i] - bspl;
        rcont[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      traj.add_segment(std::move(rcont));

      t = tph;
      y = ynew;
      bool modified = false;
      if (opts.on_accept) {
        const State before = y;
        opts.on_accept(t, y);
        modified = y != before;
      }
      traj.times.push_back(t);
      traj.states.push_back(y);
      if (modified) {
        f(t, y, k1);
      } else {
        k1 = k7;
      }
      if (opts.stop && opts.stop(t, y)) {
        traj.events.push_back({"escape", t, "stop condition met"});
        return traj;
      }

      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = std::min(h / fac, h_max);
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = hnew;
    } else {
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
  return traj;
}

double quadrature(const std::function<double(double)>& f, double a, double b, double tol) {
  static std::once_flag handler_off;
  std::call_once(handler_off, [] { gsl_set_error_handler_off(); });
  if (a == b) return 0.0;
  constexpr std::size_t limit = 1000;
  struct Workspace {
    gsl_integration_workspace* w = gsl_integration_workspace_alloc(limit);
    ~Workspace() { gsl_integration_workspace_free(w); }
  } ws;
  gsl_function fn;
  fn.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
  fn.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0, abserr = 0.0;
  const int status = gsl_integration_qag(&fn, a, b, tol, tol, limit, GSL_INTEG_GAUSS15, ws.w, &result, &abserr);
  if (status != GSL_SUCCESS || !std::isfinite(result)) {
    throw Error(ErrorCode::QuadratureNoConvergence, gsl_strerror(status));
  }
  return result;
}

}  // namespace hamosc
