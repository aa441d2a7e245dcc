#include "hamosc/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hamosc/error.hpp"

namespace hamosc {
namespace {

constexpr double kRtol = 1e-10;
constexpr double kAtol = 1e-12;

std::string at_time(double t) {
  std::ostringstream os;
  os.precision(12);
  os << "t=" << t;
  return os.str();
}

// State {I, W, K}: I = I_{g,h}(a; t), W = J exp(-L) where J = int exp(L) h is the
// weighted integral and L = int (g - I), K the same transform of |h|.
bool condition_violated(const State& y) { return y[1] > 1e-10 * (1.0 + y[2]); }

Trajectory integrate_condition(const Kernel& k, double a, double b) {
  Field f = [&k](double t, const State& y, State& dy) {
    const double h = k.h(t);
    const double g = k.g(t);
    const double m = g - y[0];
    dy[0] = h - g * y[0];
    dy[1] = h - m * y[1];
    dy[2] = std::abs(h) - m * y[2];
  };
  SolveOptions so;
  so.rtol = kRtol;
  so.atol = kAtol;
  so.throw_on_underflow = false;
  so.stop = [](double, const State& y) { return condition_violated(y); };
  return adaptive_solve(f, {0.0, 0.0, 0.0}, {a, b}, so);
}

// First violation on [a, b] at integrator nodes or on the given grid points;
// nullopt when the condition holds throughout.
std::optional<double> first_violation(const Kernel& k, double a, double b, const std::vector<double>& grid) {
  const Trajectory tr = integrate_condition(k, a, b);
  std::optional<double> hit;
  if (!tr.events.empty()) hit = tr.t_last();
  for (double t : grid) {
    if (t <= a || t > tr.t_last()) continue;
    if (hit && t >= *hit) break;
    if (condition_violated(tr.dense_eval(t))) {
      hit = t;
      break;
    }
  }
  return hit;
}

}  // namespace

double I_gh(const Kernel& k, double xi, double t) {
  if (t < xi) throw Error(ErrorCode::InvalidInput, "I_gh needs xi <= t");
  if (t == xi) return 0.0;
  Field f = [&k](double s, const State& y, State& dy) { dy[0] = k.h(s) - k.g(s) * y[0]; };
  SolveOptions so;
  so.rtol = kRtol;
  so.atol = kAtol;
  return adaptive_solve(f, {0.0}, {xi, t}, so).states.back()[0];
}

Thm22Result thm22_check(const Kernel& k, const Partition& part, const Window& w, int grid_per_interval) {
  if (part.empty() || part.front() != w.t0) throw Error(ErrorCode::InvalidInput, "partition must start at t0");
  Partition pts = part;
  if (pts.back() < w.t1) pts.push_back(w.t1);
  Thm22Result out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    if (!(b > a) || a < w.t0 || b > w.t1) throw Error(ErrorCode::InvalidInput, "partition must increase inside the window");
    std::vector<double> grid;
    for (int j = 1; j <= grid_per_interval; ++j) grid.push_back(a + (b - a) * j / grid_per_interval);
    if (auto hit = first_violation(k, a, b, grid)) {
      out.holds = false;
      out.first_violation = std::pair{static_cast<int>(i), *hit};
      return out;
    }
  }
  return out;
}

PartitionSearch partition_search(const Kernel& k, const Window& w, int max_points, int grid, int grid_per_interval) {
  if (max_points < 1 || grid < 1) throw Error(ErrorCode::InvalidInput, "max_points and grid must be positive");
  const double span = w.length();
  const double dt = span / grid;
  const double min_advance = span / max_points;
  PartitionSearch out;
  out.partition.push_back(w.t0);
  double xi = w.t0;
  while (xi < w.t1) {
    std::vector<double> pts;
    const int first = static_cast<int>(std::floor((xi - w.t0) / dt)) + 1;
    for (int i = first; i <= grid; ++i) pts.push_back(i == grid ? w.t1 : w.t0 + i * dt);
    const std::optional<double> hit = first_violation(k, xi, w.t1, pts);
    if (!hit) {
      out.partition.push_back(w.t1);
      break;
    }
    double next = xi;
    for (double p : pts) {
      if (p >= *hit) break;
      next = p;
    }
    if (next - xi < min_advance || static_cast<int>(out.partition.size()) > max_points) {
      out.stuck_at = xi;
      return out;
    }
    out.partition.push_back(next);
    xi = next;
  }
  // The greedy grid can miss narrow violations between grid points; confirm
  // on the finer per-subinterval grid.
  Partition inner(out.partition.begin(), out.partition.end() - 1);
  const Thm22Result confirm = thm22_check(k, inner, w, grid_per_interval);
  if (!confirm.holds) {
    out.stuck_at = confirm.first_violation->second;
    return out;
  }
  out.found = true;
  return out;
}

bool thm21_compare_oracle(const ScalarFn& f, const ScalarFn& g, const ScalarFn& h, const ScalarFn& h1, double y1_0,
                          double y_0, const Window& w) {
  constexpr double tol = 1e-10;
  if (y_0 < y1_0 - tol * (1.0 + std::abs(y1_0))) throw Error(ErrorCode::HypothesisViolated, "y_0 >= y1_0");
  for (int i = 0; i < 256; ++i) {
    const double t = w.t0 + w.length() * i / 255;
    if (f(t) < -tol) throw Error(ErrorCode::HypothesisViolated, "f >= 0 at " + at_time(t));
    if (h(t) > h1(t) + tol * (1.0 + std::abs(h1(t)))) {
      throw Error(ErrorCode::HypothesisViolated, "h <= h1 at " + at_time(t));
    }
  }
  const RiccatiRun lower = solve_scalar_riccati(f, g, h1, y1_0, w);
  const RiccatiRun upper = solve_scalar_riccati(f, g, h, y_0, w);
  const double lower_end = lower.traj.t_last();
  const double upper_end = upper.traj.t_last();
  // Numerical escapes of y1 end its existence interval; y0 must last as long.
  if (upper.blowup && upper_end < lower_end - 1e-6 * (1.0 + std::abs(lower_end))) return false;
  const double until = std::min(lower_end, upper_end);
  for (std::size_t k = 0; k < lower.traj.times.size(); ++k) {
    const double t = lower.traj.times[k];
    if (t > until) break;
    const double y1 = lower.traj.states[k][0];
    const double y0 = upper.traj.dense_eval(t)[0];
    if (y0 < y1 - 1e-6 * (1.0 + std::abs(y1))) return false;
  }
  for (std::size_t k = 0; k < upper.traj.times.size(); ++k) {
    const double t = upper.traj.times[k];
    if (t > until) break;
    const double y0 = upper.traj.states[k][0];
    const double y1 = lower.traj.dense_eval(t)[0];
    if (y0 < y1 - 1e-6 * (1.0 + std::abs(y1))) return false;
  }
  return true;
}

ChiProfile chi_diag(const Scenario& s, int j, ChiConvention conv) {
  if (!s.tags.b_diagonal) throw Error(ErrorCode::NotDiagonalB, s.name);
  if (j != 1 && j != 2) throw Error(ErrorCode::InvalidInput, "chi index must be 1 or 2");
  ChiProfile p;
  p.j = j;
  auto parts = [s, j](double t) {
    const Coeffs c = s.at(t);
    const double b_other = (j == 1 ? c.B.e22 : c.B.e11).real();
    const double coupling = std::norm(j == 1 ? c.A.e21 : c.A.e12);
    const double c_jj = (j == 1 ? c.C.e11 : c.C.e22).real();
    const bool zero = std::abs(b_other) <= tol_pos(c.B);
    return std::tuple{zero, zero ? 0.0 : coupling / b_other, c_jj};
  };
  p.values = [parts, conv](double t) {
    const auto [zero, ratio, c_jj] = parts(t);
    const double v = c_jj + ratio;
    return conv == ChiConvention::Corrected ? -v : v;
  };
  p.b_zero_branch = [parts](double t) { return std::get<0>(parts(t)); };
  return p;
}

EnvelopeInputs diagonal_envelope_inputs(const Scenario& s) {
  const RatioFns rf = ratio_fns(s);
  EnvelopeInputs in;
  in.q = [s](double t) {
    const Coeffs c = s.at(t);
    return std::conj(c.A.e11) + c.A.e22;
  };
  in.r1 = rf.r1;
  in.r2 = rf.r2;
  in.dr1 = rf.dr1;
  in.dr2 = rf.dr2;
  in.c12 = [s](double t) { return s.at(t).C.e12; };
  return in;
}

Envelope::Envelope(EnvelopeInputs in, const Window& w, SignConvention sign, int grid) : in_(std::move(in)), w_(w) {
  const double pm = sign == SignConvention::PlusC12 ? 1.0 : -1.0;
  Field f = [this, pm](double t, const State& y, State& dy) {
    const Cx q = in_.q(t);
    const Cx c12 = pm * in_.c12(t);
    dy[0] = q.real();
    dy[1] = std::abs(in_.dr2(t) + in_.r2(t) * q + c12) - q.real() * y[1];
    dy[2] = std::abs(in_.dr1(t) + in_.r1(t) * q + c12) - q.real() * y[2];
  };
  SolveOptions so;
  so.rtol = kRtol;
  so.atol = kAtol;
  integrals_ = adaptive_solve(f, {0.0, 0.0, 0.0}, w, so);

  grid_t_.resize(grid + 1);
  running_max_.resize(grid + 1);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double t = i == grid ? w.t1 : w.t0 + w.length() * i / grid;
    grid_t_[i] = t;
    mx = std::max(mx, integrals_.dense_eval(t)[0] + log_gap(t));
    running_max_[i] = mx;
  }
}

double Envelope::log_gap(double t) const {
  const double gap = std::abs(in_.r1(t) - in_.r2(t));
  return gap > 0.0 ? std::log(gap) : -std::numeric_limits<double>::infinity();
}

double Envelope::frak_m(double t) const {
  const State y = integrals_.dense_eval(t);
  auto it = std::upper_bound(grid_t_.begin(), grid_t_.end(), t);
  double mx = y[0] + log_gap(t);
  if (it != grid_t_.begin()) mx = std::max(mx, running_max_[it - grid_t_.begin() - 1]);
  if (mx == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(mx - y[0]);
}

double Envelope::e3(double t) const { return integrals_.dense_eval(t)[1]; }
double Envelope::e4(double t) const { return integrals_.dense_eval(t)[2]; }

Chi34Profile::Chi34Profile(const Scenario& s, const Window& w, SignConvention sign, int grid)
    : s_(s), env_(diagonal_envelope_inputs(s), w, sign, grid) {}

double Chi34Profile::chi3(double t) const {
  const Coeffs c = s_.at(t);
  const double b2 = c.B.e22.real();
  const double m = env_.bracket3(t);
  return b2 * m * m - std::norm(c.A.e21) / b2 - c.C.e11.real();
}

double Chi34Profile::chi4(double t) const {
  const Coeffs c = s_.at(t);
  const double b1 = c.B.e11.real();
  const double m = env_.bracket4(t);
  return b1 * m * m - std::norm(c.A.e12) / b1 - c.C.e22.real();
}

Chi34Profile chi34_profile(const Scenario& s, const Window& w, SignConvention sign) {
  if (!s.tags.b_diagonal) throw Error(ErrorCode::NotDiagonalB, s.name);
  if (!s.tags.b_positive) throw Error(ErrorCode::NotPositiveB, s.name);
  return Chi34Profile(s, w, sign);
}

Chi34 chi34(const Scenario& s, double t, SignConvention sign) {
  if (t <= s.t0) {
    if (!s.tags.b_diagonal) throw Error(ErrorCode::NotDiagonalB, s.name);
    if (!s.tags.b_positive) throw Error(ErrorCode::NotPositiveB, s.name);
    const Coeffs c = s.at(s.t0);
    const RatioFns rf = ratio_fns(s);
    const double m = std::abs(rf.r1(s.t0) - rf.r2(s.t0));
    const double b1 = c.B.e11.real(), b2 = c.B.e22.real();
    return {b2 * m * m - std::norm(c.A.e21) / b2 - c.C.e11.real(),
            b1 * m * m - std::norm(c.A.e12) / b1 - c.C.e22.real()};
  }
  const Chi34Profile p = chi34_profile(s, {s.t0, t}, sign);
  return {p.chi3(t), p.chi4(t)};
}

double frak_m(const Scenario& s, double t) {
  const EnvelopeInputs in = diagonal_envelope_inputs(s);
  if (t <= s.t0) return std::abs(in.r1(s.t0) - in.r2(s.t0));
  return Envelope(in, {s.t0, t}, SignConvention::PlusC12).frak_m(t);
}

namespace {

struct Pieces {
  Coeffs c;
  double b1, b2;
  Cx q, r1, r2, dr1, dr2;
};

Pieces pieces(const Scenario& s, const RatioFns& rf, double t) {
  Pieces p;
  p.c = s.at(t);
  p.b1 = p.c.B.e11.real();
  p.b2 = p.c.B.e22.real();
  p.q = std::conj(p.c.A.e11) + p.c.A.e22;
  p.r1 = rf.r1(t);
  p.r2 = rf.r2(t);
  p.dr1 = rf.dr1(t);
  p.dr2 = rf.dr2(t);
  return p;
}

// z11' from the first equation of the reduced system, given z12.
double dz11(const Pieces& p, double z11, Cx z12) {
  const Coeffs& c = p.c;
  return -(p.b1 * z11 * z11 + 2.0 * c.A.e11.real() * z11 + p.b2 * std::norm(z12) +
           2.0 * (c.A.e21 * z12).real() - c.C.e11.real());
}

double dz22(const Pieces& p, double z22, Cx z12) {
  const Coeffs& c = p.c;
  return -(p.b2 * z22 * z22 + 2.0 * c.A.e22.real() * z22 + p.b1 * std::norm(z12) +
           2.0 * (std::conj(c.A.e12) * z12).real() - c.C.e22.real());
}

// y' with y = z12 + r2.
Cx dy(const Pieces& p, double z11, double z22, Cx y) {
  return -((p.b1 * z11 + p.b2 * z22 + p.q) * y + p.b1 * (p.r1 - p.r2) * z11 - p.dr2 - p.r2 * p.q - p.c.C.e12);
}

// v' with v = z12 + r1.
Cx dv(const Pieces& p, double z11, double z22, Cx v) {
  return -((p.b1 * z11 + p.b2 * z22 + p.q) * v + p.b2 * (p.r2 - p.r1) * z22 - p.dr1 - p.r1 * p.q - p.c.C.e12);
}

}  // namespace

Trajectory subsystem_solve(const Scenario& s, Subsystem which, double z0, Cx w0, const Window& w,
                           double other_diag0) {
  const RatioFns rf = ratio_fns(s);
  Field f = [&](double t, const State& y, State& d) {
    const Pieces p = pieces(s, rf, t);
    const Cx wv{y[1], y[2]};
    Cx dw;
    if (which == Subsystem::Sys28) {
      const Cx z12 = wv - p.r2;
      dw = dy(p, y[0], y[3], wv);
      d[3] = dz22(p, y[3], z12);
      d[0] = -(p.b1 * y[0] * y[0] + 2.0 * p.c.A.e11.real() * y[0] + p.b2 * std::norm(wv) -
               std::norm(p.c.A.e21) / p.b2 - p.c.C.e11.real());
    } else {
      const Cx z12 = wv - p.r1;
      d[0] = -(p.b2 * y[0] * y[0] + 2.0 * p.c.A.e22.real() * y[0] + p.b1 * std::norm(wv) -
               std::norm(p.c.A.e12) / p.b1 - p.c.C.e22.real());
      dw = dv(p, y[3], y[0], wv);
      d[3] = dz11(p, y[3], z12);
    }
    d[1] = dw.real();
    d[2] = dw.imag();
  };
  SolveOptions so;
  so.rtol = kRtol;
  so.atol = kAtol;
  return adaptive_solve(f, {z0, w0.real(), w0.imag(), other_diag0}, w, so);
}

Lemma22Result lemma22_check(const Scenario& s, const Window& w, double z11_0, double z22_0) {
  if (z11_0 < 0.0 || z22_0 < 0.0) throw Error(ErrorCode::HypothesisViolated, "initial diagonal entries must be >= 0");
  if (!s.tags.b_diagonal) throw Error(ErrorCode::NotDiagonalB, s.name);
  if (!s.tags.b_positive) throw Error(ErrorCode::NotPositiveB, s.name);
  const RatioFns rf = ratio_fns(s);
  // State {z11, re y, im y, z22, re v, im v}; y and v evolve independently
  // from zero, each coupled to both diagonal entries.
  Field f = [&](double t, const State& u, State& d) {
    const Pieces p = pieces(s, rf, t);
    const Cx y{u[1], u[2]}, v{u[4], u[5]};
    d[0] = -(p.b1 * u[0] * u[0] + 2.0 * p.c.A.e11.real() * u[0] + p.b2 * std::norm(y) -
             std::norm(p.c.A.e21) / p.b2 - p.c.C.e11.real());
    d[3] = -(p.b2 * u[3] * u[3] + 2.0 * p.c.A.e22.real() * u[3] + p.b1 * std::norm(v) -
             std::norm(p.c.A.e12) / p.b1 - p.c.C.e22.real());
    const Cx ey = dy(p, u[0], u[3], y);
    const Cx ev = dv(p, u[0], u[3], v);
    d[1] = ey.real();
    d[2] = ey.imag();
    d[4] = ev.real();
    d[5] = ev.imag();
  };
  constexpr double neg_tol = 1e-9;
  SolveOptions so;
  so.rtol = kRtol;
  so.atol = kAtol;
  so.throw_on_underflow = false;
  so.stop = [](double, const State& u) { return u[0] < -neg_tol || u[3] < -neg_tol; };
  const Trajectory tr = adaptive_solve(f, {z11_0, 0.0, 0.0, z22_0, 0.0, 0.0}, w, so);

  Lemma22Result out;
  out.checked_until = tr.t_last();
  if (tr.has_event("escape")) {
    out.hypothesis_violation = tr.t_last();
    // Stop at the last node where the hypothesis held.
    out.checked_until = tr.times.size() > 1 ? tr.times[tr.times.size() - 2] : w.t0;
  }
  if (out.checked_until <= w.t0) return out;
  const Envelope env(diagonal_envelope_inputs(s), {w.t0, out.checked_until}, SignConvention::PlusC12);
  std::vector<double> ts;
  for (double t : tr.times) {
    if (t <= out.checked_until) ts.push_back(t);
  }
  for (int i = 0; i <= 512; ++i) ts.push_back(w.t0 + (out.checked_until - w.t0) * i / 512);
  for (double t : ts) {
    const State u = tr.dense_eval(t);
    const double by = env.bracket3(t), bv = env.bracket4(t);
    const double ex_y = (std::abs(Cx{u[1], u[2]}) - by) / (1.0 + by);
    const double ex_v = (std::abs(Cx{u[4], u[5]}) - bv) / (1.0 + bv);
    out.worst_excess = std::max({out.worst_excess, ex_y, ex_v});
  }
  out.held = out.worst_excess <= 1e-6;
  return out;
}

}  // namespace hamosc
