#include <algorithm>
#include <cmath>
#include <sstream>

#include "hamosc/error.hpp"
#include "hamosc/odeint.hpp"

namespace hamosc {
namespace {

void put(State& y, int offset, const Mat2& m) {
  int k = offset;
  for (Cx z : {m.e11, m.e12, m.e21, m.e22}) {
    y[k++] = z.real();
    y[k++] = z.imag();
  }
}

Mat2 get(const State& y, int offset) {
  return {{y[offset], y[offset + 1]}, {y[offset + 2], y[offset + 3]}, {y[offset + 4], y[offset + 5]},
          {y[offset + 6], y[offset + 7]}};
}

bool is_real(const Mat2& m) {
  return m.e11.imag() == 0 && m.e12.imag() == 0 && m.e21.imag() == 0 && m.e22.imag() == 0;
}

// Gram-Schmidt on the two columns of the 4x2 frame [Phi; Psi].
struct FrameQr {
  Mat2 q_phi, q_psi;
  Cx r11, r12, r22;
};

FrameQr frame_qr(const Mat2& phi, const Mat2& psi) {
  Cx a[4] = {phi.e11, phi.e21, psi.e11, psi.e21};
  Cx b[4] = {phi.e12, phi.e22, psi.e12, psi.e22};
  auto dot = [](const Cx* u, const Cx* v) {
    Cx s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::conj(u[i]) * v[i];
    return s;
  };
  const double r11 = std::sqrt(dot(a, a).real());
  for (auto& x : a) x /= r11;
  Cx r12 = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const Cx p = dot(a, b);
    for (int i = 0; i < 4; ++i) b[i] -= p * a[i];
    r12 += p;
  }
  const double r22 = std::sqrt(dot(b, b).real());
  for (auto& x : b) x /= r22;
  return {Mat2{a[0], b[0], a[1], b[1]}, Mat2{a[2], b[2], a[3], b[3]}, r11, r12, r22};
}

std::string at_time(double t) {
  std::ostringstream os;
  os.precision(12);
  os << " at t=" << t;
  return os.str();
}

}  // namespace

State pack(const Mat2& phi, const Mat2& psi) {
  State y(16);
  put(y, 0, phi);
  put(y, 8, psi);
  return y;
}

Mat2 unpack(const State& y, int block) { return get(y, 8 * block); }

double conjoined_defect(const Mat2& phi, const Mat2& psi) {
  return (phi.adjoint() * psi - psi.adjoint() * phi).norm();
}

FrameView frame_view(const Mat2& phi, const Mat2& psi) {
  const FrameQr qr = frame_qr(phi, psi);
  FrameView v;
  v.phi_q = qr.q_phi;
  v.det_q = qr.q_phi.det();
  v.sigma_min = singular_values(qr.q_phi).first;
  return v;
}

HamiltonianRun solve_hamiltonian(const Scenario& s, const Mat2& phi0, const Mat2& psi0, const Window& w,
                                 const HamiltonianOptions& opts) {
  const double d0 = conjoined_defect(phi0, psi0);
  if (d0 > 1e-10 * (1.0 + phi0.norm() * psi0.norm())) {
    throw Error(ErrorCode::ConjoinedDrift, "initial data is not conjoined (defect " + std::to_string(d0) + ")");
  }
  HamiltonianRun run;
  run.real_data = s.tags.real_coefficients && is_real(phi0) && is_real(psi0);
  run.log_scale.push_back(0.0);
  run.defect.push_back(d0);

  Field field = [&s](double t, const State& y, State& dy) {
    const Coeffs c = s.at(t);
    const Mat2 phi = get(y, 0), psi = get(y, 8);
    put(dy, 0, c.A * phi + c.B * psi);
    put(dy, 8, c.C * phi - c.A.adjoint() * psi);
  };

  SolveOptions so;
  so.rtol = opts.rtol;
  so.atol = opts.atol;
  double log_scale = 0.0;
  so.on_accept = [&](double t, State& y) {
    Mat2 phi = get(y, 0), psi = get(y, 8);
    const double d = conjoined_defect(phi, psi);
    const double ratio = d / (1.0 + phi.norm() * psi.norm());
    run.max_defect_ratio = std::max(run.max_defect_ratio, ratio);
    if (ratio > opts.defect_tol) {
      throw Error(ErrorCode::ConjoinedDrift, "defect " + std::to_string(d) + at_time(t));
    }
    run.defect.push_back(d);
    const FrameQr qr = frame_qr(phi, psi);
    const auto [smin, smax] = singular_values(Mat2{qr.r11, qr.r12, 0.0, qr.r22});
    if (t < w.t1 && (smin < 1.0 / opts.renorm_bound || smax > opts.renorm_bound)) {
      log_scale += std::log(qr.r11.real() * qr.r22.real());
      put(y, 0, qr.q_phi);
      put(y, 8, qr.q_psi);
    }
    run.log_scale.push_back(log_scale);
  };
  run.traj = adaptive_solve(field, pack(phi0, psi0), w, so);
  return run;
}

std::vector<ZeroRecord> detect_det_zeros(const HamiltonianRun& run, double eps_zero) {
  const Trajectory& tr = run.traj;
  const double window = tr.t_last() - tr.t_first();
  const double max_spacing = 0.01 * window;

  std::vector<double> ts;
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) {
    const double h = tr.times[k + 1] - tr.times[k];
    const int nsub = std::max(8, static_cast<int>(std::ceil(h / max_spacing)));
    for (int j = 0; j < nsub; ++j) ts.push_back(tr.times[k] + h * j / nsub);
  }
  ts.push_back(tr.t_last());

  auto view = [&](double t) {
    const State y = tr.dense_eval(t);
    return frame_view(unpack(y, 0), unpack(y, 1));
  };
  std::vector<FrameView> vs;
  vs.reserve(ts.size());
  for (double t : ts) vs.push_back(view(t));

  auto accepted = [&](const FrameView& v) {
    const double n = v.phi_q.norm();
    return std::abs(v.det_q) <= eps_zero * (1.0 + n * n);
  };
  auto spacing_at = [&](std::size_t i) {
    const double left = i > 0 ? ts[i] - ts[i - 1] : ts[1] - ts[0];
    const double right = i + 1 < ts.size() ? ts[i + 1] - ts[i] : left;
    return std::min(left, right);
  };

  struct Found {
    ZeroRecord rec;
    double spacing;
  };
  std::vector<Found> found;

  if (run.real_data) {
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double fa = vs[i].det_q.real(), fb = vs[i + 1].det_q.real();
      if (fa == 0.0 || (fa > 0.0) == (fb > 0.0)) continue;
      double a = ts[i], b = ts[i + 1];
      const bool a_positive = fa > 0.0;
      for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        if ((view(m).det_q.real() > 0.0) == a_positive) {
          a = m;
        } else {
          b = m;
        }
      }
      const double tz = 0.5 * (a + b);
      const FrameView v = view(tz);
      if (std::abs(v.det_q.imag()) <= eps_zero && accepted(v)) {
        found.push_back({{tz, std::abs(v.det_q), ZeroKind::SignChange}, spacing_at(i)});
      }
    }
  }

  constexpr double inv_phi = 0.6180339887498949;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double s = vs[i].sigma_min;
    const bool left_ok = i == 0 || s < vs[i - 1].sigma_min;
    const bool right_ok = i + 1 == ts.size() || s <= vs[i + 1].sigma_min;
    if (!left_ok || !right_ok) continue;
    double a = i > 0 ? ts[i - 1] : ts[i];
    double b = i + 1 < ts.size() ? ts[i + 1] : ts[i];
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = view(x1).sigma_min, f2 = view(x2).sigma_min;
    for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = view(x1).sigma_min;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = view(x2).sigma_min;
      }
    }
    double tz = 0.5 * (a + b);
    FrameView v = view(tz);
    if (s < v.sigma_min) {
      tz = ts[i];
      v = vs[i];
    }
    if (accepted(v)) found.push_back({{tz, std::abs(v.det_q), ZeroKind::ModulusDip}, spacing_at(i)});
  }

  std::stable_sort(found.begin(), found.end(), [](const Found& x, const Found& y) { return x.rec.time < y.rec.time; });
  std::vector<ZeroRecord> out;
  double last_spacing = 0.0;
  for (const Found& f : found) {
    if (!out.empty() && f.rec.time - out.back().time <= 0.5 * std::max(last_spacing, f.spacing)) {
      if (out.back().kind == ZeroKind::ModulusDip && f.rec.kind == ZeroKind::SignChange) out.back() = f.rec;
      continue;
    }
    out.push_back(f.rec);
    last_spacing = f.spacing;
  }
  return out;
}

RiccatiRun solve_scalar_riccati(const ScalarFn& f, const ScalarFn& g, const ScalarFn& h, double y0, const Window& w,
                                double y_max, double rtol, double atol) {
  // Second component accumulates the integral of f y, the scalar analogue of
  // the tr(B Z) integral.
  Field field = [&](double t, const State& y, State& dy) {
    const double ft = f(t);
    dy[0] = -(ft * y[0] * y[0] + g(t) * y[0] + h(t));
    dy[1] = ft * y[0];
  };
  SolveOptions so;
  so.rtol = rtol;
  so.atol = atol;
  so.throw_on_underflow = false;
  so.stop = [y_max](double, const State& y) { return std::abs(y[0]) >= y_max; };
  RiccatiRun run;
  run.traj = adaptive_solve(field, {y0, 0.0}, w, so);
  if (!run.traj.events.empty()) {
    BlowupRecord b;
    b.escape_time = run.traj.t_last();
    b.last_norm = std::abs(run.traj.states.back()[0]);
    b.G_lower_bound = run.traj.states.front()[1];
    for (const State& s : run.traj.states) b.G_lower_bound = std::min(b.G_lower_bound, s[1]);
    run.blowup = b;
  }
  return run;
}

Mat2 riccati_z(const State& y) { return get(y, 0); }

RiccatiRun solve_matrix_riccati(const Scenario& s, const Mat2& z0, const Window& w, double y_max, double rtol,
                                double atol) {
  if (!is_hermitian(z0).is_hermitian) throw Error(ErrorCode::NotHermitian, "initial Riccati value");
  Field field = [&s](double t, const State& y, State& dy) {
    const Coeffs c = s.at(t);
    const Mat2 z = get(y, 0);
    put(dy, 0, c.C - z * c.B * z - c.A.adjoint() * z - z * c.A);
    dy[8] = (c.B * z).trace().real();
  };
  SolveOptions so;
  so.rtol = rtol;
  so.atol = atol;
  so.throw_on_underflow = false;
  so.on_accept = [](double, State& y) { put(y, 0, hermitian_part(get(y, 0))); };
  so.stop = [y_max](double, const State& y) { return get(y, 0).norm() >= y_max; };
  State y0(9, 0.0);
  put(y0, 0, hermitian_part(z0));
  RiccatiRun run;
  run.traj = adaptive_solve(field, y0, w, so);
  if (!run.traj.events.empty()) {
    BlowupRecord b;
    b.escape_time = run.traj.t_last();
    b.last_norm = get(run.traj.states.back(), 0).norm();
    b.G_lower_bound = 0.0;
    for (const State& st : run.traj.states) b.G_lower_bound = std::min(b.G_lower_bound, st[8]);
    run.blowup = b;
  }
  return run;
}

}  // namespace hamosc
