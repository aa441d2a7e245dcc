#include "hamosc/coefsys.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>

#include <gsl/gsl_spline.h>

#include "hamosc/error.hpp"

namespace hamosc {
namespace {

std::string fmt_time(double t) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t;
  return os.str();
}

// Flattened entry order: re/im of a11, a12, a21, a22, then B, then C.
constexpr int kSeries = 24;

std::array<double, kSeries> flatten(const Coeffs& c) {
  std::array<double, kSeries> out{};
  int k = 0;
  for (const Mat2* m : {&c.A, &c.B, &c.C}) {
    for (Cx z : {m->e11, m->e12, m->e21, m->e22}) {
      out[k++] = z.real();
      out[k++] = z.imag();
    }
  }
  return out;
}

Coeffs unflatten(const std::array<double, kSeries>& v) {
  auto mat = [&](int base) {
    return Mat2{{v[base], v[base + 1]}, {v[base + 2], v[base + 3]}, {v[base + 4], v[base + 5]},
                {v[base + 6], v[base + 7]}};
  };
  return {mat(0), mat(8), mat(16)};
}

struct SplineDeleter {
  void operator()(gsl_spline* s) const { gsl_spline_free(s); }
};

struct SplineSet {
  std::vector<double> times;
  std::vector<Coeffs> samples;
  std::vector<std::unique_ptr<gsl_spline, SplineDeleter>> splines;

  // Returns the exact sample at node times.
  const Coeffs* node(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it != times.end() && *it == t) return &samples[it - times.begin()];
    return nullptr;
  }
};

Mat2 pick(const Coeffs& c, CoeffKind which) {
  switch (which) {
    case CoeffKind::A: return c.A;
    case CoeffKind::B: return c.B;
    case CoeffKind::C: return c.C;
    case CoeffKind::SqrtB: return sqrt_psd(c.B);
  }
  return {};
}

}  // namespace

Coeffs Scenario::at(double t) const {
  if (!contains(t)) throw Error(ErrorCode::OutOfDomain, name + " at " + fmt_time(t));
  return eval(t);
}

double tol_pos(const Mat2& b) { return 1e-9 * (1.0 + b.norm()); }

double fd_step(double t) { return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(t)); }

Scenario from_table(const TabulatedCoeffs& tab, std::string name) {
  const std::size_t n = tab.times.size();
  if (n < 2 || tab.samples.size() != n) {
    throw Error(ErrorCode::InvalidInput, "table needs at least two rows with one sample each");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(tab.times[i] > tab.times[i - 1])) throw Error(ErrorCode::InvalidInput, "table times must increase");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Coeffs& c = tab.samples[i];
    if (!c.A.finite() || !c.B.finite() || !c.C.finite()) {
      throw Error(ErrorCode::InvalidInput, "non-finite sample at " + fmt_time(tab.times[i]));
    }
    if (!is_hermitian(c.B).is_hermitian || !is_hermitian(c.C).is_hermitian) {
      throw Error(ErrorCode::NonHermitianSample, fmt_time(tab.times[i]));
    }
  }

  auto set = std::make_shared<SplineSet>();
  set->times = tab.times;
  set->samples = tab.samples;
  const gsl_interp_type* kind = n >= 3 ? gsl_interp_cspline : gsl_interp_linear;
  std::vector<std::array<double, kSeries>> flat(n);
  for (std::size_t i = 0; i < n; ++i) flat[i] = flatten(tab.samples[i]);
  std::vector<double> column(n);
  for (int k = 0; k < kSeries; ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = flat[i][k];
    set->splines.emplace_back(gsl_spline_alloc(kind, n));
    gsl_spline_init(set->splines.back().get(), set->times.data(), column.data(), n);
  }

  Scenario s;
  s.name = std::move(name);
  s.family = "table";
  s.t0 = tab.times.front();
  s.t_end = tab.times.back();
  s.eval = [set](double t) {
    if (const Coeffs* c = set->node(t)) return *c;
    std::array<double, kSeries> v{};
    for (int k = 0; k < kSeries; ++k) v[k] = gsl_spline_eval(set->splines[k].get(), t, nullptr);
    return unflatten(v);
  };
  s.derivative = [set](double t) {
    std::array<double, kSeries> v{};
    for (int k = 0; k < kSeries; ++k) v[k] = gsl_spline_eval_deriv(set->splines[k].get(), t, nullptr);
    return unflatten(v);
  };
  s.tags = validate_scenario(s, {s.t0, s.t_end}, static_cast<int>(std::max<std::size_t>(n, 2))).tags;
  return s;
}

std::string coeff_csv_header() {
  std::string h = "t";
  for (char m : {'a', 'b', 'c'}) {
    for (const char* ij : {"11", "12", "21", "22"}) {
      for (const char* part : {"re", "im"}) {
        h += ',';
        h += part;
        h += '_';
        h += m;
        h += ij;
      }
    }
  }
  return h;
}

TabulatedCoeffs read_coeff_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty coefficient table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != coeff_csv_header()) throw Error(ErrorCode::ParseError, "unexpected coefficient table header");

  TabulatedCoeffs tab;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, kSeries + 1> v{};
    const char* p = line.data();
    const char* end = p + line.size();
    for (int k = 0; k <= kSeries; ++k) {
      while (p < end && *p == ' ') ++p;
      auto [next, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc{}) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(k + 1));
      }
      p = next;
      while (p < end && *p == ' ') ++p;
      if (k < kSeries) {
        if (p == end || *p != ',') throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + " is short");
        ++p;
      }
    }
    if (p != end) throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + " has extra columns");
    std::array<double, kSeries> entries{};
    std::copy(v.begin() + 1, v.end(), entries.begin());
    tab.times.push_back(v[0]);
    tab.samples.push_back(unflatten(entries));
  }
  return tab;
}

TabulatedCoeffs read_coeff_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  return read_coeff_csv(in);
}

Mat2 coeff_derivative(const Scenario& s, CoeffKind which, double t) {
  if (!s.contains(t)) throw Error(ErrorCode::OutOfDomain, s.name + " derivative at " + fmt_time(t));
  if (s.derivative) {
    const Coeffs d = s.derivative(t);
    if (which != CoeffKind::SqrtB) return pick(d, which);
    if (d.B == Mat2::zero()) return Mat2::zero();
  }
  const double h = fd_step(t);
  auto f = [&](double x) { return pick(s.eval(x), which); };
  if (t - h < s.t0) return (1.0 / (2.0 * h)) * (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h));
  if (t + h > s.t_end) return (1.0 / (2.0 * h)) * (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h));
  return (1.0 / (2.0 * h)) * (f(t + h) - f(t - h));
}

RatioFns ratio_fns(const Scenario& s) {
  if (!s.tags.b_diagonal) throw Error(ErrorCode::NotDiagonalB, s.name);
  auto guard = [](const Coeffs& c, int j, double t) {
    const Cx b = j == 1 ? c.B.e11 : c.B.e22;
    if (std::abs(b) <= tol_pos(c.B)) throw Error(ErrorCode::ZeroDiagonalB, "b" + std::to_string(j) + " at " + fmt_time(t));
    return b.real();
  };
  RatioFns out;
  out.r1 = [s, guard](double t) {
    const Coeffs c = s.at(t);
    return c.A.e12 / guard(c, 1, t);
  };
  out.r2 = [s, guard](double t) {
    const Coeffs c = s.at(t);
    return std::conj(c.A.e21) / guard(c, 2, t);
  };
  auto quotient_rule = [s, guard](int j) {
    return [s, guard, j](double t) -> Cx {
      const Coeffs c = s.at(t);
      const double b = guard(c, j, t);
      const Cx a = j == 1 ? c.A.e12 : std::conj(c.A.e21);
      if (s.derivative) {
        const Coeffs d = s.derivative(t);
        const Cx da = j == 1 ? d.A.e12 : std::conj(d.A.e21);
        const double db = (j == 1 ? d.B.e11 : d.B.e22).real();
        return (da * b - a * db) / (b * b);
      }
      const double h = fd_step(t);
      auto r = [&](double x) {
        const Coeffs cx = s.eval(x);
        return (j == 1 ? cx.A.e12 : std::conj(cx.A.e21)) / guard(cx, j, x);
      };
      if (t - h < s.t0) return (-3.0 * r(t) + 4.0 * r(t + h) - r(t + 2.0 * h)) / (2.0 * h);
      if (t + h > s.t_end) return (3.0 * r(t) - 4.0 * r(t - h) + r(t - 2.0 * h)) / (2.0 * h);
      return (r(t + h) - r(t - h)) / (2.0 * h);
    };
  };
  out.dr1 = quotient_rule(1);
  out.dr2 = quotient_rule(2);
  return out;
}

ValidationReport validate_scenario(const Scenario& s, const Window& w, int n_samples) {
  if (!(w.t1 > w.t0) || n_samples < 2) throw Error(ErrorCode::InvalidInput, "validation window is empty");
  ValidationReport rep;
  rep.tags = {true, true, true, true};
  auto is_real = [](const Mat2& m) {
    const double tol = tol_herm(m);
    return std::abs(m.e11.imag()) <= tol && std::abs(m.e12.imag()) <= tol && std::abs(m.e21.imag()) <= tol &&
           std::abs(m.e22.imag()) <= tol;
  };
  for (int i = 0; i < n_samples; ++i) {
    const double t = w.t0 + (w.t1 - w.t0) * i / (n_samples - 1);
    const Coeffs c = s.at(t);
    if (!c.A.finite() || !c.B.finite() || !c.C.finite()) {
      throw Error(ErrorCode::InvalidInput, "non-finite coefficients at " + fmt_time(t));
    }
    for (const auto& [m, label] : {std::pair{&c.B, "B"}, std::pair{&c.C, "C"}}) {
      const HermFlag hf = is_hermitian(*m);
      if (hf.max_asymmetry > rep.max_asymmetry) {
        rep.max_asymmetry = hf.max_asymmetry;
        rep.max_asymmetry_time = t;
      }
      if (!hf.is_hermitian) throw Error(ErrorCode::NotHermitian, std::string(label) + " at " + fmt_time(t));
    }
    const double tb = tol_herm(c.B);
    if (std::abs(c.B.e12) > tb || std::abs(c.B.e21) > tb) rep.tags.b_diagonal = false;
    const double lo = hermitian_eigenvalues(c.B).first;
    if (lo < -tb) rep.tags.b_psd = false;
    if (!(lo > tol_pos(c.B))) rep.tags.b_positive = false;
    if (!is_real(c.A) || !is_real(c.B) || !is_real(c.C)) rep.tags.real_coefficients = false;
  }
  if (!rep.tags.b_psd) rep.tags.b_positive = false;
  return rep;
}

}  // namespace hamosc
