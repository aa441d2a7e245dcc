#include <cmath>
#include <numbers>
#include <set>

#include "hamosc/coefsys.hpp"
#include "hamosc/error.hpp"

namespace hamosc {
namespace {

constexpr Cx kI{0.0, 1.0};

class ParamReader {
 public:
  ParamReader(std::string_view family, const Params& params) : family_(family), params_(params) {}

  double required(const std::string& key) {
    auto it = params_.find(key);
    if (it == params_.end()) {
      throw Error(ErrorCode::MissingParam, family_ + " needs parameter '" + key + "'");
    }
    used_.insert(key);
    return it->second;
  }

  double get(const std::string& key, double fallback) {
    auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    used_.insert(key);
    return it->second;
  }

  void finish() const {
    for (const auto& [key, value] : params_) {
      if (!used_.count(key)) {
        throw Error(ErrorCode::InvalidInput, family_ + " does not take parameter '" + key + "'");
      }
    }
  }

 private:
  std::string family_;
  const Params& params_;
  std::set<std::string, std::less<>> used_;
};

Scenario harmonic(ParamReader& p) {
  Scenario s;
  s.t0 = p.get("t0", 0.0);
  const Coeffs c{Mat2::zero(), Mat2::identity(), -Mat2::identity()};
  s.eval = [c](double) { return c; };
  s.derivative = [](double) { return Coeffs{}; };
  s.tags = {true, true, true, true};
  return s;
}

Scenario zero(ParamReader& p) {
  Scenario s;
  s.t0 = p.get("t0", 0.0);
  s.eval = [](double) { return Coeffs{}; };
  s.derivative = [](double) { return Coeffs{}; };
  s.tags = {true, true, false, true};
  return s;
}

// B = I, A = 0, C = diag(-c/t^2, -c/t^2): two copies of the Euler equation.
Scenario euler(ParamReader& p) {
  Scenario s;
  const double c = p.required("c");
  s.t0 = p.get("t0", 1.0);
  if (s.t0 <= 0.0) throw Error(ErrorCode::InvalidInput, "euler family needs t0 > 0");
  s.eval = [c](double t) {
    const double v = -c / (t * t);
    return Coeffs{Mat2::zero(), Mat2::identity(), Mat2::diag(v, v)};
  };
  s.derivative = [c](double t) {
    const double v = 2.0 * c / (t * t * t);
    return Coeffs{Mat2::zero(), Mat2::zero(), Mat2::diag(v, v)};
  };
  s.tags = {true, true, true, true};
  return s;
}

// phi'' + K(t) phi = 0 with K = [[mu, 10i], [-10i, -t^2]],
// mu = p1 sin(l1 t + th1) + p2 sin(l2 t + th2).  The caller asserts that
// l1 and l2 are rationally independent; the default ratio is sqrt(2).
Scenario vector_schrodinger(ParamReader& p) {
  Scenario s;
  const double p1 = p.get("p1", 1.0);
  const double p2 = p.get("p2", 1.0);
  const double l1 = p.get("lambda1", 1.0);
  const double l2 = p.get("lambda2", std::numbers::sqrt2 * l1);
  const double th1 = p.get("theta1", 0.0);
  const double th2 = p.get("theta2", 0.0);
  const double coupling = p.get("coupling", 10.0);
  if (l1 == 0.0 || l2 == 0.0) throw Error(ErrorCode::InvalidInput, "lambda1 and lambda2 must be nonzero");
  s.t0 = p.get("t0", 0.0);
  s.eval = [=](double t) {
    const double mu = p1 * std::sin(l1 * t + th1) + p2 * std::sin(l2 * t + th2);
    const Mat2 K{mu, coupling * kI, -coupling * kI, -t * t};
    return Coeffs{Mat2::zero(), Mat2::identity(), -K};
  };
  s.derivative = [=](double t) {
    const double dmu = p1 * l1 * std::cos(l1 * t + th1) + p2 * l2 * std::cos(l2 * t + th2);
    return Coeffs{Mat2::zero(), Mat2::zero(), Mat2::diag(-dmu, 2.0 * t)};
  };
  s.tags = {true, true, true, coupling == 0.0};
  return s;
}

// B = ones. A = [[a, -a], [b, -b]] has vanishing row sums and
// C = (sigma/4) ones + gamma * w w^T with w = (1, -1)/sqrt(2), so that
// c11 + 2 Re c12 + c22 = sigma.
Scenario ones_b_zero_drift(ParamReader& p) {
  Scenario s;
  const double a = p.get("a", 0.5);
  const double b = p.get("b", 0.5);
  const double sigma = p.get("sigma", -1.0);
  const double gamma = p.get("gamma", 0.0);
  s.t0 = p.get("t0", 0.0);
  const Mat2 A{a, -a, b, -b};
  const Mat2 C{sigma / 4 + gamma / 2, sigma / 4 - gamma / 2, sigma / 4 - gamma / 2, sigma / 4 + gamma / 2};
  const Coeffs c{A, Mat2::ones(), C};
  s.eval = [c](double) { return c; };
  s.derivative = [](double) { return Coeffs{}; };
  s.tags = {false, true, false, true};
  return s;
}

// B = ones, row sums of A equal alpha/t and c11 + 2 Re c12 + c22 equals
// (alpha - alpha^2)/t^2, for t >= 1.
Scenario ones_b_euler(ParamReader& p) {
  Scenario s;
  const double alpha = p.required("alpha");
  s.t0 = p.get("t0", 1.0);
  if (s.t0 <= 0.0) throw Error(ErrorCode::InvalidInput, "ones_B_euler needs t0 > 0");
  s.eval = [alpha](double t) {
    return Coeffs{(alpha / (2.0 * t)) * Mat2::ones(), Mat2::ones(),
                  ((alpha - alpha * alpha) / (4.0 * t * t)) * Mat2::ones()};
  };
  s.derivative = [alpha](double t) {
    return Coeffs{(-alpha / (2.0 * t * t)) * Mat2::ones(), Mat2::zero(),
                  (-(alpha - alpha * alpha) / (2.0 * t * t * t)) * Mat2::ones()};
  };
  s.tags = {false, true, false, true};
  return s;
}

// B = ones, row sums of A equal r(t) = r0 + r1 t (positive, nondecreasing),
// c11 + 2 Re c12 + c22 = sigma.
Scenario ones_b_alpha_conditions(ParamReader& p) {
  Scenario s;
  const double r0 = p.get("r0", 1.0);
  const double r1 = p.get("r1", 0.0);
  const double sigma = p.get("sigma", 0.0);
  s.t0 = p.get("t0", 0.0);
  if (r1 < 0.0 || r0 + r1 * s.t0 <= 0.0) {
    throw Error(ErrorCode::InvalidInput, "ones_B_alpha_conditions needs r(t) positive and nondecreasing");
  }
  s.eval = [=](double t) {
    return Coeffs{(0.5 * (r0 + r1 * t)) * Mat2::ones(), Mat2::ones(), (sigma / 4.0) * Mat2::ones()};
  };
  s.derivative = [=](double) { return Coeffs{(0.5 * r1) * Mat2::ones(), Mat2::zero(), Mat2::zero()}; };
  s.tags = {false, true, false, true};
  return s;
}

// Diagonal B with entries affine in t: every entry x takes x + x_t * t.
Scenario diag_b(ParamReader& p) {
  struct Affine {
    double v = 0.0, slope = 0.0;
    double at(double t) const { return v + slope * t; }
  };
  auto real_entry = [&](const std::string& key, bool required) {
    Affine e;
    e.v = required ? p.required(key) : p.get(key, 0.0);
    e.slope = p.get(key + "_t", 0.0);
    return e;
  };
  struct CxAffine {
    Affine re, im;
    Cx at(double t) const { return {re.at(t), im.at(t)}; }
    Cx slope() const { return {re.slope, im.slope}; }
  };
  auto cx_entry = [&](const std::string& key) {
    return CxAffine{real_entry(key + "_re", false), real_entry(key + "_im", false)};
  };
  Scenario s;
  const Affine b1 = real_entry("b1", true);
  const Affine b2 = real_entry("b2", true);
  const CxAffine a11 = cx_entry("a11"), a12 = cx_entry("a12"), a21 = cx_entry("a21"), a22 = cx_entry("a22");
  const Affine c11 = real_entry("c11", false);
  const Affine c22 = real_entry("c22", false);
  const CxAffine c12 = cx_entry("c12");
  s.t0 = p.get("t0", 0.0);
  s.eval = [=](double t) {
    return Coeffs{Mat2{a11.at(t), a12.at(t), a21.at(t), a22.at(t)}, Mat2::diag(b1.at(t), b2.at(t)),
                  Mat2{c11.at(t), c12.at(t), std::conj(c12.at(t)), c22.at(t)}};
  };
  s.derivative = [=](double) {
    return Coeffs{Mat2{a11.slope(), a12.slope(), a21.slope(), a22.slope()}, Mat2::diag(b1.slope, b2.slope),
                  Mat2{c11.slope, c12.slope(), std::conj(c12.slope()), c22.slope}};
  };
  const bool real = a11.im.v == 0 && a11.im.slope == 0 && a12.im.v == 0 && a12.im.slope == 0 &&
                    a21.im.v == 0 && a21.im.slope == 0 && a22.im.v == 0 && a22.im.slope == 0 &&
                    c12.im.v == 0 && c12.im.slope == 0;
  const bool constant_b = b1.slope == 0 && b2.slope == 0;
  const bool psd = constant_b && b1.v >= 0 && b2.v >= 0;
  s.tags = {true, psd, psd && b1.v > 0 && b2.v > 0, real};
  return s;
}

}  // namespace

std::vector<std::string> family_names() {
  return {"harmonic", "zero", "euler", "vector_schrodinger", "ones_B_zero_drift", "ones_B_euler",
          "ones_B_alpha_conditions", "diag_B"};
}

Scenario make_family(std::string_view family_id, const Params& params) {
  ParamReader reader(family_id, params);
  Scenario s;
  if (family_id == "harmonic") {
    s = harmonic(reader);
  } else if (family_id == "zero") {
    s = zero(reader);
  } else if (family_id == "euler") {
    s = euler(reader);
  } else if (family_id == "vector_schrodinger") {
    s = vector_schrodinger(reader);
  } else if (family_id == "ones_B_zero_drift") {
    s = ones_b_zero_drift(reader);
  } else if (family_id == "ones_B_euler") {
    s = ones_b_euler(reader);
  } else if (family_id == "ones_B_alpha_conditions") {
    s = ones_b_alpha_conditions(reader);
  } else if (family_id == "diag_B") {
    s = diag_b(reader);
  } else {
    throw Error(ErrorCode::UnknownFamily, std::string(family_id));
  }
  reader.finish();
  s.family = std::string(family_id);
  s.name = s.family;
  return s;
}

Scenario make_constant(std::string name, const Coeffs& c) {
  Scenario s;
  s.name = std::move(name);
  s.family = "constant";
  s.eval = [c](double) { return c; };
  s.derivative = [](double) { return Coeffs{}; };
  const bool diag = c.B.e12 == Cx{} && c.B.e21 == Cx{};
  bool psd = false, positive = false;
  if (is_hermitian(c.B).is_hermitian) {
    const auto [lo, hi] = hermitian_eigenvalues(c.B);
    psd = lo >= -tol_herm(c.B);
    positive = lo > tol_pos(c.B);
  }
  auto real = [](const Mat2& m) {
    return m.e11.imag() == 0 && m.e12.imag() == 0 && m.e21.imag() == 0 && m.e22.imag() == 0;
  };
  s.tags = {diag, psd, positive, real(c.A) && real(c.B) && real(c.C)};
  return s;
}

}  // namespace hamosc
