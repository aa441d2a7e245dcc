#include "hamosc/mat2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hamosc/error.hpp"

namespace hamosc {

double Mat2::norm() const {
  return std::sqrt(std::norm(e11) + std::norm(e12) + std::norm(e21) + std::norm(e22));
}

double Mat2::max_abs() const {
  return std::max({std::abs(e11), std::abs(e12), std::abs(e21), std::abs(e22)});
}

bool Mat2::finite() const {
  auto ok = [](Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
  return ok(e11) && ok(e12) && ok(e21) && ok(e22);
}

Mat2& Mat2::operator+=(const Mat2& o) {
  e11 += o.e11;
  e12 += o.e12;
  e21 += o.e21;
  e22 += o.e22;
  return *this;
}

Mat2& Mat2::operator-=(const Mat2& o) {
  e11 -= o.e11;
  e12 -= o.e12;
  e21 -= o.e21;
  e22 -= o.e22;
  return *this;
}

Mat2& Mat2::operator*=(Cx s) {
  e11 *= s;
  e12 *= s;
  e21 *= s;
  e22 *= s;
  return *this;
}

Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
Mat2 operator-(const Mat2& a) { return {-a.e11, -a.e12, -a.e21, -a.e22}; }
Mat2 operator*(Cx s, Mat2 a) { return a *= s; }
Mat2 operator*(Mat2 a, Cx s) { return a *= s; }

Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.e11 * b.e11 + a.e12 * b.e21, a.e11 * b.e12 + a.e12 * b.e22,
          a.e21 * b.e11 + a.e22 * b.e21, a.e21 * b.e12 + a.e22 * b.e22};
}

double tol_herm(const Mat2& m) { return 1e-10 * (1.0 + m.norm()); }
double tol_sing(const Mat2& m) { return 1e-12 * (1.0 + m.norm()); }

std::optional<Mat2> try_inverse(const Mat2& m) {
  const Cx d = m.det();
  if (!(std::abs(d) > tol_sing(m))) return std::nullopt;
  return Mat2{m.e22 / d, -m.e12 / d, -m.e21 / d, m.e11 / d};
}

Mat2 inverse(const Mat2& m) {
  auto inv = try_inverse(m);
  if (!inv) throw Error(ErrorCode::Singular, "|det| = " + std::to_string(std::abs(m.det())));
  return *inv;
}

DetTrInv det_tr_inv(const Mat2& m) { return {m.det(), m.trace(), try_inverse(m)}; }

HermFlag is_hermitian(const Mat2& m, double tol) {
  const double asym = (m - m.adjoint()).max_abs();
  return {asym <= tol, asym};
}

Mat2 hermitian_part(const Mat2& m) { return 0.5 * (m + m.adjoint()); }

std::pair<double, double> hermitian_eigenvalues(const Mat2& m) {
  const Mat2 h = hermitian_part(m);
  const double a = h.e11.real();
  const double d = h.e22.real();
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), std::abs(h.e12));
  return {mean - rad, mean + rad};
}

std::pair<double, double> singular_values(const Mat2& m) {
  const double fro2 = std::norm(m.e11) + std::norm(m.e12) + std::norm(m.e21) + std::norm(m.e22);
  const double adet = std::abs(m.det());
  const double disc = std::sqrt(std::max(0.0, (fro2 - 2.0 * adet) * (fro2 + 2.0 * adet)));
  const double smax = std::sqrt(0.5 * (fro2 + disc));
  const double smin = smax > 0.0 ? adet / smax : 0.0;
  return {smin, smax};
}

bool is_psd(const Mat2& m, double tol) {
  if (!is_hermitian(m).is_hermitian) {
    throw Error(ErrorCode::NotHermitian, "PSD test needs a Hermitian argument");
  }
  return hermitian_eigenvalues(m).first >= -tol;
}

Mat2 sqrt_psd(const Mat2& m) {
  if (!is_psd(m, tol_herm(m))) throw Error(ErrorCode::NotPSD, "square root of an indefinite matrix");
  const Mat2 h = hermitian_part(m);
  const double tr = h.e11.real() + h.e22.real();
  const double s = std::sqrt(std::max(0.0, h.det().real()));
  const double denom2 = tr + 2.0 * s;
  if (denom2 <= std::numeric_limits<double>::min()) return Mat2::zero();
  Mat2 root = (1.0 / std::sqrt(denom2)) * (h + s * Mat2::identity());
  return hermitian_part(root);
}

SandwichSolution solve_sandwich(const Mat2& S, const Mat2& M) {
  SandwichSolution out;
  if (auto inv = try_inverse(S)) {
    out.F = *inv;
  } else {
    // vec(S F M) = (M^T kron S) vec(F), column-major vec.
    const Cx s[2][2] = {{S.e11, S.e12}, {S.e21, S.e22}};
    const Cx mm[2][2] = {{M.e11, M.e12}, {M.e21, M.e22}};
    Eigen::Matrix4cd K;
    Eigen::Vector4cd rhs;
    for (int c = 0; c < 2; ++c) {
      for (int r = 0; r < 2; ++r) {
        rhs(r + 2 * c) = mm[r][c];
        for (int b = 0; b < 2; ++b) {
          for (int a = 0; a < 2; ++a) K(r + 2 * c, a + 2 * b) = mm[b][c] * s[r][a];
        }
      }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix4cd> cod;
    cod.setThreshold(kTolRank);
    cod.compute(K);
    out.rank = static_cast<int>(cod.rank());
    const Eigen::Vector4cd f = out.rank == 0 ? Eigen::Vector4cd::Zero().eval() : cod.solve(rhs).eval();
    out.F = Mat2{f(0), f(2), f(1), f(3)};
  }
  out.residual = (S * out.F * M - M).norm();
  return out;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::NonHermitianSample: return "NonHermitianSample";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ZeroDiagonalB: return "ZeroDiagonalB";
    case ErrorCode::NotDiagonalB: return "NotDiagonalB";
    case ErrorCode::NotPositiveB: return "NotPositiveB";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::ConjoinedDrift: return "ConjoinedDrift";
    case ErrorCode::QuadratureNoConvergence: return "QuadratureNoConvergence";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::CriteriaConflict: return "CriteriaConflict";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace hamosc
