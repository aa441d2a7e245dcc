#pragma once

#include <complex>
#include <optional>
#include <utility>

namespace hamosc {

using Cx = std::complex<double>;

/// Row-major complex 2x2 matrix.
struct Mat2 {
  Cx e11{}, e12{}, e21{}, e22{};

  static constexpr Mat2 zero() { return {}; }
  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 ones() { return {1.0, 1.0, 1.0, 1.0}; }
  static constexpr Mat2 diag(Cx a, Cx b) { return {a, 0.0, 0.0, b}; }

  Mat2 adjoint() const { return {std::conj(e11), std::conj(e21), std::conj(e12), std::conj(e22)}; }
  Cx det() const { return e11 * e22 - e12 * e21; }
  Cx trace() const { return e11 + e22; }
  /// Frobenius norm.
  double norm() const;
  double max_abs() const;
  bool finite() const;

  Mat2& operator+=(const Mat2& o);
  Mat2& operator-=(const Mat2& o);
  Mat2& operator*=(Cx s);

  friend bool operator==(const Mat2&, const Mat2&) = default;
};

Mat2 operator+(Mat2 a, const Mat2& b);
Mat2 operator-(Mat2 a, const Mat2& b);
Mat2 operator-(const Mat2& a);
Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator*(Cx s, Mat2 a);
Mat2 operator*(Mat2 a, Cx s);

/// Scale-relative thresholds shared by every module.
double tol_herm(const Mat2& m);
double tol_sing(const Mat2& m);
inline constexpr double kTolRank = 1e-10;

/// Returns nullopt when |det| <= tol_sing(m).
std::optional<Mat2> try_inverse(const Mat2& m);
/// Throws Error(Singular) when |det| <= tol_sing(m).
Mat2 inverse(const Mat2& m);

struct DetTrInv {
  Cx det;
  Cx tr;
  std::optional<Mat2> inv;
};
DetTrInv det_tr_inv(const Mat2& m);

struct HermFlag {
  bool is_hermitian = false;
  double max_asymmetry = 0.0;
};
HermFlag is_hermitian(const Mat2& m, double tol);
inline HermFlag is_hermitian(const Mat2& m) { return is_hermitian(m, tol_herm(m)); }

Mat2 hermitian_part(const Mat2& m);

/// Eigenvalues (ascending) of the Hermitian part of `m`.
std::pair<double, double> hermitian_eigenvalues(const Mat2& m);

/// Singular values (ascending).
std::pair<double, double> singular_values(const Mat2& m);

/// Throws Error(NotHermitian) when `m` is not Hermitian within tol_herm.
bool is_psd(const Mat2& m, double tol);

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Throws Error(NotPSD).
Mat2 sqrt_psd(const Mat2& m);

struct SandwichSolution {
  Mat2 F;
  double residual = 0.0;
  int rank = 4;
};

/// Solves S*F*M = M. Invertible S yields inv(S); otherwise the
/// minimum-norm least-squares solution of the vectorized 4x4 system.
SandwichSolution solve_sandwich(const Mat2& S, const Mat2& M);

}  // namespace hamosc
