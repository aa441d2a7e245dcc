#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hamosc/mat2.hpp"

namespace hamosc {

/// Closed time interval [t0, t1].
struct Window {
  double t0 = 0.0;
  double t1 = 1.0;
  double length() const { return t1 - t0; }
};

/// The coefficient triple of the Hamiltonian system at one time.
struct Coeffs {
  Mat2 A, B, C;
};

/// Structural flags. Families set them by construction; validate_scenario
/// recomputes them from samples.
struct Tags {
  bool b_diagonal = false;
  bool b_psd = false;
  bool b_positive = false;
  bool real_coefficients = false;
};

enum class CoeffKind { A, B, C, SqrtB };

struct Scenario {
  std::string name;
  std::string family;
  double t0 = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
  std::function<Coeffs(double)> eval;
  /// Empty when only finite differences are available.
  std::function<Coeffs(double)> derivative;
  Tags tags;

  bool contains(double t) const { return t >= t0 && t <= t_end; }
  /// Throws Error(OutOfDomain) outside [t0, t_end].
  Coeffs at(double t) const;
};

using Params = std::map<std::string, double, std::less<>>;

/// Built-in parametric families: harmonic, euler, vector_schrodinger,
/// ones_B_zero_drift, ones_B_euler, ones_B_alpha_conditions, diag_B.
Scenario make_family(std::string_view family_id, const Params& params);
std::vector<std::string> family_names();

/// Constant coefficients; analytic derivatives are zero.
Scenario make_constant(std::string name, const Coeffs& c);

struct TabulatedCoeffs {
  std::vector<double> times;
  std::vector<Coeffs> samples;
};

/// Cubic-spline interpolated scenario on [times.front(), times.back()].
Scenario from_table(const TabulatedCoeffs& tab, std::string name = "table");

/// Reads the 25-column CSV layout (t, then re/im of a11..a22, b11..b22,
/// c11..c22 in row-major order).
TabulatedCoeffs read_coeff_csv(std::istream& in);
TabulatedCoeffs read_coeff_csv_file(const std::string& path);
std::string coeff_csv_header();

/// Analytic derivative when the scenario provides one, otherwise a central
/// finite difference with h = cbrt(eps) * max(1, |t|), one-sided at the edges.
Mat2 coeff_derivative(const Scenario& s, CoeffKind which, double t);

/// Finite-difference step used throughout.
double fd_step(double t);

/// r1 = a12 / b1 and r2 = conj(a21) / b2 with their derivatives.
struct RatioFns {
  std::function<Cx(double)> r1, r2, dr1, dr2;
};

/// Requires tags.b_diagonal. The returned callables throw
/// Error(ZeroDiagonalB) at times where the relevant b_j vanishes.
RatioFns ratio_fns(const Scenario& s);

struct ValidationReport {
  Tags tags;
  double max_asymmetry = 0.0;
  double max_asymmetry_time = 0.0;
};

/// Samples the window uniformly; throws Error(NotHermitian) when B or C fails
/// the Hermitian test at a sample.
ValidationReport validate_scenario(const Scenario& s, const Window& w, int n_samples = 256);

/// Positivity margin used to tell B > 0 from B >= 0.
double tol_pos(const Mat2& b);

}  // namespace hamosc
