#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hamosc/coefsys.hpp"
#include "hamosc/odeint.hpp"

namespace hamosc {

/// Linear coefficient g and free term h of y' + f y^2 + g y + h = 0.
struct Kernel {
  ScalarFn g, h;
};

using Partition = std::vector<double>;

/// I_{g,h}(xi; t) = int_xi^t exp(-int_tau^t g) h dtau, computed from
/// I' = h - g I, I(xi) = 0.
double I_gh(const Kernel& k, double xi, double t);

struct Thm22Result {
  bool holds = true;
  /// (subinterval index, time) of the first positive value.
  std::optional<std::pair<int, double>> first_violation;
};

/// Checks int_{t_k}^t exp(int_{t_k}^tau [g - I_{g,h}(t_k; s)] ds) h dtau <= 0
/// on every subinterval of the partition, at every integrator node and on
/// `grid_per_interval` uniform points.
Thm22Result thm22_check(const Kernel& k, const Partition& part, const Window& w, int grid_per_interval = 64);

struct PartitionSearch {
  bool found = false;
  Partition partition;
  /// Left end of the subinterval that could not be extended.
  double stuck_at = 0.0;
};

/// Greedy left-to-right partition for thm22_check. `found == false` means the
/// sufficient condition was not certified on this window.
PartitionSearch partition_search(const Kernel& k, const Window& w, int max_points = 64, int grid = 1024,
                                 int grid_per_interval = 64);

/// Integrates y' + f y^2 + g y + h = 0 from y_0 and the same equation with h1
/// from y1_0; true when y0 exists wherever y1 does and stays above it.
/// Throws Error(HypothesisViolated) when f >= 0, h <= h1 or y_0 >= y1_0 fails
/// on a 256-point grid.
bool thm21_compare_oracle(const ScalarFn& f, const ScalarFn& g, const ScalarFn& h, const ScalarFn& h1, double y1_0,
                          double y_0, const Window& w);

// ---------------------------------------------------------------------------
// Diagonal B

enum class ChiConvention { Corrected, Literal };

struct ChiProfile {
  int j = 1;
  ScalarFn values;
  /// True where |b_{3-j}(t)| <= tol_pos and the -c_jj branch applies.
  std::function<bool(double)> b_zero_branch;
};

/// chi_j = -c_jj - |a_{3-j,j}|^2 / b_{3-j} (or -c_jj where b_{3-j} vanishes).
/// Throws Error(NotDiagonalB).
ChiProfile chi_diag(const Scenario& s, int j, ChiConvention conv = ChiConvention::Corrected);

enum class SignConvention { PlusC12, MinusC12 };

/// Ingredients of the bound on |z12 + ratio|: q = conj(a11) + a22, the ratios
/// r1 = a12/b1, r2 = conj(a21)/b2 with derivatives, and c12.
struct EnvelopeInputs {
  std::function<Cx(double)> q, r1, r2, dr1, dr2, c12;
};

EnvelopeInputs diagonal_envelope_inputs(const Scenario& s);

/// Frak-M and the two weighted integrals, tabulated on a window.
class Envelope {
 public:
  Envelope(EnvelopeInputs in, const Window& w, SignConvention sign, int grid = 4096);

  /// max over tau in [t0, t] of |exp(-int_tau^t q)(r1 - r2)(tau)|.
  double frak_m(double t) const;
  /// int_t0^t |exp(-int_tau^t q)(r2' + r2 q +- c12)| dtau.
  double e3(double t) const;
  /// int_t0^t |exp(-int_tau^t q)(r1' + r1 q +- c12)| dtau.
  double e4(double t) const;
  double bracket3(double t) const { return frak_m(t) + e3(t); }
  double bracket4(double t) const { return frak_m(t) + e4(t); }
  const Window& window() const { return w_; }

 private:
  double log_gap(double t) const;

  EnvelopeInputs in_;
  Window w_;
  Trajectory integrals_;  // R, E3, E4
  std::vector<double> grid_t_, running_max_;
};

/// Envelope-based chi_3, chi_4 for B = diag(b1, b2) > 0 on a window.
class Chi34Profile {
 public:
  Chi34Profile(const Scenario& s, const Window& w, SignConvention sign, int grid = 4096);
  double chi3(double t) const;
  double chi4(double t) const;
  const Envelope& envelope() const { return env_; }

 private:
  Scenario s_;
  Envelope env_;
};

/// Throws Error(NotDiagonalB) / Error(NotPositiveB).
Chi34Profile chi34_profile(const Scenario& s, const Window& w, SignConvention sign);

struct Chi34 {
  double chi3 = 0.0, chi4 = 0.0;
};
Chi34 chi34(const Scenario& s, double t, SignConvention sign);
double frak_m(const Scenario& s, double t);

enum class Subsystem { Sys28, Sys211 };

/// Integrates the pair (z11, y) resp. (z22, v) together with the other
/// diagonal entry of Z, which the y (v) equation needs. State layout:
/// {z, re w, im w, other diagonal}.
Trajectory subsystem_solve(const Scenario& s, Subsystem which, double z0, Cx w0, const Window& w,
                           double other_diag0 = 0.0);

struct Lemma22Result {
  bool held = true;
  /// End of the stretch where z11, z22 >= 0 and the bound was checked.
  double checked_until = 0.0;
  /// First time a diagonal entry went negative, if any.
  std::optional<double> hypothesis_violation;
  /// Largest (|y| - bound) / (1 + bound) seen, same for v.
  double worst_excess = -1.0;
};

/// Integrates both subsystems from z11(t0), z22(t0) >= 0 and y(t0) = v(t0) = 0
/// and compares |y|, |v| with their bounds on the stretch where the diagonal
/// entries stay nonnegative.
Lemma22Result lemma22_check(const Scenario& s, const Window& w, double z11_0 = 1.0, double z22_0 = 1.0);

}  // namespace hamosc
