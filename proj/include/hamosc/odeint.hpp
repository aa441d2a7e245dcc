#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hamosc/coefsys.hpp"
#include "hamosc/mat2.hpp"

namespace hamosc {

using State = std::vector<double>;
/// Writes dy/dt at (t, y) into dy (pre-sized).
using Field = std::function<void(double t, const State& y, State& dy)>;

struct Event {
  std::string kind;
  double time = 0.0;
  std::string detail;
};

struct SolveOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Zero selects the initial step automatically.
  double h0 = 0.0;
  double h_max = 0.0;
  long max_steps = 20'000'000;
  /// Called after every accepted step; may modify the state in place
  /// (projection, renormalization).
  std::function<void(double t, State& y)> on_accept;
  /// Checked after on_accept; true ends the integration with an "escape" event.
  std::function<bool(double t, const State& y)> stop;
  /// When false a collapsing step ends the run with a "step_underflow" event
  /// instead of throwing.
  bool throw_on_underflow = true;
};

/// Dense solution of an ODE. Segment k spans [times[k], times[k+1]] and
/// carries the Dormand-Prince continuous extension.
class Trajectory {
 public:
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Event> events;

  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
  double t_first() const { return times.front(); }
  double t_last() const { return times.back(); }
  bool has_event(std::string_view kind) const;

  /// Exact stored state at node times; 4th-order interpolant in between.
  State dense_eval(double t) const;
  /// Index of the segment containing t (nodes belong to the following segment).
  std::size_t segment_of(double t) const;

  void add_segment(std::vector<double> rcont);

 private:
  std::vector<std::vector<double>> rcont_;
};

/// Dormand-Prince 5(4) with PI step control and dense output. Throws
/// StepUnderflow when the step drops below 1e-14 max(1, |t|).
Trajectory adaptive_solve(const Field& field, const State& y0, const Window& w, const SolveOptions& opts = {});

/// Adaptive Gauss-Kronrod 7-15 quadrature with error <= tol (1 + |result|).
/// Throws Error(QuadratureNoConvergence).
double quadrature(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Matrix Hamiltonian flow

/// State layout: re/im of Phi (row-major) then Psi.
State pack(const Mat2& phi, const Mat2& psi);
Mat2 unpack(const State& y, int block);

double conjoined_defect(const Mat2& phi, const Mat2& psi);

struct HamiltonianRun {
  Trajectory traj;
  /// Accumulated log det R of the frame renormalizations, one entry per node.
  /// The unnormalized det Phi equals stored det Phi times exp(log_scale).
  std::vector<double> log_scale;
  std::vector<double> defect;
  double max_defect_ratio = 0.0;
  bool real_data = false;

  Mat2 phi(double t) const { return unpack(traj.dense_eval(t), 0); }
  Mat2 psi(double t) const { return unpack(traj.dense_eval(t), 1); }
  double log_scale_at(double t) const { return log_scale[traj.segment_of(t)]; }
};

struct HamiltonianOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Rescale the frame [Phi; Psi] when its singular values leave
  /// [1/renorm_bound, renorm_bound].
  double renorm_bound = 1e2;
  double defect_tol = 1e-8;
};

/// Integrates Phi' = A Phi + B Psi, Psi' = C Phi - A* Psi. Throws
/// Error(ConjoinedDrift) when the start is not conjoined or the defect bound
/// fails later.
HamiltonianRun solve_hamiltonian(const Scenario& s, const Mat2& phi0, const Mat2& psi0, const Window& w,
                                 const HamiltonianOptions& opts = {});

enum class ZeroKind { SignChange, ModulusDip };

struct ZeroRecord {
  double time = 0.0;
  double residual = 0.0;
  ZeroKind kind = ZeroKind::ModulusDip;
};

/// Scale-free view of the frame: Phi_Q is the upper block of the
/// orthonormalized [Phi; Psi].
struct FrameView {
  Mat2 phi_q;
  Cx det_q;
  double sigma_min = 0.0;
};
FrameView frame_view(const Mat2& phi, const Mat2& psi);

/// Zeros of det Phi on the trajectory window.
std::vector<ZeroRecord> detect_det_zeros(const HamiltonianRun& run, double eps_zero = 1e-7);

// ---------------------------------------------------------------------------
// Riccati flows

struct BlowupRecord {
  double escape_time = 0.0;
  double last_norm = 0.0;
  double G_lower_bound = 0.0;
  bool numerical = true;
};

struct RiccatiRun {
  Trajectory traj;
  std::optional<BlowupRecord> blowup;
};

using ScalarFn = std::function<double(double)>;

/// y' + f y^2 + g y + h = 0.
RiccatiRun solve_scalar_riccati(const ScalarFn& f, const ScalarFn& g, const ScalarFn& h, double y0, const Window& w,
                                double y_max = 1e8, double rtol = 1e-10, double atol = 1e-12);

/// Z' + Z B Z + A* Z + Z A - C = 0 with G = integral of tr(B Z) carried as
/// the ninth state component. Throws Error(NotHermitian) on Z0.
RiccatiRun solve_matrix_riccati(const Scenario& s, const Mat2& z0, const Window& w, double y_max = 1e8,
                                double rtol = 1e-10, double atol = 1e-12);

Mat2 riccati_z(const State& y);

}  // namespace hamosc
