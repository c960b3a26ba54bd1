#pragma once

#include <vector>

#include "hlasdi/fd.hpp"
#include "hlasdi/tape.hpp"

namespace hlasdi {

/// Per-parameter coefficients of the order-K linear latent ODE
///   D^K z = C[K-1] D^{K-1} z + ... + C[0] z + b.
struct LatentCoefficients {
  std::vector<Mat> C;  // K matrices, each L x L
  Vec b;               // L

  static LatentCoefficients zero(int K, int L);
  int order() const { return int(C.size()); }
  int dim() const { return int(b.size()); }
  bool all_finite() const;
};

/// Latent state: the K derivative vectors of orders 0..K-1.
struct LatentState {
  std::vector<Vec> derivatives;

  int order() const { return int(derivatives.size()); }
  int dim() const { return int(derivatives.front().size()); }
  /// Companion embedding: derivatives stacked into one K*L vector.
  Vec flat() const;
  static LatentState from_flat(const Vec& y, int K, int L);
};

/// Right-hand side C[K-1] z^{(K-1)} + ... + C[0] z^{(0)} + b.
Vec latent_rhs(const LatentCoefficients& coeffs, const LatentState& state);

/// First-order companion form of the latent ODE: dy/dt = M y + beta with
/// y the stacked derivatives.
Mat companion_matrix(const LatentCoefficients& coeffs);
Vec companion_offset(const LatentCoefficients& coeffs);

/// Unrecorded batched RK4 over the companion system (used at inference and
/// during greedy sampling, where no gradients are needed). Column j of `y`
/// advances by h(j) per step.
Mat rk4_rollout_plain(const Mat& m, const Vec& beta, Mat y,
                      const Eigen::RowVectorXd& h, int steps, GuardMode mode);

/// Unrecorded integration along a time grid; returns all grid states as
/// columns of a (K*L) x times.size() matrix.
Mat rk4_grid_plain(const Mat& m, const Vec& beta, const Vec& y0,
                   const Vec& times, int substeps, GuardMode mode);

/// Tape-side coefficient handles.
struct CoeffVars {
  std::vector<Var> C;
  Var b;
};

CoeffVars register_coeffs(Tape& tape, const LatentCoefficients& coeffs);
Var companion_on_tape(Tape& tape, const CoeffVars& cv, int L);
Var companion_offset_on_tape(Tape& tape, const CoeffVars& cv, int L);

/// Differentiable RK4 over [t0, t1] with uniform steps; returns the recorded
/// trajectory (all internal states plus the endpoint, as columns). t1 == t0
/// returns the initial state unchanged.
Var rk4_integrate(Tape& tape, const CoeffVars& cv, Var y0, double t0,
                  double t1, int steps, GuardMode mode = GuardMode::kThrow);

/// Value-level convenience wrapper around rk4_integrate.
std::vector<LatentState> rk4_integrate_states(const LatentCoefficients& coeffs,
                                              const LatentState& initial,
                                              double t0, double t1, int steps);

/// Convex-combination estimate of D^K z from the encoded derivative series:
/// w1 * d/dt(series K-1) + w2 * d^2/dt^2(series K-2). Series are L x N_t on
/// shared times. For K == 1 only the first branch exists and w1 is forced
/// to 1.
Mat estimate_top_derivative(const Vec& times, const std::vector<Mat>& encoded,
                            double w1, double w2);

}  // namespace hlasdi
