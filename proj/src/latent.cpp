#include "hlasdi/latent.hpp"

#include <cmath>

namespace hlasdi {

LatentCoefficients LatentCoefficients::zero(int K, int L) {
  LatentCoefficients c;
  c.C.assign(size_t(K), Mat::Zero(L, L));
  c.b = Vec::Zero(L);
  return c;
}

bool LatentCoefficients::all_finite() const {
  if (!b.allFinite()) return false;
  for (const auto& m : C)
    if (!m.allFinite()) return false;
  return true;
}

Vec LatentState::flat() const {
  const int K = order(), L = dim();
  Vec y(K * L);
  for (int k = 0; k < K; ++k) y.segment(k * L, L) = derivatives[k];
  return y;
}

LatentState LatentState::from_flat(const Vec& y, int K, int L) {
  if (y.size() != K * L) throw ShapeError("from_flat: size");
  LatentState s;
  for (int k = 0; k < K; ++k) s.derivatives.push_back(y.segment(k * L, L));
  return s;
}

Vec latent_rhs(const LatentCoefficients& coeffs, const LatentState& state) {
  if (coeffs.order() != state.order())
    throw ShapeError("latent_rhs: derivative count mismatch");
  Vec out = coeffs.b;
  for (int k = 0; k < coeffs.order(); ++k)
    out.noalias() += coeffs.C[k] * state.derivatives[k];
  return out;
}

Mat companion_matrix(const LatentCoefficients& coeffs) {
  const int K = coeffs.order(), L = coeffs.dim();
  Mat m = Mat::Zero(K * L, K * L);
  for (int k = 0; k + 1 < K; ++k)
    m.block(k * L, (k + 1) * L, L, L).setIdentity();
  for (int k = 0; k < K; ++k)
    m.block((K - 1) * L, k * L, L, L) = coeffs.C[k];
  return m;
}

Vec companion_offset(const LatentCoefficients& coeffs) {
  const int K = coeffs.order(), L = coeffs.dim();
  Vec beta = Vec::Zero(K * L);
  beta.tail(L) = coeffs.b;
  return beta;
}

namespace {

void guard_or_throw(Mat& y, GuardMode mode, long step) {
  if ((y.array().abs() <= kStateGuard).all()) return;
  if (mode == GuardMode::kThrow)
    throw DivergenceError("latent state exceeded divergence guard", step);
  y = y.array().min(kStateGuard).max(-kStateGuard);
}

}  // namespace

Mat rk4_rollout_plain(const Mat& m, const Vec& beta, Mat y,
                      const Eigen::RowVectorXd& h, int steps, GuardMode mode) {
  Mat k1, k2, k3, k4, tmp;
  for (int s = 0; s < steps; ++s) {
    k1.noalias() = m * y;
    k1.colwise() += beta;
    tmp = y + (k1.array().rowwise() * (0.5 * h.array())).matrix();
    k2.noalias() = m * tmp;
    k2.colwise() += beta;
    tmp = y + (k2.array().rowwise() * (0.5 * h.array())).matrix();
    k3.noalias() = m * tmp;
    k3.colwise() += beta;
    tmp = y + (k3.array().rowwise() * h.array()).matrix();
    k4.noalias() = m * tmp;
    k4.colwise() += beta;
    y += ((k1 + 2.0 * k2 + 2.0 * k3 + k4).array().rowwise() *
          (h.array() / 6.0))
             .matrix();
    guard_or_throw(y, mode, s);
  }
  return y;
}

Mat rk4_grid_plain(const Mat& m, const Vec& beta, const Vec& y0,
                   const Vec& times, int substeps, GuardMode mode) {
  if (substeps < 1) throw std::invalid_argument("rk4_grid_plain: substeps");
  Mat out(y0.size(), times.size());
  out.col(0) = y0;
  Mat y = y0;
  Eigen::RowVectorXd h(1);
  long step = 0;
  for (Eigen::Index j = 0; j + 1 < times.size(); ++j) {
    h.setConstant((times(j + 1) - times(j)) / substeps);
    for (int s = 0; s < substeps; ++s, ++step) {
      Mat k1 = m * y + beta;
      Mat k2 = m * (y + 0.5 * h(0) * k1) + beta;
      Mat k3 = m * (y + 0.5 * h(0) * k2) + beta;
      Mat k4 = m * (y + h(0) * k3) + beta;
      y += (h(0) / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      guard_or_throw(y, mode, step);
    }
    out.col(j + 1) = y;
  }
  return out;
}

CoeffVars register_coeffs(Tape& tape, const LatentCoefficients& coeffs) {
  CoeffVars cv;
  for (const auto& c : coeffs.C) cv.C.push_back(tape.leaf(c));
  cv.b = tape.leaf(coeffs.b);
  return cv;
}

Var companion_on_tape(Tape& tape, const CoeffVars& cv, int L) {
  const int K = int(cv.C.size());
  Var bottom = cv.C[0];
  for (int k = 1; k < K; ++k) bottom = tape.hcat(bottom, cv.C[k]);
  if (K == 1) return bottom;
  Mat top = Mat::Zero((K - 1) * L, K * L);
  top.block(0, L, (K - 1) * L, (K - 1) * L).setIdentity();
  return tape.vcat(tape.constant(std::move(top)), bottom);
}

Var companion_offset_on_tape(Tape& tape, const CoeffVars& cv, int L) {
  const int K = int(cv.C.size());
  if (K == 1) return cv.b;
  return tape.vcat(tape.constant(Mat::Zero((K - 1) * L, 1)), cv.b);
}

Var rk4_integrate(Tape& tape, const CoeffVars& cv, Var y0, double t0,
                  double t1, int steps, GuardMode mode) {
  if (t1 < t0) throw std::invalid_argument("rk4_integrate: t1 >= t0");
  if (steps < 1) throw std::invalid_argument("rk4_integrate: steps >= 1");
  const int L = int(tape.val(cv.b).rows());
  Var m = companion_on_tape(tape, cv, L);
  Var beta = companion_offset_on_tape(tape, cv, L);
  if (t1 == t0) return y0;
  Vec times = Vec::LinSpaced(steps + 1, t0, t1);
  return tape.rk4_grid(m, beta, y0, times, 1, mode);
}

std::vector<LatentState> rk4_integrate_states(const LatentCoefficients& coeffs,
                                              const LatentState& initial,
                                              double t0, double t1,
                                              int steps) {
  const int K = coeffs.order(), L = coeffs.dim();
  if (t1 < t0) throw std::invalid_argument("rk4_integrate: t1 >= t0");
  if (t1 == t0) return {initial};
  Vec times = Vec::LinSpaced(steps + 1, t0, t1);
  Mat states = rk4_grid_plain(companion_matrix(coeffs),
                              companion_offset(coeffs), initial.flat(), times,
                              1, GuardMode::kThrow);
  std::vector<LatentState> out;
  for (Eigen::Index j = 0; j < states.cols(); ++j)
    out.push_back(LatentState::from_flat(states.col(j), K, L));
  return out;
}

Mat estimate_top_derivative(const Vec& times, const std::vector<Mat>& encoded,
                            double w1, double w2) {
  const int K = int(encoded.size());
  if (K < 1) throw std::invalid_argument("estimate_top_derivative: K >= 1");
  if (K == 1) {
    w1 = 1.0;
    w2 = 0.0;
  }
  if (w1 < 0.0 || w2 < 0.0 || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw std::invalid_argument(
        "estimate_top_derivative: weights must be convex");
  Mat est = Mat::Zero(encoded.back().rows(), encoded.back().cols());
  if (w1 > 0.0)
    est += w1 * fd::differentiate_columns(times, encoded[K - 1], 1);
  if (w2 > 0.0) {
    if (K < 2)
      throw std::invalid_argument(
          "estimate_top_derivative: second branch needs K >= 2");
    est += w2 * fd::differentiate_columns(times, encoded[K - 2], 2);
  }
  return est;
}

}  // namespace hlasdi
