#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "hlasdi/errors.hpp"

namespace hlasdi {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Handle into a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : uint8_t {
  kLeaf,
  kConst,
  kMatMul,
  kAdd,
  kSub,
  kAddColVec,
  kScale,
  kCwiseMul,
  kColScale,
  kSin,
  kCos,
  kAbs,
  kSquare,
  kSum,
  kMean,
  kSliceCols,
  kSliceRows,
  kHCat,
  kVCat,
  kClamp,
  kRk4Rollout,
  kRk4Grid,
};

/// How the fused integrators react when a state exceeds the guard bound.
enum class GuardMode { kThrow, kClamp };

/// Divergence guard for latent states.
inline constexpr double kStateGuard = 1e6;

struct Rk4Cache;

struct Node {
  Op op = Op::kConst;
  int a = -1, b = -1, c = -1;
  int i0 = 0, i1 = 0;
  double s0 = 0.0;
  bool needs_grad = false;
  Mat val;
  Mat aux;                 // op-specific constant payload (colscale row, ...)
  const Mat* ext = nullptr;  // external constant storage
  std::unique_ptr<Rk4Cache> rk4;

  const Mat& v() const { return ext ? *ext : val; }
};

/// Per-node state cache of a fused RK4 node, kept for the reverse sweep.
struct Rk4Cache {
  std::vector<Mat> states;       // state after each internal step; [0] = y0
  std::vector<double> dts;       // per-step dt (grid variant)
  Mat h;                         // 1 x N per-column dt (rollout variant)
  std::vector<std::pair<int, Mat>> clamp_masks;  // (step, pass-through mask)
  int steps = 0;
  GuardMode mode = GuardMode::kThrow;
};

/// Record of a forward computation over dense matrices. Reverse-mode
/// gradients are computed by backward(); values of recorded nodes stay
/// available until the tape is destroyed. Single-owner during construction,
/// read-only afterwards.
class Tape {
 public:
  /// Trainable input; gradients accumulate here.
  Var leaf(const Mat& v);
  /// Constant owned by the tape.
  Var constant(Mat v);
  /// Constant stored elsewhere; the caller guarantees its lifetime.
  Var cref(const Mat& v);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// m + v broadcast over columns (v is a column vector).
  Var add_colvec(Var m, Var v);
  Var scale(Var a, double s);
  Var cwise_mul(Var a, Var b);
  /// Scale column j by w(0, j); w is a constant.
  Var colscale(Var a, Mat w);
  Var sin(Var a);
  Var cos(Var a);
  Var abs(Var a);
  Var square(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var slice_cols(Var a, int begin, int count);
  Var slice_rows(Var a, int begin, int count);
  Var hcat(Var a, Var b);
  Var vcat(Var a, Var b);
  /// Clamp to [-bound, bound]; gradient passes only where unclamped.
  Var clamp(Var a, double bound);

  /// Integrate dy/dt = m y + beta with classical RK4 for `steps` steps,
  /// column j advancing by h(0, j) per step. Returns the endpoint states.
  Var rk4_rollout(Var m, Var beta, Var y0, Mat h, int steps, GuardMode mode);

  /// Integrate a single state along the time grid, `substeps` RK4 steps per
  /// interval. Returns all grid states as columns (including the initial).
  Var rk4_grid(Var m, Var beta, Var y0, const Vec& times, int substeps,
               GuardMode mode);

  const Mat& val(Var v) const { return nodes_[v.id].v(); }
  double scalar(Var v) const;

  /// Reverse sweep from a 1x1 output (seed 1) or arbitrary seed.
  void backward(Var out);
  void backward(Var out, const Mat& seed);

  /// Gradient accumulated in the last backward; empty if the node was not
  /// reachable or does not require gradients.
  const Mat& grad(Var v) const;

  size_t size() const { return nodes_.size(); }
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }

 private:
  int push(Node n);
  Node& at(Var v) { return nodes_[v.id]; }
  const Node& at(Var v) const { return nodes_[v.id]; }
  void add_grad(int id, const Mat& g);
  void backward_rk4_rollout(const Node& n);
  void backward_rk4_grid(const Node& n);

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  Mat empty_;
};

/// Bias-corrected Adam over a flat list of parameter matrices.
struct AdamState {
  std::vector<Mat> m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  /// Initialize (or extend) moment buffers to match `params`.
  void match(const std::vector<Mat>& params);
};

/// One Adam update. Throws NonFiniteGradientError on non-finite gradients.
void adam_step(std::vector<Mat>& params, const std::vector<Mat>& grads,
               AdamState& state, double lr);

}  // namespace hlasdi
