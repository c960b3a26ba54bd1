#include "hlasdi/tape.hpp"

#include <cmath>

namespace hlasdi {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": shape mismatch (" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

Var Tape::leaf(const Mat& v) {
  Node n;
  n.op = Op::kLeaf;
  n.val = v;
  n.needs_grad = true;
  return {push(std::move(n))};
}

Var Tape::constant(Mat v) {
  Node n;
  n.op = Op::kConst;
  n.val = std::move(v);
  return {push(std::move(n))};
}

Var Tape::cref(const Mat& v) {
  Node n;
  n.op = Op::kConst;
  n.ext = &v;
  return {push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
  const Mat& va = val(a);
  const Mat& vb = val(b);
  if (va.cols() != vb.rows()) throw ShapeError("matmul: inner dimensions");
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val.noalias() = va * vb;
  return {push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
  require_same_shape(val(a), val(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val = val(a) + val(b);
  return {push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(val(a), val(b), "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val = val(a) - val(b);
  return {push(std::move(n))};
}

Var Tape::add_colvec(Var m, Var v) {
  const Mat& vm = val(m);
  const Mat& vv = val(v);
  if (vv.cols() != 1 || vv.rows() != vm.rows())
    throw ShapeError("add_colvec: vector shape");
  Node n;
  n.op = Op::kAddColVec;
  n.a = m.id;
  n.b = v.id;
  n.needs_grad = at(m).needs_grad || at(v).needs_grad;
  n.val = vm.colwise() + vv.col(0);
  return {push(std::move(n))};
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.s0 = s;
  n.needs_grad = at(a).needs_grad;
  n.val = s * val(a);
  return {push(std::move(n))};
}

Var Tape::cwise_mul(Var a, Var b) {
  require_same_shape(val(a), val(b), "cwise_mul");
  Node n;
  n.op = Op::kCwiseMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val = val(a).cwiseProduct(val(b));
  return {push(std::move(n))};
}

Var Tape::colscale(Var a, Mat w) {
  const Mat& va = val(a);
  if (w.rows() != 1 || w.cols() != va.cols())
    throw ShapeError("colscale: weight row shape");
  Node n;
  n.op = Op::kColScale;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = va.array().rowwise() * w.row(0).array();
  n.aux = std::move(w);
  return {push(std::move(n))};
}

Var Tape::sin(Var a) {
  Node n;
  n.op = Op::kSin;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = val(a).array().sin();
  return {push(std::move(n))};
}

Var Tape::cos(Var a) {
  Node n;
  n.op = Op::kCos;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = val(a).array().cos();
  return {push(std::move(n))};
}

Var Tape::abs(Var a) {
  Node n;
  n.op = Op::kAbs;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = val(a).array().abs();
  return {push(std::move(n))};
}

Var Tape::square(Var a) {
  Node n;
  n.op = Op::kSquare;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = val(a).array().square();
  return {push(std::move(n))};
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = Mat::Constant(1, 1, val(a).sum());
  return {push(std::move(n))};
}

Var Tape::mean(Var a) {
  Node n;
  n.op = Op::kMean;
  n.a = a.id;
  n.needs_grad = at(a).needs_grad;
  n.val = Mat::Constant(1, 1, val(a).mean());
  return {push(std::move(n))};
}

Var Tape::slice_cols(Var a, int begin, int count) {
  const Mat& va = val(a);
  if (begin < 0 || count < 0 || begin + count > va.cols())
    throw ShapeError("slice_cols: out of range");
  Node n;
  n.op = Op::kSliceCols;
  n.a = a.id;
  n.i0 = begin;
  n.i1 = count;
  n.needs_grad = at(a).needs_grad;
  n.val = va.middleCols(begin, count);
  return {push(std::move(n))};
}

Var Tape::slice_rows(Var a, int begin, int count) {
  const Mat& va = val(a);
  if (begin < 0 || count < 0 || begin + count > va.rows())
    throw ShapeError("slice_rows: out of range");
  Node n;
  n.op = Op::kSliceRows;
  n.a = a.id;
  n.i0 = begin;
  n.i1 = count;
  n.needs_grad = at(a).needs_grad;
  n.val = va.middleRows(begin, count);
  return {push(std::move(n))};
}

Var Tape::hcat(Var a, Var b) {
  const Mat& va = val(a);
  const Mat& vb = val(b);
  if (va.rows() != vb.rows()) throw ShapeError("hcat: row mismatch");
  Node n;
  n.op = Op::kHCat;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val.resize(va.rows(), va.cols() + vb.cols());
  n.val << va, vb;
  return {push(std::move(n))};
}

Var Tape::vcat(Var a, Var b) {
  const Mat& va = val(a);
  const Mat& vb = val(b);
  if (va.cols() != vb.cols()) throw ShapeError("vcat: column mismatch");
  Node n;
  n.op = Op::kVCat;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val.resize(va.rows() + vb.rows(), va.cols());
  n.val << va, vb;
  return {push(std::move(n))};
}

Var Tape::clamp(Var a, double bound) {
  Node n;
  n.op = Op::kClamp;
  n.a = a.id;
  n.s0 = bound;
  n.needs_grad = at(a).needs_grad;
  n.val = val(a).array().min(bound).max(-bound);
  return {push(std::move(n))};
}

namespace {

// One classical RK4 step of dy/dt = m y + beta; h scales per column.
// Returns the updated state; k1..k4 are scratch.
void rk4_step(const Mat& m, const Vec& beta, const Mat& y,
              const Eigen::RowVectorXd& h, Mat& k1, Mat& k2, Mat& k3, Mat& k4,
              Mat& out) {
  k1.noalias() = m * y;
  k1.colwise() += beta;
  out = y + (k1.array().rowwise() * (0.5 * h.array())).matrix();
  k2.noalias() = m * out;
  k2.colwise() += beta;
  out = y + (k2.array().rowwise() * (0.5 * h.array())).matrix();
  k3.noalias() = m * out;
  k3.colwise() += beta;
  out = y + (k3.array().rowwise() * h.array()).matrix();
  k4.noalias() = m * out;
  k4.colwise() += beta;
  out = y + ((k1 + 2.0 * k2 + 2.0 * k3 + k4).array().rowwise() *
             (h.array() / 6.0))
                .matrix();
}

}  // namespace

Var Tape::rk4_rollout(Var m, Var beta, Var y0, Mat h, int steps,
                      GuardMode mode) {
  const Mat& vm = val(m);
  const Mat& vb = val(beta);
  const Mat& vy = val(y0);
  if (vm.rows() != vm.cols() || vm.rows() != vy.rows())
    throw ShapeError("rk4_rollout: system shape");
  if (vb.rows() != vm.rows() || vb.cols() != 1)
    throw ShapeError("rk4_rollout: beta shape");
  if (h.rows() != 1 || h.cols() != vy.cols())
    throw ShapeError("rk4_rollout: step row shape");
  if (steps < 1) throw std::invalid_argument("rk4_rollout: steps >= 1");

  Node n;
  n.op = Op::kRk4Rollout;
  n.a = m.id;
  n.b = beta.id;
  n.c = y0.id;
  n.needs_grad =
      at(m).needs_grad || at(beta).needs_grad || at(y0).needs_grad;
  n.rk4 = std::make_unique<Rk4Cache>();
  n.rk4->steps = steps;
  n.rk4->mode = mode;
  n.rk4->h = std::move(h);
  n.rk4->states.reserve(steps + 1);
  n.rk4->states.push_back(vy);

  const Vec b = vb.col(0);
  Mat k1, k2, k3, k4, y;
  for (int s = 0; s < steps; ++s) {
    rk4_step(vm, b, n.rk4->states.back(), n.rk4->h.row(0), k1, k2, k3, k4, y);
    if (!((y.array().abs() <= kStateGuard).all())) {
      if (mode == GuardMode::kThrow)
        throw DivergenceError("latent state exceeded divergence guard", s);
      Mat mask = (y.array().abs() < kStateGuard).cast<double>();
      y = y.array().min(kStateGuard).max(-kStateGuard);
      n.rk4->clamp_masks.emplace_back(s, std::move(mask));
    }
    n.rk4->states.push_back(y);
  }
  n.val = n.rk4->states.back();
  return {push(std::move(n))};
}

Var Tape::rk4_grid(Var m, Var beta, Var y0, const Vec& times, int substeps,
                   GuardMode mode) {
  const Mat& vm = val(m);
  const Mat& vb = val(beta);
  const Mat& vy = val(y0);
  if (vm.rows() != vm.cols() || vm.rows() != vy.rows())
    throw ShapeError("rk4_grid: system shape");
  if (vb.rows() != vm.rows() || vb.cols() != 1)
    throw ShapeError("rk4_grid: beta shape");
  if (substeps < 1) throw std::invalid_argument("rk4_grid: substeps >= 1");
  if (times.size() < 1) throw std::invalid_argument("rk4_grid: empty grid");

  Node n;
  n.op = Op::kRk4Grid;
  n.a = m.id;
  n.b = beta.id;
  n.c = y0.id;
  n.i0 = substeps;
  n.needs_grad =
      at(m).needs_grad || at(beta).needs_grad || at(y0).needs_grad;
  n.rk4 = std::make_unique<Rk4Cache>();
  n.rk4->mode = mode;
  n.rk4->states.push_back(vy);

  const Vec b = vb.col(0);
  const int cols = int(vy.cols());
  Eigen::RowVectorXd hrow(cols);
  Mat k1, k2, k3, k4, y;
  n.val.resize(vy.rows(), vy.cols() * times.size());
  n.val.leftCols(cols) = vy;
  long global_step = 0;
  for (Eigen::Index j = 0; j + 1 < times.size(); ++j) {
    double dt = (times(j + 1) - times(j)) / substeps;
    hrow.setConstant(dt);
    for (int s = 0; s < substeps; ++s, ++global_step) {
      rk4_step(vm, b, n.rk4->states.back(), hrow, k1, k2, k3, k4, y);
      if (!((y.array().abs() <= kStateGuard).all())) {
        if (mode == GuardMode::kThrow)
          throw DivergenceError("latent state exceeded divergence guard",
                                global_step);
        Mat mask = (y.array().abs() < kStateGuard).cast<double>();
        y = y.array().min(kStateGuard).max(-kStateGuard);
        n.rk4->clamp_masks.emplace_back(int(global_step), std::move(mask));
      }
      n.rk4->states.push_back(y);
      n.rk4->dts.push_back(dt);
    }
    n.val.middleCols((j + 1) * cols, cols) = n.rk4->states.back();
  }
  n.rk4->steps = int(global_step);
  return {push(std::move(n))};
}

double Tape::scalar(Var v) const {
  const Mat& m = val(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("scalar: not 1x1");
  return m(0, 0);
}

void Tape::add_grad(int id, const Mat& g) {
  if (id < 0 || !nodes_[id].needs_grad) return;
  Mat& slot = grads_[id];
  if (slot.size() == 0)
    slot = g;
  else
    slot += g;
}

const Mat& Tape::grad(Var v) const {
  if (grads_.empty() || grads_[v.id].size() == 0) return empty_;
  return grads_[v.id];
}

void Tape::backward(Var out) {
  const Mat& m = val(out);
  if (m.rows() != 1 || m.cols() != 1)
    throw ShapeError("backward: output must be 1x1 (or pass a seed)");
  backward(out, Mat::Constant(1, 1, 1.0));
}

void Tape::backward(Var out, const Mat& seed) {
  require_same_shape(val(out), seed, "backward seed");
  grads_.assign(nodes_.size(), Mat());
  add_grad(out.id, seed);

  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || grads_[id].size() == 0) continue;
    const Mat& g = grads_[id];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kMatMul: {
        if (nodes_[n.a].needs_grad) {
          Mat ga;
          ga.noalias() = g * nodes_[n.b].v().transpose();
          add_grad(n.a, ga);
        }
        if (nodes_[n.b].needs_grad) {
          Mat gb;
          gb.noalias() = nodes_[n.a].v().transpose() * g;
          add_grad(n.b, gb);
        }
        break;
      }
      case Op::kAdd:
        add_grad(n.a, g);
        add_grad(n.b, g);
        break;
      case Op::kSub:
        add_grad(n.a, g);
        if (nodes_[n.b].needs_grad) add_grad(n.b, -g);
        break;
      case Op::kAddColVec:
        add_grad(n.a, g);
        if (nodes_[n.b].needs_grad) add_grad(n.b, g.rowwise().sum());
        break;
      case Op::kScale:
        if (nodes_[n.a].needs_grad) add_grad(n.a, n.s0 * g);
        break;
      case Op::kCwiseMul:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, g.cwiseProduct(nodes_[n.b].v()));
        if (nodes_[n.b].needs_grad)
          add_grad(n.b, g.cwiseProduct(nodes_[n.a].v()));
        break;
      case Op::kColScale:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, (g.array().rowwise() * n.aux.row(0).array()).matrix());
        break;
      case Op::kSin:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, g.cwiseProduct(nodes_[n.a].v().array().cos().matrix()));
        break;
      case Op::kCos:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a,
                   -g.cwiseProduct(nodes_[n.a].v().array().sin().matrix()));
        break;
      case Op::kAbs:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a,
                   g.cwiseProduct(nodes_[n.a].v().array().sign().matrix()));
        break;
      case Op::kSquare:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, 2.0 * g.cwiseProduct(nodes_[n.a].v()));
        break;
      case Op::kSum:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, Mat::Constant(nodes_[n.a].v().rows(),
                                      nodes_[n.a].v().cols(), g(0, 0)));
        break;
      case Op::kMean:
        if (nodes_[n.a].needs_grad)
          add_grad(n.a, Mat::Constant(nodes_[n.a].v().rows(),
                                      nodes_[n.a].v().cols(),
                                      g(0, 0) / double(nodes_[n.a].v().size())));
        break;
      case Op::kSliceCols:
        if (nodes_[n.a].needs_grad) {
          Mat ga = Mat::Zero(nodes_[n.a].v().rows(), nodes_[n.a].v().cols());
          ga.middleCols(n.i0, n.i1) = g;
          add_grad(n.a, ga);
        }
        break;
      case Op::kSliceRows:
        if (nodes_[n.a].needs_grad) {
          Mat ga = Mat::Zero(nodes_[n.a].v().rows(), nodes_[n.a].v().cols());
          ga.middleRows(n.i0, n.i1) = g;
          add_grad(n.a, ga);
        }
        break;
      case Op::kHCat: {
        const auto ca = nodes_[n.a].v().cols();
        add_grad(n.a, g.leftCols(ca));
        add_grad(n.b, g.rightCols(g.cols() - ca));
        break;
      }
      case Op::kVCat: {
        const auto ra = nodes_[n.a].v().rows();
        add_grad(n.a, g.topRows(ra));
        add_grad(n.b, g.bottomRows(g.rows() - ra));
        break;
      }
      case Op::kClamp:
        if (nodes_[n.a].needs_grad) {
          const Mat& x = nodes_[n.a].v();
          Mat mask = (x.array().abs() < n.s0).cast<double>();
          add_grad(n.a, g.cwiseProduct(mask));
        }
        break;
      case Op::kRk4Rollout:
        backward_rk4_rollout(n);
        break;
      case Op::kRk4Grid:
        backward_rk4_grid(n);
        break;
    }
  }
}

namespace {

// Discrete adjoint of one RK4 step. On entry `g` is dL/dy_out; on exit it is
// dL/dy_in. Accumulates into gm / gbeta when those are wanted.
void rk4_step_adjoint(const Mat& m, const Vec& beta, const Mat& y_in,
                      const Eigen::RowVectorXd& h, Mat& g, Mat* gm, Vec* gbeta,
                      Mat& k1, Mat& k2, Mat& k3, Mat& a2, Mat& a3, Mat& a4) {
  // Recompute the stage values from the stored pre-step state.
  k1.noalias() = m * y_in;
  k1.colwise() += beta;
  a2 = y_in + (k1.array().rowwise() * (0.5 * h.array())).matrix();
  k2.noalias() = m * a2;
  k2.colwise() += beta;
  a3 = y_in + (k2.array().rowwise() * (0.5 * h.array())).matrix();
  k3.noalias() = m * a3;
  k3.colwise() += beta;
  a4 = y_in + (k3.array().rowwise() * h.array()).matrix();
  // k4 = m * a4 + beta is not needed explicitly in the adjoint.

  auto cs = [&h](const Mat& x, double f) {
    return (x.array().rowwise() * (f * h.array())).matrix();
  };

  Mat gk4 = cs(g, 1.0 / 6.0);
  Mat gk3 = cs(g, 1.0 / 3.0);
  Mat gk2 = cs(g, 1.0 / 3.0);
  Mat gk1 = cs(g, 1.0 / 6.0);

  Mat mt_g;
  // k4 = m a4 + beta; a4 = y + h k3
  mt_g.noalias() = m.transpose() * gk4;
  if (gm) gm->noalias() += gk4 * a4.transpose();
  gk3 += cs(mt_g, 1.0);
  Mat gy = g + mt_g;
  // k3 = m a3 + beta; a3 = y + h/2 k2
  mt_g.noalias() = m.transpose() * gk3;
  if (gm) gm->noalias() += gk3 * a3.transpose();
  gk2 += cs(mt_g, 0.5);
  gy += mt_g;
  // k2 = m a2 + beta; a2 = y + h/2 k1
  mt_g.noalias() = m.transpose() * gk2;
  if (gm) gm->noalias() += gk2 * a2.transpose();
  gk1 += cs(mt_g, 0.5);
  gy += mt_g;
  // k1 = m y + beta
  mt_g.noalias() = m.transpose() * gk1;
  if (gm) gm->noalias() += gk1 * y_in.transpose();
  gy += mt_g;
  if (gbeta) *gbeta += (gk1 + gk2 + gk3 + gk4).rowwise().sum();
  g = std::move(gy);
}

}  // namespace

void Tape::backward_rk4_rollout(const Node& n) {
  const Rk4Cache& c = *n.rk4;
  const Mat& m = nodes_[n.a].v();
  const Vec beta = nodes_[n.b].v().col(0);
  const bool want_m = nodes_[n.a].needs_grad;
  const bool want_b = nodes_[n.b].needs_grad;
  const bool want_y = nodes_[n.c].needs_grad;

  Mat g = grads_[&n - nodes_.data()];
  Mat gm = Mat::Zero(m.rows(), m.cols());
  Vec gbeta = Vec::Zero(beta.size());
  Mat k1, k2, k3, a2, a3, a4;

  auto mask_it = c.clamp_masks.rbegin();
  for (int s = c.steps - 1; s >= 0; --s) {
    if (mask_it != c.clamp_masks.rend() && mask_it->first == s) {
      g = g.cwiseProduct(mask_it->second);
      ++mask_it;
    }
    rk4_step_adjoint(m, beta, c.states[s], c.h.row(0), g,
                     want_m ? &gm : nullptr, want_b ? &gbeta : nullptr, k1, k2,
                     k3, a2, a3, a4);
  }
  if (want_m) add_grad(n.a, gm);
  if (want_b) add_grad(n.b, gbeta);
  if (want_y) add_grad(n.c, g);
}

void Tape::backward_rk4_grid(const Node& n) {
  const Rk4Cache& c = *n.rk4;
  const Mat& m = nodes_[n.a].v();
  const Vec beta = nodes_[n.b].v().col(0);
  const bool want_m = nodes_[n.a].needs_grad;
  const bool want_b = nodes_[n.b].needs_grad;
  const bool want_y = nodes_[n.c].needs_grad;
  const int substeps = n.i0;
  const int cols = int(c.states[0].cols());

  const Mat& gall = grads_[&n - nodes_.data()];
  const int n_grid = int(gall.cols()) / cols;

  Mat g = gall.middleCols((n_grid - 1) * cols, cols);
  Mat gm = Mat::Zero(m.rows(), m.cols());
  Vec gbeta = Vec::Zero(beta.size());
  Mat k1, k2, k3, a2, a3, a4;
  Eigen::RowVectorXd hrow(cols);

  auto mask_it = c.clamp_masks.rbegin();
  for (int s = c.steps - 1; s >= 0; --s) {
    if (mask_it != c.clamp_masks.rend() && mask_it->first == s) {
      g = g.cwiseProduct(mask_it->second);
      ++mask_it;
    }
    hrow.setConstant(c.dts[s]);
    rk4_step_adjoint(m, beta, c.states[s], hrow, g, want_m ? &gm : nullptr,
                     want_b ? &gbeta : nullptr, k1, k2, k3, a2, a3, a4);
    // Crossing a grid point: fold in the gradient of that state column.
    if (s % substeps == 0 && s / substeps > 0)
      g += gall.middleCols((s / substeps) * cols, cols);
  }
  if (n_grid > 1) g += gall.leftCols(cols);
  if (want_m) add_grad(n.a, gm);
  if (want_b) add_grad(n.b, gbeta);
  if (want_y) add_grad(n.c, g);
}

void AdamState::match(const std::vector<Mat>& params) {
  for (size_t i = m.size(); i < params.size(); ++i) {
    m.push_back(Mat::Zero(params[i].rows(), params[i].cols()));
    v.push_back(Mat::Zero(params[i].rows(), params[i].cols()));
  }
}

void adam_step(std::vector<Mat>& params, const std::vector<Mat>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: parameter/gradient count mismatch");
  state.match(params);
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const Mat& g = grads[i];
    if (g.size() == 0) continue;  // unreached parameter: zero gradient
    if (!g.allFinite())
      throw NonFiniteGradientError("non-finite gradient in adam_step");
    if (g.rows() != params[i].rows() || g.cols() != params[i].cols())
      throw ShapeError("adam_step: gradient shape mismatch");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    params[i].array() -= lr * (state.m[i].array() / c1) /
                         ((state.v[i].array() / c2).sqrt() + state.eps);
  }
}

}  // namespace hlasdi
