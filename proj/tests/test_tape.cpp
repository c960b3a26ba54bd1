#include <cmath>
#include <functional>

#include "doctest.h"
#include "hlasdi/rng.hpp"
#include "hlasdi/tape.hpp"
#include "support/grad_check.hpp"

using namespace hlasdi;
using testsupport::rel_err;

namespace {

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Builds a scalar expression from a differentiated leaf and a constant.
using Builder = std::function<Var(Tape&, Var leaf, const Mat& aux)>;

// Checks tape gradients of `build` against central differences at a few
// random entries.
void check_builder(const Builder& build, Rng& rng, int rows, int cols,
                   int trials, double tol = 1e-5) {
  for (int trial = 0; trial < trials; ++trial) {
    Mat p0 = random_mat(rng, rows, cols);
    Mat aux = random_mat(rng, rows, cols);
    Tape t;
    Var leaf = t.leaf(p0);
    Var out = build(t, leaf, aux);
    t.backward(out);
    const Mat g = t.grad(leaf);
    REQUIRE(g.size() == p0.size());

    auto f = [&](const std::vector<Mat>& p) -> double {
      Tape tt;
      return tt.scalar(build(tt, tt.leaf(p[0]), aux));
    };
    for (int probe = 0; probe < 3; ++probe) {
      Eigen::Index r = Eigen::Index(rng.below(uint64_t(rows)));
      Eigen::Index c = Eigen::Index(rng.below(uint64_t(cols)));
      double fdg = testsupport::central_diff(f, {p0}, 0, r, c);
      CHECK(rel_err(g(r, c), fdg) < tol);
    }
  }
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("identity matmul and sin at zero") {
  Tape t;
  Mat x(4, 1);
  x << 0.3, -0.2, 0.9, 0.0;
  Var vx = t.leaf(x);
  Var w = t.constant(Mat::Identity(4, 4));
  Var y = t.matmul(w, vx);
  CHECK((t.val(y) - x).cwiseAbs().maxCoeff() == 0.0);

  Tape t2;
  Var z = t2.leaf(Mat::Zero(1, 1));
  Var s = t2.sin(z);
  CHECK(t2.scalar(s) == 0.0);
  t2.backward(s);
  CHECK(t2.grad(z)(0, 0) == 1.0);  // cos(0)
}

TEST_CASE("sum gradient is all ones; abs subgradient at 0 is 0") {
  Tape t;
  Mat x(5, 1);
  x << 1.0, -2.0, 0.0, 3.0, -0.5;
  Var vx = t.leaf(x);
  t.backward(t.sum(vx));
  CHECK((t.grad(vx) - Mat::Ones(5, 1)).cwiseAbs().maxCoeff() == 0.0);

  Tape t2;
  Var v2 = t2.leaf(Mat::Constant(1, 1, -2.0));
  t2.backward(t2.sum(t2.abs(v2)));
  CHECK(t2.grad(v2)(0, 0) == -1.0);

  Tape t3;
  Var v3 = t3.leaf(x);
  t3.backward(t3.sum(t3.abs(v3)));
  CHECK(t3.grad(v3)(2, 0) == 0.0);
}

TEST_CASE("forward is purely functional") {
  Rng rng(123);
  Mat w = random_mat(rng, 3, 3), x = random_mat(rng, 3, 2);
  auto run = [&]() {
    Tape t;
    return t.scalar(t.sum(t.sin(t.matmul(t.leaf(w), t.cref(x)))));
  };
  CHECK(run() == run());
}

TEST_CASE("three-layer MLP forward equals a straight-line re-evaluation") {
  Rng rng(42);
  Mat w1 = random_mat(rng, 6, 4), b1 = random_mat(rng, 6, 1);
  Mat w2 = random_mat(rng, 5, 6), b2 = random_mat(rng, 5, 1);
  Mat w3 = random_mat(rng, 2, 5), b3 = random_mat(rng, 2, 1);
  Mat x = random_mat(rng, 4, 7);

  Tape t;
  Var h1 = t.sin(t.add_colvec(t.matmul(t.leaf(w1), t.cref(x)), t.leaf(b1)));
  Var h2 = t.sin(t.add_colvec(t.matmul(t.leaf(w2), h1), t.leaf(b2)));
  Var out = t.add_colvec(t.matmul(t.leaf(w3), h2), t.leaf(b3));

  Mat direct = ((w1 * x).colwise() + b1.col(0)).array().sin();
  direct = ((w2 * direct).colwise() + b2.col(0)).array().sin();
  direct = (w3 * direct).colwise() + b3.col(0);
  CHECK((t.val(out) - direct).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(7);

  SUBCASE("matmul lhs") {
    check_builder(
        [](Tape& t, Var leaf, const Mat& aux) {
          return t.sum(t.matmul(leaf, t.cref(aux)));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("matmul rhs") {
    check_builder(
        [](Tape& t, Var leaf, const Mat& aux) {
          return t.sum(t.matmul(t.cref(aux), leaf));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("add and cwise_mul") {
    check_builder(
        [](Tape& t, Var leaf, const Mat& aux) {
          return t.sum(t.cwise_mul(t.add(leaf, t.cref(aux)), leaf));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("sub and square") {
    check_builder(
        [](Tape& t, Var leaf, const Mat& aux) {
          return t.sum(t.square(t.sub(leaf, t.cref(aux))));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("sin times cos") {
    check_builder(
        [](Tape& t, Var leaf, const Mat&) {
          return t.sum(t.cwise_mul(t.sin(leaf), t.cos(leaf)));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("abs via mean") {
    check_builder(
        [](Tape& t, Var leaf, const Mat&) { return t.mean(t.abs(leaf)); },
        rng, 4, 4, 8);
  }
  SUBCASE("scale") {
    check_builder(
        [](Tape& t, Var leaf, const Mat&) {
          return t.sum(t.scale(leaf, -2.5));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("slices and concatenation") {
    check_builder(
        [](Tape& t, Var leaf, const Mat&) {
          Var top = t.slice_rows(leaf, 0, 2);
          Var rest = t.slice_rows(leaf, 2, 2);
          Var cat = t.vcat(rest, top);
          Var left = t.slice_cols(cat, 0, 2);
          Var right = t.slice_cols(cat, 2, 2);
          return t.sum(t.square(t.hcat(right, left)));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("colscale and add_colvec") {
    Mat w(1, 4);
    w << 0.5, -1.5, 2.0, 0.25;
    check_builder(
        [w](Tape& t, Var leaf, const Mat& aux) {
          Var v = t.slice_cols(leaf, 0, 1);
          return t.sum(t.colscale(t.add_colvec(t.cref(aux), v), w));
        },
        rng, 4, 4, 8);
  }
  SUBCASE("clamp passes gradient only inside the bounds") {
    check_builder(
        [](Tape& t, Var leaf, const Mat&) {
          return t.sum(t.square(t.clamp(leaf, 0.5)));
        },
        rng, 4, 4, 8);
  }
}

TEST_CASE("gradient of a composite expression matches finite differences") {
  Rng rng(99);
  Mat x0 = random_mat(rng, 4, 5);
  Mat cw(1, 5);
  cw << 1.0, 0.5, -0.5, 2.0, 1.5;

  auto build = [&](Tape& t, Var w, Var b) {
    Var h = t.sin(t.add_colvec(t.matmul(w, t.cref(x0)), b));
    Var y = t.cwise_mul(h, t.cos(h));
    return t.sum(t.abs(t.colscale(y, cw)));
  };
  auto f = [&](const std::vector<Mat>& p) -> double {
    Tape t;
    return t.scalar(build(t, t.leaf(p[0]), t.leaf(p[1])));
  };

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Mat> p = {random_mat(rng, 3, 4), random_mat(rng, 3, 1)};
    Tape t;
    Var w = t.leaf(p[0]);
    Var b = t.leaf(p[1]);
    t.backward(build(t, w, b));
    for (size_t pi = 0; pi < 2; ++pi) {
      const Mat& g = pi == 0 ? t.grad(w) : t.grad(b);
      for (int probe = 0; probe < 4; ++probe) {
        Eigen::Index r = Eigen::Index(rng.below(uint64_t(p[pi].rows())));
        Eigen::Index c = Eigen::Index(rng.below(uint64_t(p[pi].cols())));
        double fdg = testsupport::central_diff(f, p, pi, r, c);
        CHECK(rel_err(g(r, c), fdg) < 1e-5);
      }
    }
  }
}

TEST_CASE("rk4_rollout reproduces the exponential with exact adjoints") {
  Mat m0 = -Mat::Identity(1, 1);
  Mat b0 = Mat::Zero(1, 1);
  Mat y0 = Mat::Ones(1, 1);
  Mat h = Mat::Constant(1, 1, 0.01);

  Tape t;
  Var vm = t.leaf(m0), vb = t.leaf(b0), vy = t.leaf(y0);
  Var end = t.rk4_rollout(vm, vb, vy, h, 100, GuardMode::kThrow);
  CHECK(t.val(end)(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));

  t.backward(t.sum(t.square(end)));
  auto f = [&](const std::vector<Mat>& p) -> double {
    Tape tt;
    Var e = tt.rk4_rollout(tt.leaf(p[0]), tt.leaf(p[1]), tt.leaf(p[2]), h, 100,
                           GuardMode::kThrow);
    return tt.scalar(tt.sum(tt.square(e)));
  };
  std::vector<Mat> p = {m0, b0, y0};
  CHECK(rel_err(t.grad(vm)(0, 0), testsupport::central_diff(f, p, 0, 0, 0)) <
        1e-6);
  CHECK(rel_err(t.grad(vb)(0, 0), testsupport::central_diff(f, p, 1, 0, 0)) <
        1e-6);
  CHECK(rel_err(t.grad(vy)(0, 0), testsupport::central_diff(f, p, 2, 0, 0)) <
        1e-6);
}

TEST_CASE("rk4_rollout gradients on a batched system with per-column steps") {
  Rng rng(31);
  Mat m0 = random_mat(rng, 2, 2) * 0.5;
  Mat b0 = random_mat(rng, 2, 1);
  Mat y0 = random_mat(rng, 2, 5);
  Mat h(1, 5);
  h << 0.02, 0.05, 0.0, 0.03, 0.01;  // one zero-duration column

  auto f = [&](const std::vector<Mat>& p) -> double {
    Tape t;
    Var e = t.rk4_rollout(t.leaf(p[0]), t.leaf(p[1]), t.leaf(p[2]), h, 25,
                          GuardMode::kThrow);
    return t.scalar(t.sum(t.abs(e)));
  };

  std::vector<Mat> p = {m0, b0, y0};
  Tape t;
  Var vm = t.leaf(m0), vb = t.leaf(b0), vy = t.leaf(y0);
  Var e = t.rk4_rollout(vm, vb, vy, h, 25, GuardMode::kThrow);
  CHECK((t.val(e).col(2) - y0.col(2)).cwiseAbs().maxCoeff() == 0.0);

  t.backward(t.sum(t.abs(e)));
  for (size_t pi = 0; pi < 3; ++pi) {
    const Mat& g = pi == 0 ? t.grad(vm) : (pi == 1 ? t.grad(vb) : t.grad(vy));
    for (int probe = 0; probe < 4; ++probe) {
      Eigen::Index r = Eigen::Index(rng.below(uint64_t(p[pi].rows())));
      Eigen::Index c = Eigen::Index(rng.below(uint64_t(p[pi].cols())));
      double fdg = testsupport::central_diff(f, p, pi, r, c);
      CHECK(rel_err(g(r, c), fdg) < 1e-5);
    }
  }
}

TEST_CASE("rk4_grid integrates the harmonic oscillator with exact adjoint") {
  Mat m0(2, 2);
  m0 << 0.0, 1.0, -1.0, 0.0;
  Mat b0 = Mat::Zero(2, 1);
  Mat y0(2, 1);
  y0 << 1.0, 0.0;
  Vec times = Vec::LinSpaced(201, 0.0, std::acos(-1.0) / 2.0);

  Tape t;
  Var vm = t.leaf(m0), vb = t.leaf(b0), vy = t.leaf(y0);
  Var states = t.rk4_grid(vm, vb, vy, times, 1, GuardMode::kThrow);
  const Mat& s = t.val(states);
  CHECK(s.cols() == 201);
  CHECK(std::abs(s(0, 200)) < 1e-6);
  CHECK(s(1, 200) == doctest::Approx(-1.0).epsilon(1e-6));

  // Smooth functional: |.| would put the FD oracle on kinks where the
  // oscillator crosses zero.
  auto f = [&](const std::vector<Mat>& p) -> double {
    Tape tt;
    Var st = tt.rk4_grid(tt.leaf(p[0]), tt.leaf(p[1]), tt.leaf(p[2]), times, 1,
                         GuardMode::kThrow);
    return tt.scalar(tt.sum(tt.square(st)));
  };
  t.backward(t.sum(t.square(states)));
  std::vector<Mat> p = {m0, b0, y0};
  Rng rng(17);
  for (size_t pi = 0; pi < 3; ++pi) {
    const Mat& g = pi == 0 ? t.grad(vm) : (pi == 1 ? t.grad(vb) : t.grad(vy));
    for (int probe = 0; probe < 3; ++probe) {
      Eigen::Index r = Eigen::Index(rng.below(uint64_t(p[pi].rows())));
      Eigen::Index c = Eigen::Index(rng.below(uint64_t(p[pi].cols())));
      double fdg = testsupport::central_diff(f, p, pi, r, c, 1e-5);
      CHECK(rel_err(g(r, c), fdg) < 1e-4);
    }
  }
}

TEST_CASE("rk4 divergence guard: throw mode and clamp mode") {
  Mat m0 = Mat::Constant(1, 1, 40.0);
  Mat b0 = Mat::Zero(1, 1);
  Mat y0 = Mat::Ones(1, 1);
  Mat h = Mat::Constant(1, 1, 1.0);
  Tape t;
  bool threw = false;
  try {
    t.rk4_rollout(t.leaf(m0), t.leaf(b0), t.leaf(y0), h, 50, GuardMode::kThrow);
  } catch (const DivergenceError& e) {
    threw = true;
    CHECK(e.step_index >= 0);
    CHECK(e.step_index < 50);
  }
  CHECK(threw);

  Tape t2;
  Var vm = t2.leaf(m0);
  Var end = t2.rk4_rollout(vm, t2.leaf(b0), t2.leaf(y0), h, 50,
                           GuardMode::kClamp);
  CHECK(t2.val(end)(0, 0) == kStateGuard);
  t2.backward(t2.sum(end));
  CHECK(std::isfinite(t2.grad(vm)(0, 0)));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<Mat> params = {Mat::Constant(2, 2, 1.5)};
  std::vector<Mat> grads = {Mat::Zero(2, 2)};
  AdamState st;
  adam_step(params, grads, st, 1e-3);
  CHECK(st.step == 1);
  CHECK((params[0].array() == 1.5).all());
}

TEST_CASE("adam: first step moves by -lr * sign(g)") {
  std::vector<Mat> params = {Mat::Zero(1, 3)};
  Mat g(1, 3);
  g << 2.0, -0.3, 7.7;
  AdamState st;
  adam_step(params, {g}, st, 1e-3);
  for (int j = 0; j < 3; ++j)
    CHECK(params[0](0, j) ==
          doctest::Approx(-1e-3 * (g(0, j) > 0 ? 1.0 : -1.0)).epsilon(1e-6));
}

TEST_CASE("adam: quadratic bowl descends monotonically after warmup") {
  std::vector<Mat> params = {Mat::Constant(1, 1, 2.0)};
  AdamState st;
  double prev = 1e300;
  for (int step = 0; step < 500; ++step) {
    double x = params[0](0, 0);
    double loss = 0.5 * x * x;
    adam_step(params, {Mat::Constant(1, 1, x)}, st, 1e-3);
    if (step > 10) CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  std::vector<Mat> params = {Mat::Zero(1, 1)};
  AdamState st;
  CHECK_THROWS_AS(adam_step(params, {Mat::Constant(1, 1, std::nan(""))}, st, 1e-3),
                  NonFiniteGradientError);
}

}  // TEST_SUITE
