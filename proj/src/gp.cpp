#include "hlasdi/gp.hpp"

#include <cmath>
#include <numbers>

#include "hlasdi/rng.hpp"

namespace hlasdi {

namespace {
constexpr double kJitter = 1e-8;
constexpr double kSqrt3 = 1.7320508075688772;
}  // namespace

double matern_kernel(const Vec& x, const Vec& y, double length_scale) {
  if (!(length_scale > 0.0))
    throw std::invalid_argument("matern_kernel: length_scale > 0");
  if (x.size() != y.size()) throw ShapeError("matern_kernel: dimension");
  const double r = kSqrt3 * (x - y).norm() / length_scale;
  return (1.0 + r) * std::exp(-r);
}

namespace {

double matern_std(const Vec& a, const Vec& b, double l) {
  const double r = kSqrt3 * (a - b).norm() / l;
  return (1.0 + r) * std::exp(-r);
}

Mat kernel_matrix(const Mat& xs, double l) {
  const Eigen::Index n = xs.rows();
  Mat k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + kJitter;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = matern_std(xs.row(i).transpose(), xs.row(j).transpose(), l);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

GpModel fit_standardized(const Mat& inputs, const Vec& targets,
                         const std::vector<double>& scales,
                         bool standardize = true) {
  const Eigen::Index n = inputs.rows(), d = inputs.cols();
  if (n < 2) throw std::invalid_argument("fit_gp: need at least 2 inputs");
  if (targets.size() != n) throw ShapeError("fit_gp: target count");

  GpModel m;
  m.inputs_raw = inputs;
  m.targets_raw = targets;
  m.x_mean = Vec::Zero(d);
  m.x_scale = Vec::Ones(d);
  if (standardize) {
    m.x_mean = inputs.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      double var = (inputs.col(j).array() - m.x_mean(j)).square().mean();
      if (var > 0.0) m.x_scale(j) = std::sqrt(var);
    }
  }
  m.inputs_std = (inputs.rowwise() - m.x_mean.transpose()).array().rowwise() /
                 m.x_scale.transpose().array();

  // Duplicate inputs with conflicting targets cannot be interpolated.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((m.inputs_std.row(i) - m.inputs_std.row(j)).norm() < 1e-12 &&
          std::abs(targets(i) - targets(j)) > 1e-12)
        throw ConditioningError("duplicate inputs with conflicting targets");

  if (standardize) {
    m.y_mean = targets.mean();
    double yvar = (targets.array() - m.y_mean).square().mean();
    if (yvar > 0.0) {
      m.y_scale = std::sqrt(yvar);
    } else {
      // Constant targets: the posterior is the constant with zero variance.
      m.constant_targets = true;
      m.y_scale = 1.0;
    }
  }
  Vec ys = (targets.array() - m.y_mean) / m.y_scale;

  double best_lml = -std::numeric_limits<double>::infinity();
  GpModel best = m;
  for (double s : scales) {
    Mat k = kernel_matrix(m.inputs_std, s);
    Eigen::LLT<Mat> llt(k);
    if (llt.info() != Eigen::Success) continue;
    Vec alpha = llt.solve(ys);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      logdet += std::log(llt.matrixLLT()(i, i));
    double lml = -0.5 * ys.dot(alpha) - logdet -
                 0.5 * double(n) * std::log(2.0 * std::numbers::pi);
    if (lml > best_lml) {
      best_lml = lml;
      best = m;
      best.length_scale = s;
      best.log_marginal = lml;
      best.chol = llt;
      best.alpha = alpha;
    }
  }
  if (!std::isfinite(best_lml))
    throw ConditioningError("no length-scale gave a positive-definite kernel");
  return best;
}

}  // namespace

GpModel fit_gp(const Mat& inputs, const Vec& targets) {
  std::vector<double> scales(25);
  for (int i = 0; i < 25; ++i)
    scales[i] = std::pow(10.0, -2.0 + 4.0 * double(i) / 24.0);
  return fit_standardized(inputs, targets, scales);
}

GpModel fit_gp_fixed(const Mat& inputs, const Vec& targets,
                     double length_scale) {
  return fit_standardized(inputs, targets, {length_scale});
}

GpModel fit_gp_raw(const Mat& inputs, const Vec& targets,
                   double length_scale) {
  return fit_standardized(inputs, targets, {length_scale}, false);
}

std::pair<double, double> GpModel::posterior(const Vec& theta) const {
  if (theta.size() != x_mean.size()) throw ShapeError("posterior: dimension");
  Vec q = (theta - x_mean).cwiseQuotient(x_scale);
  const Eigen::Index n = inputs_std.rows();
  Vec kstar(n);
  for (Eigen::Index i = 0; i < n; ++i)
    kstar(i) = matern_std(inputs_std.row(i).transpose(), q, length_scale);
  double mean_s = kstar.dot(alpha);
  Vec v = chol.matrixL().solve(kstar);
  double var_s = std::max(0.0, 1.0 - v.squaredNorm());
  double mean = y_mean + y_scale * mean_s;
  double var = constant_targets ? 0.0 : y_scale * y_scale * var_s;
  return {mean, var};
}

GpEnsemble GpEnsemble::fit(const Mat& inputs,
                           const std::vector<LatentCoefficients>& table) {
  if (table.empty()) throw std::invalid_argument("ensemble fit: empty table");
  GpEnsemble e;
  e.K = table.front().order();
  e.L = table.front().dim();
  const Eigen::Index n = inputs.rows();
  if (Eigen::Index(table.size()) != n)
    throw ShapeError("ensemble fit: table size vs inputs");

  Vec targets(n);
  for (int k = 0; k < e.K; ++k)
    for (int r = 0; r < e.L; ++r)
      for (int c = 0; c < e.L; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) targets(i) = table[i].C[k](r, c);
        e.models.push_back(fit_gp(inputs, targets));
      }
  for (int r = 0; r < e.L; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) targets(i) = table[i].b(r);
    e.models.push_back(fit_gp(inputs, targets));
  }
  return e;
}

std::pair<LatentCoefficients, LatentCoefficients> GpEnsemble::posterior_mean_var(
    const Vec& theta) const {
  auto mean = LatentCoefficients::zero(K, L);
  auto var = LatentCoefficients::zero(K, L);
  size_t idx = 0;
  for (int k = 0; k < K; ++k)
    for (int r = 0; r < L; ++r)
      for (int c = 0; c < L; ++c) {
        auto [m, v] = models[idx++].posterior(theta);
        mean.C[k](r, c) = m;
        var.C[k](r, c) = v;
      }
  for (int r = 0; r < L; ++r) {
    auto [m, v] = models[idx++].posterior(theta);
    mean.b(r) = m;
    var.b(r) = v;
  }
  return {mean, var};
}

LatentCoefficients GpEnsemble::posterior_mean(const Vec& theta) const {
  return posterior_mean_var(theta).first;
}

std::vector<LatentCoefficients> GpEnsemble::sample_posterior(
    const Vec& theta, int n_samples, uint64_t seed) const {
  if (n_samples < 1) throw std::invalid_argument("sample_posterior: n >= 1");
  auto [mean, var] = posterior_mean_var(theta);
  Rng rng(seed);
  std::vector<LatentCoefficients> out;
  out.reserve(size_t(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    auto sample = LatentCoefficients::zero(K, L);
    for (int k = 0; k < K; ++k)
      for (int r = 0; r < L; ++r)
        for (int c = 0; c < L; ++c)
          sample.C[k](r, c) =
              mean.C[k](r, c) + std::sqrt(var.C[k](r, c)) * rng.normal();
    for (int r = 0; r < L; ++r)
      sample.b(r) = mean.b(r) + std::sqrt(var.b(r)) * rng.normal();
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace hlasdi
