#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "hlasdi/latent.hpp"
#include "hlasdi/tape.hpp"

namespace hlasdi {

/// Matern covariance with nu = 1.5: (1 + sqrt(3) d / l) exp(-sqrt(3) d / l)
/// with d = ||x - y||.
double matern_kernel(const Vec& x, const Vec& y, double length_scale);

/// One scalar-output Gaussian-process regressor. Inputs are standardized to
/// zero mean / unit variance per dimension, targets per component; the
/// length-scale lives in standardized input space.
struct GpModel {
  Vec x_mean, x_scale;
  double y_mean = 0.0, y_scale = 1.0;
  bool constant_targets = false;  // zero-variance targets: deterministic map
  double length_scale = 1.0;
  double log_marginal = 0.0;
  Mat inputs_std;  // n x d
  Eigen::LLT<Mat> chol;
  Vec alpha;
  Mat inputs_raw;
  Vec targets_raw;

  /// Posterior mean and (clamped non-negative) variance at a query point.
  std::pair<double, double> posterior(const Vec& theta) const;
};

/// Fit with the length-scale chosen by maximizing the log marginal
/// likelihood over a 25-point log-spaced grid in [1e-2, 1e2]; kernel matrix
/// jittered by 1e-8 on the diagonal.
GpModel fit_gp(const Mat& inputs, const Vec& targets);

/// Fit with a fixed length-scale (used when reloading checkpoints).
GpModel fit_gp_fixed(const Mat& inputs, const Vec& targets,
                     double length_scale);

/// Fixed length-scale without any standardization; the prior is exactly
/// unit-variance in raw space. Mostly for property tests, where the GP has
/// to stay identical across nested training sets.
GpModel fit_gp_raw(const Mat& inputs, const Vec& targets, double length_scale);

/// L(KL+1) independent regressors, one per latent-coefficient component.
/// Model order: C[0] row-major, ..., C[K-1] row-major, then b.
struct GpEnsemble {
  int K = 0, L = 0;
  std::vector<GpModel> models;

  int component_count() const { return L * (K * L + 1); }

  static GpEnsemble fit(const Mat& inputs,
                        const std::vector<LatentCoefficients>& table);

  LatentCoefficients posterior_mean(const Vec& theta) const;
  /// Component-wise posterior mean and variance, packed as coefficients.
  std::pair<LatentCoefficients, LatentCoefficients> posterior_mean_var(
      const Vec& theta) const;
  /// Independent normal draws per component; deterministic given the seed.
  std::vector<LatentCoefficients> sample_posterior(const Vec& theta,
                                                   int n_samples,
                                                   uint64_t seed) const;
};

}  // namespace hlasdi
