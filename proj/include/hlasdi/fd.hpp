#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hlasdi/errors.hpp"

namespace hlasdi::fd {

enum class FirstMode { forward, central, backward };
enum class SecondMode { forward, mixed, backward };

/// A one-dimensional finite-difference rule: coefficients c_i attached to
/// signed displacements o_i from the evaluation point, approximating the
/// d-th derivative to accuracy O(h^k).
///
/// Moment conditions (testable directly from the fields):
///   sum_i c_i o_i^m = d! * [m == d]   for m = 0 .. k+d-1.
struct Stencil {
  std::vector<double> offsets;       // seconds, ascending
  std::vector<double> coefficients;  // 1 / seconds^d
  int derivative_order = 1;
  int accuracy_order = 2;
};

/// Three-point O(h^2) rule for f'(x) on spacings a (nearer gap) and b.
/// forward:  points x, x+a, x+a+b
/// central:  points x-a, x, x+b
/// backward: points x-a-b, x-a, x
Stencil stencil_first(double a, double b, FirstMode mode);

/// Four-point O(h^2) rule for f''(x) on spacings a, b, c.
/// forward:  points x, x+a, x+a+b, x+a+b+c
/// mixed:    points x-a, x, x+b, x+b+c
/// backward: points x-a-b-c, x-a-b, x-a, x
Stencil stencil_second(double a, double b, double c, SecondMode mode);

/// Solve the (k+d)x(k+d) moment system for arbitrary distinct offsets.
/// Oracle for the closed forms above; not used on the production path.
Stencil general_stencil(const std::vector<double>& offsets, int d, int k);

/// A differentiated time series: rows are time points, columns components.
struct SeriesDerivative {
  Eigen::VectorXd times;
  Eigen::MatrixXd values;
  int derivative_order = 0;
};

/// Differentiate a whole series in O(N): interior points use the central
/// (d=1) / mixed (d=2) rules, edges fall back to one-sided rules. Values are
/// N_t x dim with strictly increasing times.
SeriesDerivative differentiate_series(const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& values, int d);

/// Same rules packed into a dense matrix D so that the derivative of a
/// series stored column-wise (dim x N_t) is S * D. Used where the
/// differentiation has to live inside a recorded computation.
Eigen::MatrixXd derivative_matrix(const Eigen::VectorXd& times, int d);

/// Column-wise variant of differentiate_series (series is dim x N_t).
Eigen::MatrixXd differentiate_columns(const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& series, int d);

}  // namespace hlasdi::fd
