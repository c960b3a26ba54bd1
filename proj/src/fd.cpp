#include "hlasdi/fd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace hlasdi::fd {

namespace {

void require_positive(std::initializer_list<double> spacings) {
  for (double s : spacings)
    if (!(s > 0.0))
      throw std::invalid_argument("stencil spacings must be positive");
}

// Forward rule for f' on points x, x+a, x+a+b.
std::array<double, 3> first_forward(double a, double b) {
  return {-(2.0 * a + b) / (a * (a + b)), (a + b) / (a * b),
          -a / (b * (a + b))};
}

// Forward rule for f'' on points x, x+a, x+a+b, x+a+b+c.
std::array<double, 4> second_forward(double a, double b, double c) {
  return {2.0 * (3.0 * a + 2.0 * b + c) / (a * (a + b) * (a + b + c)),
          -2.0 * (2.0 * a + 2.0 * b + c) / (a * b * (b + c)),
          2.0 * (2.0 * a + b + c) / (b * c * (a + b)),
          -2.0 * (2.0 * a + b) / ((a + b + c) * (b + c) * c)};
}

// Mixed rule for f'' on points x-a, x, x+b, x+b+c.
std::array<double, 4> second_mixed(double a, double b, double c) {
  return {2.0 * (2.0 * b + c) / (a * (a + b) * (a + b + c)),
          -2.0 * (b * (a + 2.0 * b + 3.0 * c) + c * c - a * a) /
              (b * a * (b + c) * (a + b + c)),
          2.0 * (b + c - a) / (b * c * (a + b)),
          -2.0 * (b - a) / (c * (b + c) * (a + b + c))};
}

}  // namespace

Stencil stencil_first(double a, double b, FirstMode mode) {
  require_positive({a, b});
  Stencil s;
  s.derivative_order = 1;
  s.accuracy_order = 2;
  switch (mode) {
    case FirstMode::forward: {
      auto c = first_forward(a, b);
      s.offsets = {0.0, a, a + b};
      s.coefficients = {c[0], c[1], c[2]};
      break;
    }
    case FirstMode::central: {
      s.offsets = {-a, 0.0, b};
      s.coefficients = {-b / (a * (a + b)), (b - a) / (a * b),
                        a / (b * (a + b))};
      break;
    }
    case FirstMode::backward: {
      // Reflection of the forward rule: negated, reversed coefficients.
      auto c = first_forward(a, b);
      s.offsets = {-(a + b), -a, 0.0};
      s.coefficients = {-c[2], -c[1], -c[0]};
      break;
    }
  }
  return s;
}

Stencil stencil_second(double a, double b, double c, SecondMode mode) {
  require_positive({a, b, c});
  Stencil s;
  s.derivative_order = 2;
  s.accuracy_order = 2;
  switch (mode) {
    case SecondMode::forward: {
      auto w = second_forward(a, b, c);
      s.offsets = {0.0, a, a + b, a + b + c};
      s.coefficients = {w[0], w[1], w[2], w[3]};
      break;
    }
    case SecondMode::mixed: {
      auto w = second_mixed(a, b, c);
      s.offsets = {-a, 0.0, b, b + c};
      s.coefficients = {w[0], w[1], w[2], w[3]};
      break;
    }
    case SecondMode::backward: {
      // Even derivative: reflection keeps the sign, reverses the order.
      auto w = second_forward(a, b, c);
      s.offsets = {-(a + b + c), -(a + b), -a, 0.0};
      s.coefficients = {w[3], w[2], w[1], w[0]};
      break;
    }
  }
  return s;
}

Stencil general_stencil(const std::vector<double>& offsets, int d, int k) {
  const int n = int(offsets.size());
  if (d < 1 || k < 1 || n != k + d)
    throw std::invalid_argument("general_stencil needs k+d offsets");
  double h = 0.0;
  for (double o : offsets) h = std::max(h, std::abs(o));
  if (h == 0.0) throw DegenerateGridError("all offsets are zero");

  // Moment system on offsets scaled by h for conditioning.
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    double o = offsets[j] / h;
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      m(i, j) = p;
      p *= o;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  double dfact = 1.0;
  for (int i = 2; i <= d; ++i) dfact *= i;
  rhs(d) = dfact;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (lu.rank() < n)
    throw DegenerateGridError("singular moment matrix (duplicate offsets?)");
  Eigen::VectorXd c = lu.solve(rhs);

  Stencil s;
  s.derivative_order = d;
  s.accuracy_order = k;
  s.offsets = offsets;
  s.coefficients.resize(n);
  double scale = std::pow(h, double(d));
  for (int j = 0; j < n; ++j) s.coefficients[j] = c(j) / scale;
  return s;
}

namespace {

struct Rule {
  int base;                  // first series index the rule touches
  std::array<double, 4> w;   // weights (4th entry unused for d=1)
  int n;                     // number of points
};

void check_series(const Eigen::VectorXd& times, Eigen::Index rows, int d) {
  if (times.size() != rows)
    throw ShapeError("times length does not match value rows");
  const Eigen::Index n = times.size();
  if (n < d + 2)
    throw InsufficientPointsError("series needs at least d+2 points");
  for (Eigen::Index j = 1; j < n; ++j)
    if (!(times(j) > times(j - 1)))
      throw std::invalid_argument("times must be strictly increasing");
}

void warn_spacing_ratio(const Eigen::VectorXd& times) {
  double lo = times(1) - times(0), hi = lo;
  for (Eigen::Index j = 2; j < times.size(); ++j) {
    double g = times(j) - times(j - 1);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  if (hi > 100.0 * lo)
    std::cerr << "hlasdi: warning: adjacent spacing ratio " << hi / lo
              << " exceeds 100; the O(h^2) error bound assumes bounded ratios"
              << std::endl;
}

// Closed-form rule selection per point. Gaps g[j] = t[j+1] - t[j].
Rule rule_at(const Eigen::VectorXd& t, Eigen::Index j, int d) {
  const Eigen::Index last = t.size() - 1;
  auto gap = [&](Eigen::Index i) { return t(i + 1) - t(i); };
  Rule r{};
  if (d == 1) {
    r.n = 3;
    if (j == 0) {
      auto c = stencil_first(gap(0), gap(1), FirstMode::forward);
      r.base = 0;
      std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
    } else if (j == last) {
      auto c = stencil_first(gap(last - 1), gap(last - 2), FirstMode::backward);
      r.base = int(last) - 2;
      std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
    } else {
      auto c = stencil_first(gap(j - 1), gap(j), FirstMode::central);
      r.base = int(j) - 1;
      std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
    }
    return r;
  }
  // d == 2
  r.n = 4;
  const bool fwd_fits = j + 3 <= last;
  const bool bwd_fits = j >= 3;
  if (j <= 1 && fwd_fits) {
    auto c = stencil_second(gap(j), gap(j + 1), gap(j + 2), SecondMode::forward);
    r.base = int(j);
    std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
  } else if (j >= last - 1 && bwd_fits) {
    auto c = stencil_second(gap(j - 1), gap(j - 2), gap(j - 3),
                            SecondMode::backward);
    r.base = int(j) - 3;
    std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
  } else if (j >= 1 && j + 2 <= last) {
    auto c = stencil_second(gap(j - 1), gap(j), gap(j + 1), SecondMode::mixed);
    r.base = int(j) - 1;
    std::copy(c.coefficients.begin(), c.coefficients.end(), r.w.begin());
  } else {
    // 4-point series only: the second-to-last point sees one point ahead and
    // two behind, the reflection of the mixed rule.
    auto c = stencil_second(gap(j), gap(j - 1), gap(j - 2), SecondMode::mixed);
    r.base = int(j) - 2;
    r.w = {c.coefficients[3], c.coefficients[2], c.coefficients[1],
           c.coefficients[0]};
  }
  return r;
}

}  // namespace

SeriesDerivative differentiate_series(const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& values, int d) {
  if (d != 1 && d != 2)
    throw std::invalid_argument("differentiate_series supports d in {1, 2}");
  check_series(times, values.rows(), d);
  warn_spacing_ratio(times);

  SeriesDerivative out;
  out.times = times;
  out.derivative_order = d;
  out.values.resize(values.rows(), values.cols());
  const Eigen::Index n = times.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    Rule r = rule_at(times, j, d);
    out.values.row(j) = r.w[0] * values.row(r.base);
    for (int m = 1; m < r.n; ++m)
      out.values.row(j) += r.w[m] * values.row(r.base + m);
  }
  return out;
}

Eigen::MatrixXd derivative_matrix(const Eigen::VectorXd& times, int d) {
  if (d != 1 && d != 2)
    throw std::invalid_argument("derivative_matrix supports d in {1, 2}");
  check_series(times, times.size(), d);
  const Eigen::Index n = times.size();
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Rule r = rule_at(times, j, d);
    for (int m = 0; m < r.n; ++m) mat(r.base + m, j) = r.w[m];
  }
  return mat;
}

Eigen::MatrixXd differentiate_columns(const Eigen::VectorXd& times,
                                      const Eigen::MatrixXd& series, int d) {
  SeriesDerivative s = differentiate_series(times, series.transpose(), d);
  return s.values.transpose();
}

}  // namespace hlasdi::fd
