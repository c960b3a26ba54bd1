#include "hlasdi/fom.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "hlasdi/rng.hpp"

namespace hlasdi {

ProblemKind problem_from_string(const std::string& name) {
  if (name == "burgers1d") return ProblemKind::kBurgers1d;
  if (name == "burgers2d") return ProblemKind::kBurgers2d;
  if (name == "wave") return ProblemKind::kWave2d;
  if (name == "telegrapher") return ProblemKind::kTelegrapher2d;
  if (name == "kleingordon") return ProblemKind::kKleinGordon2d;
  throw ConfigError("unknown problem kind: " + name);
}

std::string problem_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kBurgers1d: return "burgers1d";
    case ProblemKind::kBurgers2d: return "burgers2d";
    case ProblemKind::kWave2d: return "wave";
    case ProblemKind::kTelegrapher2d: return "telegrapher";
    case ProblemKind::kKleinGordon2d: return "kleingordon";
  }
  throw ConfigError("unknown problem kind");
}

void TrajectoryBundle::validate() const {
  if (channels.empty()) throw DataError("bundle has no channels");
  if (times.size() < 2) throw DataError("bundle needs at least two frames");
  if (times(0) != 0.0) throw DataError("bundle times must start at 0");
  for (Eigen::Index j = 1; j < times.size(); ++j)
    if (times(j) < times(j - 1)) throw DataError("bundle times must not decrease");
  for (const auto& ch : channels) {
    if (ch.cols() != times.size())
      throw DataError("channel frame count does not match times");
    if (ch.rows() != channels.front().rows())
      throw DataError("channels disagree on spatial dimension");
  }
}

double channel_std(const Mat& channel) {
  const double mean = channel.mean();
  return std::sqrt((channel.array() - mean).square().mean());
}

std::vector<double> bundle_sigmas(const TrajectoryBundle& bundle) {
  std::vector<double> sigmas;
  for (int k = 0; k < bundle.order(); ++k) {
    double s = channel_std(bundle.channels[k]);
    if (!(s > 0.0))
      throw DataError("degenerate constant channel " + std::to_string(k) +
                      " (zero standard deviation)");
    sigmas.push_back(s);
  }
  return sigmas;
}

Mat sample_rows(const Mat& field, const std::vector<int>& indices) {
  Mat out(Eigen::Index(indices.size()), field.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= field.rows())
      throw std::out_of_range("observation index out of range");
    out.row(Eigen::Index(i)) = field.row(indices[i]);
  }
  return out;
}

namespace {

void warn_outside(const char* name, double value, double lo, double hi) {
  if (value < lo || value > hi)
    std::cerr << "hlasdi: warning: parameter " << name << "=" << value
              << " outside the calibrated range [" << lo << ", " << hi << "]"
              << std::endl;
}

// Fourth-order finite differences in time on a uniformly sampled series
// (columns are frames), one-sided at the edges.
Mat fourth_order_time_derivative(const Mat& series, double dt) {
  const Eigen::Index n = series.cols();
  if (n < 5) throw InsufficientPointsError("need 5 frames for O(dt^4)");
  Mat out(series.rows(), n);
  const double s = 1.0 / (12.0 * dt);
  out.col(0) = s * (-25.0 * series.col(0) + 48.0 * series.col(1) -
                    36.0 * series.col(2) + 16.0 * series.col(3) -
                    3.0 * series.col(4));
  out.col(1) = s * (-3.0 * series.col(0) - 10.0 * series.col(1) +
                    18.0 * series.col(2) - 6.0 * series.col(3) +
                    series.col(4));
  for (Eigen::Index j = 2; j + 2 < n; ++j)
    out.col(j) = s * (series.col(j - 2) - 8.0 * series.col(j - 1) +
                      8.0 * series.col(j + 1) - series.col(j + 2));
  out.col(n - 2) = s * (3.0 * series.col(n - 1) + 10.0 * series.col(n - 2) -
                        18.0 * series.col(n - 3) + 6.0 * series.col(n - 4) -
                        series.col(n - 5));
  out.col(n - 1) = s * (25.0 * series.col(n - 1) - 48.0 * series.col(n - 2) +
                        36.0 * series.col(n - 3) - 16.0 * series.col(n - 4) +
                        3.0 * series.col(n - 5));
  return out;
}

}  // namespace

TrajectoryBundle solve_burgers1d(double a, double w, int steps) {
  warn_outside("a", a, 0.45, 0.55);
  warn_outside("w", w, 0.18, 0.22);
  const int nx = 1001;
  const double x0 = -3.0, x1 = 3.0;
  const double dx = (x1 - x0) / (nx - 1);
  const double T = 1.0;
  const double dt = T / steps;

  Vec u(nx);
  for (int i = 0; i < nx; ++i) {
    double x = x0 + i * dx;
    u(i) = std::cos(std::numbers::pi * w * x) * std::exp(-a * x * x);
  }
  if (u.cwiseAbs().maxCoeff() * dt / dx > 1.0)
    throw StabilityError("burgers1d: advective CFL violated");

  Mat traj(nx, steps + 1);
  traj.col(0) = u;
  Vec ic = u;
  Vec unew(nx);
  for (int s = 0; s < steps; ++s) {
    for (int i = 1; i + 1 < nx; ++i)
      unew(i) = u(i) - dt * u(i) * (u(i + 1) - u(i - 1)) / (2.0 * dx);
    // Edges are pinned to the (decayed-to-zero) initial condition.
    unew(0) = ic(0);
    unew(nx - 1) = ic(nx - 1);
    u = unew;
    traj.col(s + 1) = u;
  }

  TrajectoryBundle bundle;
  bundle.theta = Vec(2);
  bundle.theta << a, w;
  bundle.times = Vec::LinSpaced(steps + 1, 0.0, T);
  bundle.channels.push_back(traj);
  bundle.channels.push_back(fourth_order_time_derivative(traj, dt));
  return bundle;
}

namespace {

// Index helper for column-major 2-D grids (x fastest).
inline Eigen::Index gid(int i, int j, int nx) { return j * nx + i; }

}  // namespace

TrajectoryBundle solve_burgers2d_from_ic(const Mat& ic_grid, double nu,
                                         const FomProblem& prob) {
  const int nx = prob.grid.nx, ny = prob.grid.ny;
  const double dx = (prob.grid.x1 - prob.grid.x0) / (nx - 1);
  const double dy = (prob.grid.y1 - prob.grid.y0) / (ny - 1);
  const double dt = prob.T / prob.steps;
  if (dt > dx * dx / (4.0 * nu))
    throw StabilityError("burgers2d: viscous step bound violated");
  if (ic_grid.cwiseAbs().maxCoeff() * dt / dx > 1.0)
    throw StabilityError("burgers2d: advective CFL violated");

  Vec u = ic_grid.reshaped();
  const Vec ic = u;
  Mat traj(nx * ny, prob.steps + 1);
  traj.col(0) = u;
  Vec unew(nx * ny);
  for (int s = 0; s < prob.steps; ++s) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index c = gid(i, j, nx);
        if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) {
          unew(c) = ic(c);
          continue;
        }
        double ux = (u(gid(i + 1, j, nx)) - u(gid(i - 1, j, nx))) / (2.0 * dx);
        double lap = (u(gid(i + 1, j, nx)) - 2.0 * u(c) + u(gid(i - 1, j, nx))) /
                         (dx * dx) +
                     (u(gid(i, j + 1, nx)) - 2.0 * u(c) + u(gid(i, j - 1, nx))) /
                         (dy * dy);
        unew(c) = u(c) + dt * (-u(c) * ux + nu * lap);
      }
    u = unew;
    traj.col(s + 1) = u;
  }

  TrajectoryBundle bundle;
  bundle.times = Vec::LinSpaced(prob.steps + 1, 0.0, prob.T);
  bundle.channels.push_back(std::move(traj));
  return bundle;
}

TrajectoryBundle solve_burgers2d(double k, double nu, const FomProblem& prob) {
  warn_outside("k", k, 0.45, 0.55);
  warn_outside("nu", nu, 0.009, 0.011);
  const int nx = prob.grid.nx, ny = prob.grid.ny;
  Mat ic(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double x = prob.grid.x0 + i * (prob.grid.x1 - prob.grid.x0) / (nx - 1);
      double y = prob.grid.y0 + j * (prob.grid.y1 - prob.grid.y0) / (ny - 1);
      ic(i, j) = std::exp(-k * (x * x + y * y)) *
                 std::sin(std::numbers::pi * prob.omega * x) *
                 std::sin(std::numbers::pi * prob.omega * y);
    }
  TrajectoryBundle bundle = solve_burgers2d_from_ic(ic, nu, prob);
  bundle.theta = Vec(2);
  bundle.theta << k, nu;
  return bundle;
}

TrajectoryBundle solve_wave_family(ProblemKind kind, const Vec& theta,
                                   const FomProblem& prob,
                                   const Vec* ic_override) {
  const int nx = prob.grid.nx, ny = prob.grid.ny;
  const int n = nx * ny;
  const double dx = (prob.grid.x1 - prob.grid.x0) / (nx - 1);
  const double dy = (prob.grid.y1 - prob.grid.y0) / (ny - 1);
  const double dt = prob.T / prob.steps;

  double c = prob.wave_speed, damping = 0.0, mass = 0.0;
  double ic_width = 0.0, ic_freq = 0.0;
  switch (kind) {
    case ProblemKind::kWave2d:
      c = theta(0);
      ic_width = theta(1);
      break;
    case ProblemKind::kTelegrapher2d:
      damping = theta(0);
      ic_width = theta(1);
      break;
    case ProblemKind::kKleinGordon2d:
      mass = theta(0);
      ic_freq = theta(1);
      ic_width = prob.kg_ic_width;
      break;
    default:
      throw ConfigError("solve_wave_family: not a wave-family problem");
  }
  if (c * dt / std::min(dx, dy) > 1.0 / std::sqrt(2.0))
    throw StabilityError("wave family: CFL violated");

  Vec u(n), v = Vec::Zero(n);
  if (ic_override) {
    if (ic_override->size() != n)
      throw ShapeError("solve_wave_family: ic_override size");
    u = *ic_override;
  } else {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double x = prob.grid.x0 + i * dx;
        double y = prob.grid.y0 + j * dy;
        double val = std::exp(-ic_width * (x * x + y * y));
        if (kind == ProblemKind::kKleinGordon2d)
          val *= std::sin(std::numbers::pi * ic_freq * x) *
                 std::sin(std::numbers::pi * ic_freq * y);
        u(gid(i, j, nx)) = val;
      }
  }

  // Mirror (homogeneous Neumann) Laplacian.
  auto laplacian = [&](const Vec& f, Vec& out) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index cix = gid(i, j, nx);
        double fl = f(gid(i > 0 ? i - 1 : 1, j, nx));
        double fr = f(gid(i < nx - 1 ? i + 1 : nx - 2, j, nx));
        double fd = f(gid(i, j > 0 ? j - 1 : 1, nx));
        double fu = f(gid(i, j < ny - 1 ? j + 1 : ny - 2, nx));
        out(cix) = (fl - 2.0 * f(cix) + fr) / (dx * dx) +
                   (fd - 2.0 * f(cix) + fu) / (dy * dy);
      }
  };
  const double c2 = c * c;
  Vec lap(n);
  auto accel = [&](const Vec& uu, const Vec& vv, Vec& out) {
    laplacian(uu, lap);
    out = c2 * lap - 2.0 * damping * vv - mass * mass * uu;
  };

  Mat traj_u(n, prob.steps + 1), traj_v(n, prob.steps + 1);
  traj_u.col(0) = u;
  traj_v.col(0) = v;
  Vec ku1(n), kv1(n), ku2(n), kv2(n), ku3(n), kv3(n), ku4(n), kv4(n);
  Vec tu(n), tv(n);
  for (int s = 0; s < prob.steps; ++s) {
    ku1 = v;
    accel(u, v, kv1);
    tu = u + 0.5 * dt * ku1;
    tv = v + 0.5 * dt * kv1;
    ku2 = tv;
    accel(tu, tv, kv2);
    tu = u + 0.5 * dt * ku2;
    tv = v + 0.5 * dt * kv2;
    ku3 = tv;
    accel(tu, tv, kv3);
    tu = u + dt * ku3;
    tv = v + dt * kv3;
    ku4 = tv;
    accel(tu, tv, kv4);
    u += (dt / 6.0) * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4);
    v += (dt / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
    traj_u.col(s + 1) = u;
    traj_v.col(s + 1) = v;
  }

  TrajectoryBundle bundle;
  bundle.theta = theta;
  bundle.times = Vec::LinSpaced(prob.steps + 1, 0.0, prob.T);
  bundle.channels.push_back(std::move(traj_u));
  bundle.channels.push_back(std::move(traj_v));
  return bundle;
}

FomProblem FomProblem::standard(ProblemKind kind) {
  FomProblem p;
  p.kind = kind;
  switch (kind) {
    case ProblemKind::kBurgers1d:
      p.grid = {1001, 0, -3.0, 3.0, 0.0, 0.0};
      p.T = 1.0;
      p.steps = 501;
      p.p1_range = Vec(2);
      p.p1_range << 0.45, 0.55;
      p.p2_range = Vec(2);
      p.p2_range << 0.18, 0.22;
      break;
    case ProblemKind::kBurgers2d:
      p.grid = {31, 31, -2.0, 2.0, -2.0, 2.0};
      p.T = 2.0;
      p.steps = 501;
      p.p1_range = Vec(2);
      p.p1_range << 0.45, 0.55;
      p.p2_range = Vec(2);
      p.p2_range << 0.009, 0.011;
      break;
    case ProblemKind::kWave2d:
      p.grid = {64, 64, -2.0, 2.0, -2.0, 2.0};
      p.T = 2.0;
      p.steps = 500;
      p.p1_range = Vec(2);
      p.p1_range << 0.5, 0.6;
      p.p2_range = Vec(2);
      p.p2_range << 2.0, 2.2;
      break;
    case ProblemKind::kTelegrapher2d:
      p.grid = {64, 64, -2.0, 2.0, -2.0, 2.0};
      p.T = 2.0;
      p.steps = 500;
      p.p1_range = Vec(2);
      p.p1_range << 0.09, 1.1;
      p.p2_range = Vec(2);
      p.p2_range << 0.09, 1.1;
      break;
    case ProblemKind::kKleinGordon2d:
      p.grid = {64, 64, -2.0, 2.0, -2.0, 2.0};
      p.T = 2.0;
      p.steps = 500;
      // Parameter ranges must come from configuration.
      break;
  }
  return p;
}

int FomProblem::order() const {
  return kind == ProblemKind::kBurgers2d ? 1 : 2;
}

bool FomProblem::uses_observation_sampling() const {
  return kind == ProblemKind::kWave2d || kind == ProblemKind::kTelegrapher2d ||
         kind == ProblemKind::kKleinGordon2d;
}

Eigen::Index FomProblem::n_u() const {
  if (uses_observation_sampling()) return n_observed;
  return grid.ny > 0 ? Eigen::Index(grid.nx) * grid.ny : grid.nx;
}

std::vector<int> FomProblem::observation_indices() const {
  Rng rng(sample_seed);
  return rng.choose(grid.nx * grid.ny, n_observed);
}

void FomProblem::node_coordinates(Vec& xs, Vec& ys) const {
  const Eigen::Index n = grid.ny > 0 ? Eigen::Index(grid.nx) * grid.ny : grid.nx;
  xs.resize(n);
  ys.resize(n);
  if (grid.ny == 0) {
    for (int i = 0; i < grid.nx; ++i) {
      xs(i) = grid.x0 + i * (grid.x1 - grid.x0) / (grid.nx - 1);
      ys(i) = 0.0;
    }
    return;
  }
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      xs(gid(i, j, grid.nx)) = grid.x0 + i * (grid.x1 - grid.x0) / (grid.nx - 1);
      ys(gid(i, j, grid.nx)) = grid.y0 + j * (grid.y1 - grid.y0) / (grid.ny - 1);
    }
}

TrajectoryBundle FomProblem::solve(const Vec& theta) const {
  if (theta.size() != 2) throw ConfigError("theta must have two components");
  TrajectoryBundle bundle;
  switch (kind) {
    case ProblemKind::kBurgers1d:
      bundle = solve_burgers1d(theta(0), theta(1), steps);
      break;
    case ProblemKind::kBurgers2d:
      bundle = solve_burgers2d(theta(0), theta(1), *this);
      break;
    default: {
      bundle = solve_wave_family(kind, theta, *this);
      auto idx = observation_indices();
      for (auto& ch : bundle.channels) ch = sample_rows(ch, idx);
      break;
    }
  }
  bundle.validate();
  return bundle;
}

std::vector<Mat> FomProblem::initial_condition(const Vec& theta) const {
  Vec xs, ys;
  node_coordinates(xs, ys);
  const Eigen::Index n = xs.size();
  std::vector<Mat> channels;

  switch (kind) {
    case ProblemKind::kBurgers1d: {
      const double a = theta(0), w = theta(1);
      Mat u0(n, 1), v0(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        double x = xs(i);
        double g = std::exp(-a * x * x);
        double cosw = std::cos(std::numbers::pi * w * x);
        u0(i, 0) = cosw * g;
        // v = -u u_x from the governing equation at t = 0.
        double du = (-std::numbers::pi * w * std::sin(std::numbers::pi * w * x) -
                     2.0 * a * x * cosw) *
                    g;
        v0(i, 0) = -u0(i, 0) * du;
      }
      channels = {u0, v0};
      break;
    }
    case ProblemKind::kBurgers2d: {
      const double k = theta(0);
      Mat u0(n, 1);
      for (Eigen::Index i = 0; i < n; ++i)
        u0(i, 0) = std::exp(-k * (xs(i) * xs(i) + ys(i) * ys(i))) *
                   std::sin(std::numbers::pi * omega * xs(i)) *
                   std::sin(std::numbers::pi * omega * ys(i));
      channels = {u0};
      break;
    }
    default: {
      double ic_width = kind == ProblemKind::kKleinGordon2d ? kg_ic_width
                                                            : theta(1);
      Mat u0(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        double val =
            std::exp(-ic_width * (xs(i) * xs(i) + ys(i) * ys(i)));
        if (kind == ProblemKind::kKleinGordon2d)
          val *= std::sin(std::numbers::pi * theta(1) * xs(i)) *
                 std::sin(std::numbers::pi * theta(1) * ys(i));
        u0(i, 0) = val;
      }
      channels = {u0, Mat::Zero(n, 1)};
      break;
    }
  }

  if (uses_observation_sampling()) {
    auto idx = observation_indices();
    for (auto& ch : channels) ch = sample_rows(ch, idx);
  }
  return channels;
}

void bundle_to_container(const TrajectoryBundle& bundle,
                         const FomProblem& prob, Container& c) {
  c.header["kind"] = problem_name(prob.kind);
  c.header["theta"] = {bundle.theta(0), bundle.theta(1)};
  c.header["K"] = bundle.order();
  c.header["N_u"] = bundle.n_u();
  c.header["N_t"] = bundle.frames() - 1;
  c.header["T"] = prob.T;
  c.header["grid"] = {{"nx", prob.grid.nx}, {"ny", prob.grid.ny},
                      {"x0", prob.grid.x0}, {"x1", prob.grid.x1},
                      {"y0", prob.grid.y0}, {"y1", prob.grid.y1}};
  c.header["seed"] = prob.sample_seed;
  c.add("times", bundle.times);
  for (int k = 0; k < bundle.order(); ++k)
    c.add("channel_" + std::to_string(k), bundle.channels[k]);
}

TrajectoryBundle bundle_from_container(const Container& c) {
  TrajectoryBundle bundle;
  auto th = c.header.at("theta");
  bundle.theta = Vec(2);
  bundle.theta << th[0].get<double>(), th[1].get<double>();
  bundle.times = c.get("times");
  const int K = c.header.at("K").get<int>();
  for (int k = 0; k < K; ++k)
    bundle.channels.push_back(c.get("channel_" + std::to_string(k)));
  bundle.validate();
  return bundle;
}

}  // namespace hlasdi
