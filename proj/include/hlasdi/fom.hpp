#pragma once

#include <string>
#include <vector>

#include "hlasdi/container.hpp"
#include "hlasdi/errors.hpp"
#include "hlasdi/tape.hpp"

namespace hlasdi {

enum class ProblemKind {
  kBurgers1d,
  kBurgers2d,
  kWave2d,
  kTelegrapher2d,
  kKleinGordon2d,
};

ProblemKind problem_from_string(const std::string& name);
std::string problem_name(ProblemKind kind);

struct GridSpec {
  int nx = 0, ny = 0;  // ny == 0 for one-dimensional problems
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

/// K synchronized time series (solution and its time derivatives) for one
/// parameter value. Channels are N_u x (N_t + 1), columns are frames.
struct TrajectoryBundle {
  Vec theta;
  Vec times;
  std::vector<Mat> channels;

  int order() const { return int(channels.size()); }
  Eigen::Index n_u() const { return channels.front().rows(); }
  Eigen::Index frames() const { return times.size(); }
  void validate() const;
};

/// Population standard deviation over every entry of a channel.
double channel_std(const Mat& channel);

/// sigma^(k) for each channel; throws on a degenerate (constant) channel.
std::vector<double> bundle_sigmas(const TrajectoryBundle& bundle);

/// Restrict a full-grid trajectory to fixed observation rows.
Mat sample_rows(const Mat& field, const std::vector<int>& indices);

/// One benchmark problem: grids, physics constants, and parameter ranges.
struct FomProblem {
  ProblemKind kind = ProblemKind::kBurgers1d;
  GridSpec grid;
  double T = 1.0;
  int steps = 501;
  double wave_speed = 0.2;   // fixed c for telegrapher / Klein-Gordon
  double omega = 0.5;        // fixed spatial frequency of the 2-D Burgers IC
  double kg_ic_width = 1.0;  // Gaussian width of the Klein-Gordon IC
  int n_observed = 1000;     // wave family: random observation points
  uint64_t sample_seed = 424242;
  Vec p1_range, p2_range;  // [min, max]; Klein-Gordon has no default

  static FomProblem standard(ProblemKind kind);

  int order() const;
  /// Observed state dimension (grid size, or n_observed for the wave family).
  Eigen::Index n_u() const;
  bool uses_observation_sampling() const;
  std::vector<int> observation_indices() const;
  /// Grid node coordinates, flattened in column-major (x fastest) order.
  void node_coordinates(Vec& xs, Vec& ys) const;

  /// Solve the FOM at theta and restrict to the observed nodes.
  TrajectoryBundle solve(const Vec& theta) const;

  /// Initial-condition channels evaluated analytically on the observed nodes.
  std::vector<Mat> initial_condition(const Vec& theta) const;
};

/// 1-D inviscid Burgers with a velocity channel recovered from the stored
/// solution by fourth-order differences in time. K = 2.
TrajectoryBundle solve_burgers1d(double a, double w, int steps = 501);

/// 2-D viscous Burgers, forward Euler. K = 1.
TrajectoryBundle solve_burgers2d(double k, double nu, const FomProblem& prob);
TrajectoryBundle solve_burgers2d_from_ic(const Mat& ic_grid, double nu,
                                         const FomProblem& prob);

/// Wave / telegrapher / Klein-Gordon on the full grid (no observation
/// sampling), RK4 on (u, u_t). K = 2. `ic_override` replaces the analytic
/// initial displacement when given (the initial velocity stays zero).
TrajectoryBundle solve_wave_family(ProblemKind kind, const Vec& theta,
                                   const FomProblem& prob,
                                   const Vec* ic_override = nullptr);

/// Dataset container round-trip.
void bundle_to_container(const TrajectoryBundle& bundle,
                         const FomProblem& prob, Container& c);
TrajectoryBundle bundle_from_container(const Container& c);

}  // namespace hlasdi
