#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <ostream>

#include "hlasdi/fom.hpp"
#include "hlasdi/gp.hpp"
#include "hlasdi/losses.hpp"

namespace hlasdi {

/// Key-value training configuration (see README for the file format).
struct TrainingConfig {
  ProblemKind problem = ProblemKind::kBurgers1d;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "run";
  MlpSpec arch;
  LossWeights weights;
  LossOptions options;
  double learning_rate = 1e-3;
  long iterations = 20000;
  long sampling_frequency = 2500;
  int grid1 = 11, grid2 = 11;
  uint64_t seed = 0;
  int n_samples = 20;
  std::vector<int> initial_indices;  // empty: the four grid corners
  std::optional<double> p1_min, p1_max, p2_min, p2_max;
  std::optional<double> kg_ic_width;

  static TrainingConfig load(const std::filesystem::path& path);
  static TrainingConfig parse(const std::string& text);
  FomProblem make_problem() const;
  void validate() const;
};

/// The testing/training parameter lattice.
struct ParameterGrid {
  int n1 = 0, n2 = 0;
  std::vector<Vec> points;  // linear index = i1 * n2 + i2

  static ParameterGrid make(const FomProblem& problem, int n1, int n2);
  std::vector<int> corner_indices() const;
};

struct EpisodeRecord {
  int episode = 0;
  int selected_index = -1;
  Vec selected_theta;
  double max_variance = 0.0;
  LossBreakdown end_loss;
};

/// Full-batch Adam training over a growing set of (bundle, coefficients)
/// pairs. Deterministic given the seed and the call history.
class Trainer {
 public:
  Trainer(AutoencoderStack stack, LossOptions options, LossWeights weights,
          double learning_rate, uint64_t seed);

  /// Bundle storage stays with the caller and must outlive the trainer.
  void add_parameter(const TrajectoryBundle* bundle, LatentCoefficients init);

  /// Runs `epochs` full-batch iterations; appends one CSV row per epoch to
  /// `loss_log` when given. On a non-finite loss or gradient the parameters
  /// keep their last good values and the error propagates.
  void train(long epochs, std::ostream* loss_log = nullptr);

  const AutoencoderStack& stack() const { return stack_; }
  AutoencoderStack& stack() { return stack_; }
  const std::vector<LatentCoefficients>& table() const { return table_; }
  std::vector<LatentCoefficients>& table() { return table_; }
  long epoch() const { return epoch_; }
  const LossBreakdown& last_breakdown() const { return last_; }

  static const char* loss_log_header();

 private:
  AutoencoderStack stack_;
  LossOptions options_;
  LossWeights weights_;
  double lr_;
  uint64_t seed_;
  std::vector<const TrajectoryBundle*> bundles_;
  std::vector<LatentCoefficients> table_;
  std::optional<LossAssembler> assembler_;
  AdamState adam_;
  AnnealState anneal_;
  long epoch_ = 0;
  LossBreakdown last_;
};

/// Decode an integrated latent trajectory for every derivative order.
TrajectoryBundle decode_trajectory(const AutoencoderStack& stack,
                                   const Mat& states, const Vec& times);

/// ROM prediction from analytically evaluated initial-condition channels.
TrajectoryBundle infer_from_ic(const AutoencoderStack& stack,
                               const LatentCoefficients& coeffs,
                               const std::vector<Mat>& ic_channels,
                               const Vec& times);

/// ROM prediction for an arbitrary parameter value: GP posterior means give
/// the coefficients, the problem supplies the initial condition.
TrajectoryBundle infer(const AutoencoderStack& stack, const GpEnsemble& gp,
                       const FomProblem& problem, const Vec& theta,
                       const Vec& times);

/// max over time of (component-mean absolute error) / std(truth).
double relative_error(const Mat& pred, const Mat& truth);

/// Variance-maximizing selection over the testing set. Returns the chosen
/// testing position (index into `test_indices`); ties break toward the
/// lowest grid index. `max_variance` receives the winning variance.
int greedy_sample(const AutoencoderStack& stack, const GpEnsemble& gp,
                  const FomProblem& problem, const ParameterGrid& grid,
                  const std::vector<int>& test_indices, const Vec& times,
                  int n_samples, uint64_t seed, double* max_variance);

/// Model checkpoint: autoencoder weights, coefficient table, fitted GP
/// ensemble, and the problem metadata needed for standalone inference.
struct Checkpoint {
  AutoencoderStack stack;
  std::vector<LatentCoefficients> table;
  GpEnsemble gp;
  FomProblem problem;
  ParameterGrid grid;
  std::vector<int> train_indices;
  Vec times;
  long epoch = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Dataset file layout inside a sweep directory.
std::string dataset_filename(int index);

/// `fom` command: solve the whole grid and write one container per point
/// plus an index.json.
void generate_sweep(const TrainingConfig& config);

/// `train` command: episodic training with greedy sampling; writes the loss
/// log, episode records, and the final checkpoint into out_dir.
Checkpoint run_training(const TrainingConfig& config);

/// `eval` command: error heatmap over the grid against the datasets.
void evaluate_grid(const Checkpoint& ck, const std::filesystem::path& data_dir,
                   const std::filesystem::path& csv_path);

}  // namespace hlasdi
