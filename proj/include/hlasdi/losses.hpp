#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hlasdi/fom.hpp"
#include "hlasdi/latent.hpp"
#include "hlasdi/mlp.hpp"
#include "hlasdi/rng.hpp"

namespace hlasdi {

/// The seven loss weights in the conventional order: reconstruction, latent
/// dynamics, rollout, IC rollout, consistency, chain rule, coefficient.
struct LossWeights {
  double recon = 1.0;
  double ld = 1.0;
  double rollout = 1.0;
  double ic_rollout = 1.0;
  double consistency = 1.0;
  double chain_rule = 1.0;
  double coefficient = 1e-4;

  static LossWeights parse(const std::string& csv);
  std::array<double, 7> as_array() const;
  void validate() const;
};

/// Per-term MAE/MSE switch (defaults to MAE) and rollout controls.
struct LossOptions {
  bool mse_recon = false, mse_ld = false, mse_rollout = false,
       mse_ic_rollout = false, mse_consistency = false, mse_chain = false;
  double convex_w1 = 1.0, convex_w2 = 0.0;  // top-derivative combination
  /// Cap on RK4 steps per rollout integration. The nominal step count is the
  /// number of FOM intervals spanned (floor 1); the cap trades integrator
  /// resolution, which is far below the loss scale, for epoch time.
  int rollout_step_cap = 50;
};

/// Annealed horizons: the rollout duration fraction grows by 0.01 every 100
/// epochs up to 0.75; the IC-rollout fraction likewise up to 1 (reached at
/// epoch 10,000 and held).
struct AnnealState {
  long epoch = 0;
  double dt_fraction = 0.0;
  double ic_fraction = 0.0;

  void update(long new_epoch);
  static AnnealState at_epoch(long epoch);
  /// Retained IC-rollout step count for a bundle with `last_index` = N_t.
  long ic_steps(Eigen::Index last_index) const;
};

struct LossBreakdown {
  double recon = 0, ld = 0, rollout = 0, ic_rollout = 0, consistency = 0,
         chain_rule = 0, coefficient = 0;
  double total = 0;
  std::array<double, 7> terms() const {
    return {recon, ld, rollout, ic_rollout, consistency, chain_rule,
            coefficient};
  }
};

/// Builds the weighted total loss for the current training set on a tape.
/// Owns the per-bundle constants (sigmas, derivative matrices); the bundles
/// themselves must outlive the assembler. Zero-weighted terms are skipped
/// entirely and reported as 0.
class LossAssembler {
 public:
  LossAssembler(std::vector<const TrajectoryBundle*> bundles,
                LossOptions options);

  int order() const { return K_; }

  /// Records the weighted total loss; fills `breakdown` with the unweighted
  /// term values. Throws NonFiniteLossError naming the offending term.
  Var build(Tape& tape, const StackVars& sv, const std::vector<CoeffVars>& cv,
            const LossWeights& weights, const AnnealState& anneal,
            Rng& rollout_rng, LossBreakdown* breakdown) const;

 private:
  struct PerBundle {
    const TrajectoryBundle* bundle = nullptr;
    std::vector<double> sigma;
    Mat d1, d2;  // derivative application matrices on this bundle's grid
  };

  std::vector<PerBundle> per_;
  LossOptions options_;
  int K_ = 0;
  Eigen::Index total_frames_ = 0;
};

/// Convenience one-shot evaluation (fresh tape, no gradients kept).
struct LossProblem {
  const AutoencoderStack* stack = nullptr;
  const std::vector<LatentCoefficients>* table = nullptr;
  std::vector<const TrajectoryBundle*> bundles;
  LossOptions options;
  LossWeights weights;
  AnnealState anneal;
  uint64_t rollout_seed = 0;
};

LossBreakdown total_loss(const LossProblem& problem);

}  // namespace hlasdi
