#include "hlasdi/losses.hpp"

#include <cmath>
#include <sstream>

#include "hlasdi/fd.hpp"

namespace hlasdi {

LossWeights LossWeights::parse(const std::string& csv) {
  std::array<double, 7> vals{};
  std::stringstream ss(csv);
  std::string tok;
  size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= 7) throw ConfigError("loss weights: expected 7 values");
    try {
      vals[i++] = std::stod(tok);
    } catch (const std::exception&) {
      throw ConfigError("loss weights: bad value '" + tok + "'");
    }
  }
  if (i != 7) throw ConfigError("loss weights: expected 7 values");
  LossWeights w;
  w.recon = vals[0];
  w.ld = vals[1];
  w.rollout = vals[2];
  w.ic_rollout = vals[3];
  w.consistency = vals[4];
  w.chain_rule = vals[5];
  w.coefficient = vals[6];
  w.validate();
  return w;
}

std::array<double, 7> LossWeights::as_array() const {
  return {recon, ld, rollout, ic_rollout, consistency, chain_rule, coefficient};
}

void LossWeights::validate() const {
  for (double v : as_array())
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("loss weights must be non-negative and finite");
}

void AnnealState::update(long new_epoch) {
  if (new_epoch < epoch)
    throw std::invalid_argument("anneal epochs must not decrease");
  epoch = new_epoch;
  double inc = 0.01 * double(epoch / 100);
  dt_fraction = std::min(0.75, inc);
  ic_fraction = std::min(1.0, inc);
}

AnnealState AnnealState::at_epoch(long e) {
  AnnealState s;
  s.update(e);
  return s;
}

long AnnealState::ic_steps(Eigen::Index last_index) const {
  return std::lround(ic_fraction * double(last_index));
}

LossAssembler::LossAssembler(std::vector<const TrajectoryBundle*> bundles,
                             LossOptions options)
    : options_(options) {
  if (bundles.empty())
    throw std::invalid_argument("loss assembler: no bundles");
  K_ = bundles.front()->order();
  if (K_ == 1) {
    options_.convex_w1 = 1.0;
    options_.convex_w2 = 0.0;
  }
  if (options_.convex_w1 < 0.0 || options_.convex_w2 < 0.0 ||
      std::abs(options_.convex_w1 + options_.convex_w2 - 1.0) > 1e-12)
    throw std::invalid_argument("convex weights must be non-negative and sum to 1");

  for (const auto* b : bundles) {
    b->validate();
    if (b->order() != K_)
      throw DataError("bundles disagree on derivative count");
    PerBundle p;
    p.bundle = b;
    p.sigma = bundle_sigmas(*b);
    // Reuse the derivative matrices when the grid repeats (usual case).
    for (const auto& prev : per_)
      if (prev.bundle->times == b->times) {
        p.d1 = prev.d1;
        p.d2 = prev.d2;
        break;
      }
    if (p.d1.size() == 0) {
      if (b->frames() >= 3) p.d1 = fd::derivative_matrix(b->times, 1);
      if (K_ >= 2 && b->frames() >= 4)
        p.d2 = fd::derivative_matrix(b->times, 2);
    }
    total_frames_ += b->frames();
    per_.push_back(std::move(p));
  }
}

namespace {

// L1 or squared-L2 reduction of a recorded difference.
Var norm_sum(Tape& t, Var diff, bool mse) {
  return mse ? t.sum(t.square(diff)) : t.sum(t.abs(diff));
}

double sigma_power(double sigma, bool mse) {
  return mse ? sigma * sigma : sigma;
}

void check_finite(double value, const char* term) {
  if (!std::isfinite(value)) throw NonFiniteLossError(term);
}

// Piecewise-linear interpolation of the bundle channel at t_j + dt_j for the
// first n_ro frames.
Mat interpolate_targets(const TrajectoryBundle& b, int k,
                        const std::vector<double>& dts) {
  const Vec& t = b.times;
  const Mat& ch = b.channels[k];
  Mat out(ch.rows(), Eigen::Index(dts.size()));
  for (size_t j = 0; j < dts.size(); ++j) {
    double tau = t(Eigen::Index(j)) + dts[j];
    if (tau >= t(t.size() - 1)) {
      out.col(Eigen::Index(j)) = ch.col(t.size() - 1);
      continue;
    }
    // The sampled durations are not monotone in j, so search from scratch.
    Eigen::Index hi = Eigen::Index(j) + 1;
    while (t(hi) < tau) ++hi;
    double span = t(hi) - t(hi - 1);
    double alpha = span > 0.0 ? (tau - t(hi - 1)) / span : 1.0;
    out.col(Eigen::Index(j)) =
        (1.0 - alpha) * ch.col(hi - 1) + alpha * ch.col(hi);
  }
  return out;
}

}  // namespace

Var LossAssembler::build(Tape& t, const StackVars& sv,
                         const std::vector<CoeffVars>& cv,
                         const LossWeights& weights, const AnnealState& anneal,
                         Rng& rollout_rng, LossBreakdown* breakdown) const {
  weights.validate();
  if (cv.size() != per_.size())
    throw ShapeError("loss build: coefficient vars per training parameter");
  const int n_params = int(per_.size());
  const int L = int(t.val(cv[0].b).rows());
  const bool need_chain = weights.chain_rule > 0.0 && K_ >= 2;
  const bool need_consistency = weights.consistency > 0.0 && K_ >= 2;
  const bool need_rollout = weights.rollout > 0.0;
  const bool need_ic = weights.ic_rollout > 0.0;
  const bool need_ld = weights.ld > 0.0;
  const bool need_recon = weights.recon > 0.0;
  const bool need_coeff = weights.coefficient > 0.0;
  const bool need_encodings =
      need_recon || need_ld || need_rollout || need_ic || need_consistency ||
      need_chain;

  // Rollout bookkeeping happens up front so the total count and all random
  // durations are fixed before any per-parameter work.
  std::vector<Eigen::Index> n_rollable(n_params, 0);
  std::vector<std::vector<double>> roll_dt(n_params);
  Eigen::Index total_rollable = 0;
  if (need_rollout) {
    for (int i = 0; i < n_params; ++i) {
      const TrajectoryBundle& b = *per_[i].bundle;
      const double horizon = anneal.dt_fraction * b.times(b.times.size() - 1);
      const double limit =
          b.times(b.times.size() - 1) * (1.0 + 1e-12) + 1e-15;
      Eigen::Index n_ro = 0;
      while (n_ro < b.frames() && b.times(n_ro) + horizon <= limit) ++n_ro;
      n_rollable[i] = n_ro;
      total_rollable += n_ro;
      roll_dt[i].resize(size_t(n_ro));
      for (auto& dt : roll_dt[i])
        dt = horizon > 0.0 ? rollout_rng.uniform(0.0, horizon) : 0.0;
    }
  }

  std::optional<Var> recon, ld, rollout, ic_rollout, consistency, chain, coeff;
  auto accumulate = [&t](std::optional<Var>& acc, Var v) {
    acc = acc ? t.add(*acc, v) : v;
  };

  for (int i = 0; i < n_params; ++i) {
    const PerBundle& pb = *&per_[i];
    const TrajectoryBundle& b = *pb.bundle;
    const Eigen::Index frames = b.frames();

    // Encodings (and pre-activations for the chain-rule term).
    std::vector<Var> z(K_);
    std::vector<std::vector<Var>> preacts(K_);
    if (need_encodings)
      for (int k = 0; k < K_; ++k)
        z[k] = encode_on_tape(t, sv.enc[k], t.cref(b.channels[k]),
                              need_chain ? &preacts[k] : nullptr);

    if (need_recon) {
      for (int k = 0; k < K_; ++k) {
        Var rec = decode_on_tape(t, sv.dec[k], z[k]);
        Var diff = t.sub(rec, t.cref(b.channels[k]));
        double s = 1.0 / (double(total_frames_) *
                          sigma_power(pb.sigma[k], options_.mse_recon));
        accumulate(recon, t.scale(norm_sum(t, diff, options_.mse_recon), s));
      }
    }

    if (need_ld) {
      if (pb.d1.size() == 0)
        throw InsufficientPointsError("latent-dynamics loss needs 3+ frames");
      if (options_.convex_w2 > 0.0 && K_ >= 2 && pb.d2.size() == 0)
        throw InsufficientPointsError("second-derivative branch needs 4+ frames");
      Var est = t.scale(t.matmul(z[K_ - 1], t.cref(pb.d1)), options_.convex_w1);
      if (options_.convex_w2 > 0.0 && K_ >= 2)
        est = t.add(est, t.scale(t.matmul(z[K_ - 2], t.cref(pb.d2)),
                                 options_.convex_w2));
      Var rhs = t.matmul(cv[i].C[0], z[0]);
      for (int k = 1; k < K_; ++k)
        rhs = t.add(rhs, t.matmul(cv[i].C[k], z[k]));
      rhs = t.add_colvec(rhs, cv[i].b);
      accumulate(ld, norm_sum(t, t.sub(est, rhs), options_.mse_ld));
    }

    const bool needs_companion =
        (need_rollout && n_rollable[i] > 0) || need_ic;
    Var m_var, beta_var;
    if (needs_companion) {
      m_var = companion_on_tape(t, cv[i], L);
      beta_var = companion_offset_on_tape(t, cv[i], L);
    }

    if (need_rollout && n_rollable[i] > 0) {
      const Eigen::Index n_ro = n_rollable[i];
      Var y0 = t.slice_cols(z[0], 0, int(n_ro));
      for (int k = 1; k < K_; ++k)
        y0 = t.vcat(y0, t.slice_cols(z[k], 0, int(n_ro)));

      // Step count: FOM intervals spanned (floor 1), capped.
      int steps = 1;
      for (size_t j = 0; j < roll_dt[i].size(); ++j) {
        double tau = b.times(Eigen::Index(j)) + roll_dt[i][j];
        Eigen::Index p = Eigen::Index(j);
        while (p + 1 < b.times.size() && b.times(p) < tau) ++p;
        steps = std::max(steps, int(p - Eigen::Index(j)));
      }
      steps = std::min(steps, options_.rollout_step_cap);

      Mat h(1, n_ro);
      for (Eigen::Index j = 0; j < n_ro; ++j)
        h(0, j) = roll_dt[i][size_t(j)] / double(steps);
      Var end = t.rk4_rollout(m_var, beta_var, y0, std::move(h), steps,
                              GuardMode::kClamp);
      for (int k = 0; k < K_; ++k) {
        Var pred = decode_on_tape(t, sv.dec[k], t.slice_rows(end, k * L, L));
        Mat target = interpolate_targets(b, k, roll_dt[i]);
        Var diff = t.sub(pred, t.constant(std::move(target)));
        double s = 1.0 / (double(total_rollable) *
                          sigma_power(pb.sigma[k], options_.mse_rollout));
        accumulate(rollout,
                   t.scale(norm_sum(t, diff, options_.mse_rollout), s));
      }
    }

    if (need_ic) {
      const long n_ic = anneal.ic_steps(frames - 1);
      Var y0 = t.slice_cols(z[0], 0, 1);
      for (int k = 1; k < K_; ++k) y0 = t.vcat(y0, t.slice_cols(z[k], 0, 1));
      Var states = t.rk4_grid(m_var, beta_var, y0, b.times.head(n_ic + 1), 1,
                              GuardMode::kClamp);
      for (int k = 0; k < K_; ++k) {
        Var pred = decode_on_tape(t, sv.dec[k], t.slice_rows(states, k * L, L));
        Var target = t.slice_cols(t.cref(b.channels[k]), 0, int(n_ic + 1));
        Var diff = t.sub(pred, target);
        double s = 1.0 / (double(n_ic + 1) *
                          sigma_power(pb.sigma[k], options_.mse_ic_rollout));
        accumulate(ic_rollout,
                   t.scale(norm_sum(t, diff, options_.mse_ic_rollout), s));
      }
    }

    if (need_consistency) {
      if (pb.d1.size() == 0)
        throw InsufficientPointsError("consistency loss needs 3+ frames");
      for (int k = 0; k + 1 < K_; ++k) {
        Var dz = t.matmul(z[k], t.cref(pb.d1));
        Var diff = t.sub(dz, z[k + 1]);
        double s = 1.0 / (double(n_params) * double(frames));
        accumulate(consistency,
                   t.scale(norm_sum(t, diff, options_.mse_consistency), s));
      }
    }

    if (need_chain) {
      for (int k = 0; k + 1 < K_; ++k) {
        Var jv = encoder_jvp_on_tape(t, sv.enc[k], preacts[k],
                                     t.cref(b.channels[k + 1]));
        Var diff = t.sub(jv, z[k + 1]);
        double s = 1.0 / (double(n_params) * double(frames));
        accumulate(chain, t.scale(norm_sum(t, diff, options_.mse_chain), s));
      }
    }

    if (need_coeff) {
      Var reg = t.sum(t.square(cv[i].b));
      for (int k = 0; k < K_; ++k)
        reg = t.add(reg, t.sum(t.square(cv[i].C[k])));
      accumulate(coeff, reg);
    }
  }

  LossBreakdown bd;
  std::optional<Var> total;
  auto finish = [&](std::optional<Var>& term, double weight, double* slot,
                    const char* name) {
    if (!term) return;
    *slot = t.scalar(*term);
    check_finite(*slot, name);
    Var weighted = t.scale(*term, weight);
    total = total ? t.add(*total, weighted) : weighted;
  };
  finish(recon, weights.recon, &bd.recon, "recon");
  finish(ld, weights.ld, &bd.ld, "latent_dynamics");
  finish(rollout, weights.rollout, &bd.rollout, "rollout");
  finish(ic_rollout, weights.ic_rollout, &bd.ic_rollout, "ic_rollout");
  finish(consistency, weights.consistency, &bd.consistency, "consistency");
  finish(chain, weights.chain_rule, &bd.chain_rule, "chain_rule");
  finish(coeff, weights.coefficient, &bd.coefficient, "coefficient");

  Var result = total ? *total : t.constant(Mat::Zero(1, 1));
  bd.total = t.scalar(result);
  check_finite(bd.total, "total");
  if (breakdown) *breakdown = bd;
  return result;
}

LossBreakdown total_loss(const LossProblem& problem) {
  LossAssembler assembler(problem.bundles, problem.options);
  Tape tape;
  StackVars sv = register_stack(tape, *problem.stack);
  std::vector<CoeffVars> cv;
  for (const auto& c : *problem.table) cv.push_back(register_coeffs(tape, c));
  Rng rng = Rng::stream(problem.rollout_seed, uint64_t(problem.anneal.epoch));
  LossBreakdown bd;
  assembler.build(tape, sv, cv, problem.weights, problem.anneal, rng, &bd);
  return bd;
}

}  // namespace hlasdi
