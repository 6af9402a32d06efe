#pragma once

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/hmc.hpp"
#include "sgphmc/predict.hpp"
#include "sgphmc/sgpr.hpp"
#include "sgphmc/trainer.hpp"

namespace sgphmc {

/// Type-II maximum likelihood on the collapsed bound: joint Adam ascent over
/// (unconstrained hypers, Z). Same routine as the warm start, run longer.
WarmStartResult ml2_train(const Dataset& data, const Hypers& h0, const InducingSet& z0, int steps,
                          const AdamConfig& adam = {});

/// exact_lml + log prior + log Jacobian over UnconstrainedHypers. O(N^3).
TargetDensity make_exact_target(const Dataset& data, Prior prior = Prior::kHalfCauchy);

Trace exact_hmc_train(const Dataset& data, const Hypers& h0, const SamplerConfig& config,
                      Prior prior = Prior::kHalfCauchy);

MixturePredictive exact_mixture_predict(const Dataset& data, const Trace& trace,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                        bool include_noise);

/// Joint density over (v, theta) with u = L_mm v whitened:
///   log N(v; 0, I) + log p(theta) + log Jacobian
///   + sum_n [log N(y_n; k_n^T K_mm^{-1} u, sig_n^2) - (k_nn - q_nn) / (2 sig_n^2)].
/// State layout: v (M entries) followed by UnconstrainedHypers.
TargetDensity joint_hmc_target(const Dataset& data, const InducingSet& z,
                               Prior prior = Prior::kGamma);

struct JointConfig {
  int warm_start_steps = 100;  // Adam on Z only, hypers at their initial values
  AdamConfig adam;
  SamplerConfig sampler{1000, 500, 0.8, 0.01, 10, 0, 1000.0};
  Prior prior = Prior::kGamma;
};

struct JointModel {
  InducingSet inducing;
  Trace trace;  // n_latent = M
};

JointModel joint_hmc_train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                           const JointConfig& config);

/// Each (v_j, theta_j) draw is a point mass on u: mean K_*m L^{-T} v_j,
/// variance k_** - q_** (+ sig_n^2).
MixturePredictive joint_mixture_predict(const Dataset& data, const InducingSet& z,
                                        const Trace& trace,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                        bool include_noise);

/// Ablation: Z stays at z0, no warm start, one sampling window of
/// `final_samples` draws after `first_window_tune` tuning iterations.
TrainedModel fixed_z_train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                           const TrainConfig& config);

}  // namespace sgphmc
