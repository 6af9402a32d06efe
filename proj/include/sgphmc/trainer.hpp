#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/hmc.hpp"
#include "sgphmc/kernels.hpp"
#include "sgphmc/sgpr.hpp"

namespace sgphmc {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::MatrixXd first_moment;
  Eigen::MatrixXd second_moment;
  long step = 0;

  AdamState() = default;
  AdamState(Eigen::Index rows, Eigen::Index cols)
      : first_moment(Eigen::MatrixXd::Zero(rows, cols)),
        second_moment(Eigen::MatrixXd::Zero(rows, cols)) {}
};

/// One bias-corrected Adam step. Ascent: the gradient is added.
void adam_step(AdamState& state, const Eigen::MatrixXd& grad, Eigen::MatrixXd& params,
               const AdamConfig& config);

struct WarmStartResult {
  Hypers hypers;
  InducingSet inducing;
  std::vector<double> elbo_history;  // ELBO before each step, then the final value
};

/// Joint Adam ascent of the collapsed ELBO over (unconstrained hypers, Z)
/// with a single optimizer state. Throws NumericalError naming the step on a
/// non-finite ELBO.
WarmStartResult warm_start(const Dataset& data, const Hypers& h0, const InducingSet& z0, int steps,
                           const AdamConfig& adam = {});

/// Adam on Z alone with hypers held fixed.
WarmStartResult optimize_inducing(const Dataset& data, const Hypers& h, const InducingSet& z0,
                                  int steps, const AdamConfig& adam = {});

struct StochasticElbo {
  double value = 0.0;
  Eigen::MatrixXd grad_Z;
  int used = 0;  // samples whose factorization succeeded
};

/// Mean collapsed ELBO and mean Z-gradient over hyperparameter samples.
/// Samples that fail to factorize are dropped with a warning; if all fail the
/// last NumericalError is rethrown.
StochasticElbo stochastic_elbo_grad(const Dataset& data, const InducingSet& z,
                                    const std::vector<Hypers>& thetas);
double stochastic_elbo(const Dataset& data, const InducingSet& z,
                       const std::vector<Hypers>& thetas);

struct TrainConfig {
  int warm_start_steps = 100;
  int total_steps = 900;      // T
  int sample_interval = 50;   // L
  int first_window_samples = 100;
  int first_window_tune = 500;
  int samples_per_window = 10;  // J for later windows
  int later_window_tune = 50;
  int final_samples = 100;
  AdamConfig adam;
  Prior prior = Prior::kHalfCauchy;
  double target_accept = 0.8;
  double init_step_size = 0.1;
  int path_length_steps = 10;
  /// Stop early when |L(t) - L(t - w)| <= tol |L(t - w)| with w = converge_window.
  /// Zero disables the check.
  double converge_tol = 0.0;
  int converge_window = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainedModel {
  InducingSet inducing;       // Z_opt
  Trace trace;                // final window
  Hypers warm_hypers;
  InducingSet warm_inducing;
  std::vector<double> elbo_history;  // stochastic ELBO per main-loop step
  std::vector<int> window_history;   // sampling window whose thetas were used
  std::vector<double> warm_elbo_history;
  double step_size_carryover = 0.0;
  int windows = 0;                   // sampling windows run, final included
  double sampling_seconds = 0.0;     // kept-draw time summed over windows
  double tuning_seconds = 0.0;
};

/// Warm start, then Adam on Z against the stochastic ELBO with a sampling
/// window every `sample_interval` steps, then a final window of
/// `final_samples` draws.
TrainedModel train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                   const TrainConfig& config);

/// One line per step: phase,step,elbo,window.
void write_training_log(const TrainedModel& model, std::ostream& out);

}  // namespace sgphmc
