#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/kernels.hpp"
#include "sgphmc/sgpr.hpp"

namespace sgphmc {

/// Hyperprior families.
///   kHalfCauchy: Gamma(2, 1) lengthscales, HalfCauchy(1) on sig_f and sig_n.
///   kGamma:      Gamma(2, 1) on every hyperparameter.
///   kFlat:       zero log density (test hook).
enum class Prior { kHalfCauchy, kGamma, kFlat };

Prior parse_prior(const std::string& name);
std::string prior_name(Prior prior);

double log_prior(const Hypers& h, Prior prior = Prior::kHalfCauchy);
/// d log p(h) / du for u = to_unconstrained(h) (no Jacobian term).
Eigen::VectorXd log_prior_grad_unconstrained(const Hypers& h, Prior prior = Prior::kHalfCauchy);

/// Unnormalized log density on an unconstrained space. `evaluate` returns the
/// log density and fills `grad` when non-null; factorization failures come
/// back as -infinity. Must be safe to share read-only across threads.
struct TargetDensity {
  Eigen::Index dimension = 0;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> evaluate;

  double log_density(const Eigen::VectorXd& u) const { return evaluate(u, nullptr); }
  Eigen::VectorXd grad(const Eigen::VectorXd& u) const;
};

/// log q*(theta) up to a constant: collapsed ELBO + log prior + log Jacobian.
/// `data` must outlive the returned target.
TargetDensity make_target(const Dataset& data, const InducingSet& z,
                          Prior prior = Prior::kHalfCauchy);

struct PhasePoint {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  double log_density = 0.0;
  Eigen::VectorXd grad;

  /// -log pi(q) + |p|^2 / 2 (identity mass matrix).
  double hamiltonian() const { return -log_density + 0.5 * momentum.squaredNorm(); }
};

/// Evaluates the target at `position`; momentum is left empty.
PhasePoint make_phase_point(const TargetDensity& target, const Eigen::VectorXd& position);

struct LeapfrogResult {
  PhasePoint end;
  bool divergent = false;
};

/// `n_steps` leapfrog steps with identity mass; the final momentum is negated
/// so that applying the map twice returns to the start.
LeapfrogResult leapfrog(const PhasePoint& start, const TargetDensity& target, double step_size,
                        int n_steps);

struct SamplerConfig {
  int n_samples = 1000;
  int n_tune = 500;
  double target_accept = 0.8;
  double init_step_size = 0.1;
  int path_length_steps = 10;
  std::uint64_t seed = 0;
  double max_energy_error = 1000.0;  // divergence threshold, nats

  void validate() const;
};

/// Hoffman & Gelman (2014) dual averaging of log step size.
class DualAveraging {
 public:
  explicit DualAveraging(double init_step_size, double target_accept, double t0 = 10.0,
                         double gamma = 0.05, double kappa = 0.75);
  void update(double accept_prob);
  double step_size() const;       // current iterate
  double final_step_size() const; // averaged iterate

 private:
  double mu_;
  double target_;
  double t0_;
  double gamma_;
  double kappa_;
  double h_bar_ = 0.0;
  double log_step_;
  double log_step_bar_ = 0.0;
  int m_ = 0;
};

/// Kept draws and per-draw sampler statistics. Columns of `samples` are the
/// target's unconstrained coordinates; for hyperparameter targets the last
/// D + 2 columns are UnconstrainedHypers and the first `n_latent` columns are
/// any additional latent variables (whitened inducing values for JointHMC).
struct Trace {
  Eigen::MatrixXd samples;
  Eigen::Index n_latent = 0;
  Eigen::VectorXd accept_prob;
  Eigen::VectorXd energy;            // Hamiltonian at the kept state
  Eigen::VectorXd potential_energy;  // -log pi at the kept state
  Eigen::VectorXd step_size;         // step size used for each kept draw
  std::vector<bool> divergent;       // proposal for this draw diverged (and was rejected)
  Eigen::VectorXd tune_step_size;    // adaptation history
  double final_step_size = 0.0;
  int tune_divergences = 0;
  double tuning_seconds = 0.0;
  double sampling_seconds = 0.0;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index input_dim() const { return samples.cols() - n_latent - 2; }
  UnconstrainedHypers theta(Eigen::Index j) const;
  Hypers hypers(Eigen::Index j) const;
  /// J x (D + 2) matrix of constrained hyperparameters (ls..., sig_f, sig_n).
  Eigen::MatrixXd constrained() const;
  /// ls[0..D-1], sig_f, sig_n.
  std::vector<std::string> hyper_names() const;
  int divergence_count() const;
};

class SamplerError : public std::runtime_error {
 public:
  SamplerError(const std::string& what, Eigen::VectorXd last_state)
      : std::runtime_error(what), last_state_(std::move(last_state)) {}
  const Eigen::VectorXd& last_state() const { return last_state_; }

 private:
  Eigen::VectorXd last_state_;
};

/// n_tune adaptation iterations (discarded) followed by n_samples kept draws.
/// Throws SamplerError when at least 90% of the tuning iterations diverge.
Trace hmc_sample(const TargetDensity& target, const SamplerConfig& config,
                 const Eigen::VectorXd& init, Eigen::Index n_latent = 0);

/// Comma separated: [v[0..M-1],] ls[0..D-1], sig_f, sig_n, accept_prob, energy.
/// Hyperparameters are written on the constrained scale.
void write_trace(const Trace& trace, std::ostream& out);
Trace read_trace(std::istream& in);

}  // namespace sgphmc
