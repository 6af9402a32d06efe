#include "sgphmc/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "sgphmc/errors.hpp"
#include "sgphmc/log.hpp"

namespace sgphmc {

namespace {

Eigen::VectorXd pack(const UnconstrainedHypers& u, const Eigen::MatrixXd& Z) {
  Eigen::VectorXd p(u.size() + Z.size());
  p.head(u.size()) = u;
  p.tail(Z.size()) = Eigen::Map<const Eigen::VectorXd>(Z.data(), Z.size());
  return p;
}

void unpack(const Eigen::MatrixXd& p, Eigen::Index n_hyper, UnconstrainedHypers& u,
            Eigen::MatrixXd& Z) {
  u = p.col(0).head(n_hyper);
  Z = Eigen::Map<const Eigen::MatrixXd>(p.col(0).tail(Z.size()).data(), Z.rows(), Z.cols());
}

void check_finite(double elbo, int step) {
  if (!std::isfinite(elbo))
    throw NumericalError("non-finite ELBO at optimization step " + std::to_string(step));
}

std::uint64_t window_seed(std::uint64_t seed, int window) {
  return seed * 6364136223846793005ULL + 1442695040888963407ULL * static_cast<std::uint64_t>(window + 1);
}

}  // namespace

void adam_step(AdamState& state, const Eigen::MatrixXd& grad, Eigen::MatrixXd& params,
               const AdamConfig& config) {
  if (grad.rows() != params.rows() || grad.cols() != params.cols())
    throw InputError("adam_step: gradient and parameter shapes differ");
  if (state.first_moment.size() == 0) state = AdamState(params.rows(), params.cols());
  if (state.first_moment.rows() != params.rows() || state.first_moment.cols() != params.cols())
    throw InputError("adam_step: optimizer state shape differs from parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grad;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  params.array() += config.learning_rate * (state.first_moment.array() / bc1) /
                    ((state.second_moment.array() / bc2).sqrt() + config.epsilon);
}

WarmStartResult warm_start(const Dataset& data, const Hypers& h0, const InducingSet& z0, int steps,
                           const AdamConfig& adam) {
  if (steps < 0) throw InputError("warm_start: steps must be >= 0");
  WarmStartResult r{h0, z0, {}};
  if (steps == 0) return r;
  const Eigen::Index n_hyper = h0.dims() + 2;
  UnconstrainedHypers u = to_unconstrained(h0);
  Eigen::MatrixXd Z = z0.Z;
  Eigen::MatrixXd params = pack(u, Z);
  AdamState state(params.rows(), 1);
  for (int s = 0; s < steps; ++s) {
    const SgprGradient g = collapsed_elbo_grad(data, from_unconstrained(u), InducingSet{Z});
    check_finite(g.value, s);
    r.elbo_history.push_back(g.value);
    adam_step(state, pack(g.grad_u, g.grad_Z), params, adam);
    unpack(params, n_hyper, u, Z);
  }
  r.hypers = from_unconstrained(u);
  r.inducing = InducingSet{Z};
  const double final_elbo = collapsed_elbo(data, r.hypers, r.inducing);
  check_finite(final_elbo, steps);
  r.elbo_history.push_back(final_elbo);
  return r;
}

WarmStartResult optimize_inducing(const Dataset& data, const Hypers& h, const InducingSet& z0,
                                  int steps, const AdamConfig& adam) {
  if (steps < 0) throw InputError("optimize_inducing: steps must be >= 0");
  WarmStartResult r{h, z0, {}};
  AdamState state(z0.size(), z0.dims());
  for (int s = 0; s < steps; ++s) {
    const SgprGradient g = collapsed_elbo_grad(data, h, r.inducing);
    check_finite(g.value, s);
    r.elbo_history.push_back(g.value);
    adam_step(state, g.grad_Z, r.inducing.Z, adam);
  }
  if (steps > 0) r.elbo_history.push_back(collapsed_elbo(data, h, r.inducing));
  return r;
}

StochasticElbo stochastic_elbo_grad(const Dataset& data, const InducingSet& z,
                                    const std::vector<Hypers>& thetas) {
  if (thetas.empty()) throw InputError("stochastic_elbo: need at least one sample");
  StochasticElbo out;
  out.grad_Z = Eigen::MatrixXd::Zero(z.size(), z.dims());
  std::string last_error;
  for (const Hypers& h : thetas) {
    try {
      const SgprGradient g = collapsed_elbo_grad(data, h, z);
      if (!std::isfinite(g.value) || !g.grad_Z.allFinite())
        throw NumericalError("non-finite collapsed ELBO");
      out.value += g.value;
      out.grad_Z += g.grad_Z;
      ++out.used;
    } catch (const NumericalError& e) {
      last_error = e.what();
      log_warning(std::string("stochastic_elbo: dropping sample: ") + e.what());
    }
  }
  if (out.used == 0) throw NumericalError("stochastic_elbo: every sample failed: " + last_error);
  out.value /= out.used;
  out.grad_Z /= out.used;
  return out;
}

double stochastic_elbo(const Dataset& data, const InducingSet& z,
                       const std::vector<Hypers>& thetas) {
  if (thetas.empty()) throw InputError("stochastic_elbo: need at least one sample");
  double sum = 0.0;
  int used = 0;
  std::string last_error;
  for (const Hypers& h : thetas) {
    try {
      const double v = collapsed_elbo(data, h, z);
      if (!std::isfinite(v)) throw NumericalError("non-finite collapsed ELBO");
      sum += v;
      ++used;
    } catch (const NumericalError& e) {
      last_error = e.what();
      log_warning(std::string("stochastic_elbo: dropping sample: ") + e.what());
    }
  }
  if (used == 0) throw NumericalError("stochastic_elbo: every sample failed: " + last_error);
  return sum / used;
}

void TrainConfig::validate() const {
  if (warm_start_steps < 0 || total_steps < 0) throw InputError("train: step counts must be >= 0");
  if (sample_interval < 1) throw InputError("train: sample_interval must be >= 1");
  if (total_steps > 0 && sample_interval > total_steps)
    throw InputError("train: sample_interval must not exceed total_steps");
  if (first_window_samples < 1 || samples_per_window < 1 || final_samples < 1)
    throw InputError("train: sample counts must be >= 1");
  if (first_window_tune < 0 || later_window_tune < 0) throw InputError("train: tune counts must be >= 0");
  if (!(adam.learning_rate > 0.0)) throw InputError("train: learning rate must be positive");
  if (converge_tol < 0.0 || converge_window < 1) throw InputError("train: bad convergence settings");
}

TrainedModel train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                   const TrainConfig& config) {
  config.validate();
  if (z0.size() > data.size())
    log_warning("train: more inducing points (" + std::to_string(z0.size()) + ") than data rows (" +
                std::to_string(data.size()) + ")");

  TrainedModel model;
  const WarmStartResult warm = warm_start(data, h0, z0, config.warm_start_steps, config.adam);
  model.warm_hypers = warm.hypers;
  model.warm_inducing = warm.inducing;
  model.warm_elbo_history = warm.elbo_history;

  InducingSet z = warm.inducing;
  std::vector<Hypers> thetas{warm.hypers};
  Eigen::VectorXd position = to_unconstrained(warm.hypers);
  double step_size = config.init_step_size;

  auto run_window = [&](int n_samples, int n_tune) {
    SamplerConfig sc;
    sc.n_samples = n_samples;
    sc.n_tune = n_tune;
    sc.target_accept = config.target_accept;
    sc.init_step_size = step_size;
    sc.path_length_steps = config.path_length_steps;
    sc.seed = window_seed(config.seed, model.windows);
    const TargetDensity target = make_target(data, z, config.prior);
    Trace trace = hmc_sample(target, sc, position);
    ++model.windows;
    step_size = trace.final_step_size;
    position = trace.samples.row(trace.size() - 1).transpose();
    model.sampling_seconds += trace.sampling_seconds;
    model.tuning_seconds += trace.tuning_seconds;
    return trace;
  };

  AdamState adam(z.size(), z.dims());
  for (int t = 1; t <= config.total_steps; ++t) {
    const StochasticElbo se = stochastic_elbo_grad(data, z, thetas);
    check_finite(se.value, t);
    model.elbo_history.push_back(se.value);
    model.window_history.push_back(model.windows);
    adam_step(adam, se.grad_Z, z.Z, config.adam);

    if (t % config.sample_interval == 0) {
      const bool first = model.windows == 0;
      const Trace trace = run_window(first ? config.first_window_samples : config.samples_per_window,
                                     first ? config.first_window_tune : config.later_window_tune);
      thetas.clear();
      for (Eigen::Index j = 0; j < trace.size(); ++j) thetas.push_back(trace.hypers(j));
    }

    if (config.converge_tol > 0.0 && t > config.converge_window) {
      const double now = model.elbo_history.back();
      const double before = model.elbo_history[model.elbo_history.size() - 1 - config.converge_window];
      if (std::abs(now - before) <= config.converge_tol * std::abs(before)) {
        log_info("train: converged at step " + std::to_string(t));
        break;
      }
    }
  }

  const int final_tune = model.windows == 0 ? config.first_window_tune : config.later_window_tune;
  model.trace = run_window(config.final_samples, final_tune);
  model.inducing = z;
  model.step_size_carryover = step_size;
  return model;
}

void write_training_log(const TrainedModel& model, std::ostream& out) {
  out << "phase,step,elbo,window\n" << std::setprecision(17);
  for (std::size_t i = 0; i < model.warm_elbo_history.size(); ++i)
    out << "warm," << i << ',' << model.warm_elbo_history[i] << ",-1\n";
  for (std::size_t i = 0; i < model.elbo_history.size(); ++i)
    out << "train," << i + 1 << ',' << model.elbo_history[i] << ',' << model.window_history[i] << '\n';
}

}  // namespace sgphmc
