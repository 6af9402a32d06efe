#include "sgphmc/hmc.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "sgphmc/errors.hpp"

namespace sgphmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Gamma(shape 2, rate 1): x e^{-x}
double log_gamma21(double x) { return std::log(x) - x; }
double dlog_gamma21_du(double x) { return 1.0 - x; }

// HalfCauchy(scale 1): 2 / (pi (1 + x^2))
double log_half_cauchy(double x) { return std::log(2.0 / std::numbers::pi) - std::log1p(x * x); }
double dlog_half_cauchy_du(double x) { return -2.0 * x * x / (1.0 + x * x); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

Prior parse_prior(const std::string& name) {
  if (name == "halfcauchy" || name == "default") return Prior::kHalfCauchy;
  if (name == "gamma") return Prior::kGamma;
  if (name == "flat") return Prior::kFlat;
  throw InputError("unknown prior '" + name + "' (expected halfcauchy, gamma or flat)");
}

std::string prior_name(Prior prior) {
  switch (prior) {
    case Prior::kHalfCauchy:
      return "halfcauchy";
    case Prior::kGamma:
      return "gamma";
    case Prior::kFlat:
      return "flat";
  }
  return "?";
}

double log_prior(const Hypers& h, Prior prior) {
  validate(h);
  if (prior == Prior::kFlat) return 0.0;
  double lp = 0.0;
  for (Eigen::Index d = 0; d < h.dims(); ++d) lp += log_gamma21(h.lengthscales(d));
  if (prior == Prior::kHalfCauchy) {
    lp += log_half_cauchy(h.signal_std) + log_half_cauchy(h.noise_std);
  } else {
    lp += log_gamma21(h.signal_std) + log_gamma21(h.noise_std);
  }
  return lp;
}

Eigen::VectorXd log_prior_grad_unconstrained(const Hypers& h, Prior prior) {
  const Eigen::Index D = h.dims();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(D + 2);
  if (prior == Prior::kFlat) return g;
  for (Eigen::Index d = 0; d < D; ++d) g(d) = dlog_gamma21_du(h.lengthscales(d));
  if (prior == Prior::kHalfCauchy) {
    g(D) = dlog_half_cauchy_du(h.signal_std);
    g(D + 1) = dlog_half_cauchy_du(h.noise_std);
  } else {
    g(D) = dlog_gamma21_du(h.signal_std);
    g(D + 1) = dlog_gamma21_du(h.noise_std);
  }
  return g;
}

Eigen::VectorXd TargetDensity::grad(const Eigen::VectorXd& u) const {
  Eigen::VectorXd g;
  evaluate(u, &g);
  return g;
}

TargetDensity make_target(const Dataset& data, const InducingSet& z, Prior prior) {
  TargetDensity t;
  t.dimension = data.dims() + 2;
  const Dataset* dp = &data;
  t.evaluate = [dp, z, prior](const Eigen::VectorXd& u, Eigen::VectorXd* grad) -> double {
    if (!u.allFinite()) return kNegInf;
    const Hypers h = from_unconstrained(u);
    try {
      const SgprWorkspace ws(*dp, h, z);
      const double value = ws.elbo() + log_prior(h, prior) + log_jacobian(u);
      if (grad != nullptr) {
        *grad = ws.gradient().grad_u + log_prior_grad_unconstrained(h, prior);
        grad->array() += 1.0;
      }
      return std::isfinite(value) ? value : kNegInf;
    } catch (const NumericalError&) {
      return kNegInf;
    } catch (const InputError&) {
      // exp under/overflow to 0 or inf
      return kNegInf;
    }
  };
  return t;
}

PhasePoint make_phase_point(const TargetDensity& target, const Eigen::VectorXd& position) {
  PhasePoint p;
  p.position = position;
  p.log_density = target.evaluate(position, &p.grad);
  return p;
}

LeapfrogResult leapfrog(const PhasePoint& start, const TargetDensity& target, double step_size,
                        int n_steps) {
  LeapfrogResult r;
  PhasePoint& s = r.end;
  s = start;
  if (!std::isfinite(s.log_density) || s.grad.size() != s.position.size()) {
    r.divergent = true;
    return r;
  }
  s.momentum += 0.5 * step_size * s.grad;
  for (int i = 0; i < n_steps; ++i) {
    s.position += step_size * s.momentum;
    s.log_density = target.evaluate(s.position, &s.grad);
    if (!std::isfinite(s.log_density) || !s.grad.allFinite()) {
      r.divergent = true;
      return r;
    }
    const double scale = (i + 1 == n_steps) ? 0.5 : 1.0;
    s.momentum += scale * step_size * s.grad;
  }
  s.momentum = -s.momentum;
  if (!std::isfinite(s.hamiltonian())) r.divergent = true;
  return r;
}

void SamplerConfig::validate() const {
  if (n_samples < 0 || n_tune < 0) throw InputError("sampler: counts must be non-negative");
  if (path_length_steps < 1) throw InputError("sampler: path_length_steps must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw InputError("sampler: target_accept must lie in (0, 1)");
  if (!(init_step_size > 0.0) || !std::isfinite(init_step_size))
    throw InputError("sampler: init_step_size must be positive");
}

DualAveraging::DualAveraging(double init_step_size, double target_accept, double t0, double gamma,
                             double kappa)
    : mu_(std::log(10.0 * init_step_size)),
      target_(target_accept),
      t0_(t0),
      gamma_(gamma),
      kappa_(kappa),
      log_step_(std::log(init_step_size)),
      log_step_bar_(std::log(init_step_size)) {}

void DualAveraging::update(double accept_prob) {
  ++m_;
  const double m = static_cast<double>(m_);
  const double w = 1.0 / (m + t0_);
  h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_prob);
  log_step_ = mu_ - std::sqrt(m) / gamma_ * h_bar_;
  const double eta = std::pow(m, -kappa_);
  log_step_bar_ = eta * log_step_ + (1.0 - eta) * log_step_bar_;
}

double DualAveraging::step_size() const { return std::exp(log_step_); }

double DualAveraging::final_step_size() const { return std::exp(log_step_bar_); }

UnconstrainedHypers Trace::theta(Eigen::Index j) const {
  return samples.row(j).tail(samples.cols() - n_latent).transpose();
}

Hypers Trace::hypers(Eigen::Index j) const { return from_unconstrained(theta(j)); }

Eigen::MatrixXd Trace::constrained() const {
  return samples.rightCols(samples.cols() - n_latent).array().exp().matrix();
}

std::vector<std::string> Trace::hyper_names() const {
  std::vector<std::string> names;
  for (Eigen::Index d = 0; d < input_dim(); ++d) names.push_back("ls[" + std::to_string(d) + "]");
  names.emplace_back("sig_f");
  names.emplace_back("sig_n");
  return names;
}

int Trace::divergence_count() const {
  int n = 0;
  for (bool b : divergent) n += b ? 1 : 0;
  return n;
}

Trace hmc_sample(const TargetDensity& target, const SamplerConfig& config,
                 const Eigen::VectorXd& init, Eigen::Index n_latent) {
  config.validate();
  if (init.size() != target.dimension) throw InputError("hmc_sample: init has wrong dimension");
  PhasePoint current = make_phase_point(target, init);
  if (!std::isfinite(current.log_density) || !current.grad.allFinite())
    throw SamplerError("hmc_sample: target density is not finite at the initial point", init);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Eigen::Index dim = target.dimension;

  Trace trace;
  trace.n_latent = n_latent;
  trace.samples.resize(config.n_samples, dim);
  trace.accept_prob.resize(config.n_samples);
  trace.energy.resize(config.n_samples);
  trace.potential_energy.resize(config.n_samples);
  trace.step_size.resize(config.n_samples);
  trace.divergent.assign(config.n_samples, false);
  trace.tune_step_size.resize(config.n_tune);

  DualAveraging adapt(config.init_step_size, config.target_accept);

  // One HMC transition; returns (accept_prob, divergent).
  auto transition = [&](double step) -> std::pair<double, bool> {
    current.momentum.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) current.momentum(i) = normal(rng);
    const double h0 = current.hamiltonian();
    LeapfrogResult prop = leapfrog(current, target, step, config.path_length_steps);
    double accept = 0.0;
    bool divergent = prop.divergent;
    if (!divergent) {
      const double dh = prop.end.hamiltonian() - h0;
      if (!std::isfinite(dh) || dh > config.max_energy_error) {
        divergent = true;
      } else {
        accept = std::min(1.0, std::exp(-dh));
      }
    }
    const double u = uniform(rng);
    if (!divergent && u < accept) current = std::move(prop.end);
    return {accept, divergent};
  };

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  int tune_div = 0;
  for (int i = 0; i < config.n_tune; ++i) {
    const double step = adapt.step_size();
    trace.tune_step_size(i) = step;
    const auto [accept, divergent] = transition(step);
    tune_div += divergent ? 1 : 0;
    adapt.update(accept);
  }
  auto t1 = clock::now();
  trace.tune_divergences = tune_div;
  if (config.n_tune >= 10 && tune_div >= 0.9 * config.n_tune) {
    throw SamplerError("hmc_sample: " + std::to_string(tune_div) + " of " +
                           std::to_string(config.n_tune) + " tuning iterations diverged",
                       current.position);
  }
  const double step = config.n_tune > 0 ? adapt.final_step_size() : config.init_step_size;
  trace.final_step_size = step;

  for (int j = 0; j < config.n_samples; ++j) {
    const auto [accept, divergent] = transition(step);
    trace.samples.row(j) = current.position.transpose();
    trace.accept_prob(j) = accept;
    trace.potential_energy(j) = -current.log_density;
    trace.energy(j) = current.hamiltonian();
    trace.step_size(j) = step;
    trace.divergent[j] = divergent;
  }
  auto t2 = clock::now();
  if (config.n_tune < 10 && config.n_samples >= 10 &&
      trace.divergence_count() >= 0.9 * config.n_samples) {
    throw SamplerError("hmc_sample: nearly all draws diverged", current.position);
  }
  trace.tuning_seconds = std::chrono::duration<double>(t1 - t0).count();
  trace.sampling_seconds = std::chrono::duration<double>(t2 - t1).count();
  return trace;
}

void write_trace(const Trace& trace, std::ostream& out) {
  const Eigen::Index D = trace.input_dim();
  std::vector<std::string> cols;
  for (Eigen::Index m = 0; m < trace.n_latent; ++m) cols.push_back("v[" + std::to_string(m) + "]");
  for (auto& n : trace.hyper_names()) cols.push_back(n);
  cols.emplace_back("accept_prob");
  cols.emplace_back("energy");
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    for (Eigen::Index m = 0; m < trace.n_latent; ++m) out << trace.samples(j, m) << ',';
    for (Eigen::Index k = 0; k < D + 2; ++k) out << std::exp(trace.samples(j, trace.n_latent + k)) << ',';
    out << (trace.accept_prob.size() > j ? trace.accept_prob(j) : 0.0) << ','
        << (trace.energy.size() > j ? trace.energy(j) : 0.0) << '\n';
  }
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: empty input", 0, 0);
  const std::vector<std::string> header = split_csv(line);
  Eigen::Index n_latent = 0;
  Eigen::Index n_ls = 0;
  long sig_f = -1, sig_n = -1, accept = -1, energy = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.rfind("v[", 0) == 0) {
      ++n_latent;
    } else if (h.rfind("ls[", 0) == 0) {
      ++n_ls;
    } else if (h == "sig_f") {
      sig_f = static_cast<long>(i);
    } else if (h == "sig_n") {
      sig_n = static_cast<long>(i);
    } else if (h == "accept_prob") {
      accept = static_cast<long>(i);
    } else if (h == "energy") {
      energy = static_cast<long>(i);
    }
  }
  if (n_ls == 0 || sig_f < 0 || sig_n < 0)
    throw ParseError("trace: header must contain ls[..], sig_f and sig_n columns", 1, 0);
  std::vector<std::vector<double>> rows;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError("trace: row " + std::to_string(row_no) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()),
                       row_no, static_cast<long>(cells.size()));
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        v[c] = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        throw ParseError("trace: non-numeric cell at row " + std::to_string(row_no) + ", column " +
                             std::to_string(c + 1),
                         row_no, static_cast<long>(c + 1));
      }
    }
    rows.push_back(std::move(v));
  }
  Trace t;
  t.n_latent = n_latent;
  const Eigen::Index J = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dim = n_latent + n_ls + 2;
  t.samples.resize(J, dim);
  t.accept_prob = Eigen::VectorXd::Zero(J);
  t.energy = Eigen::VectorXd::Zero(J);
  t.divergent.assign(J, false);
  for (Eigen::Index j = 0; j < J; ++j) {
    Eigen::Index latent = 0, ls = 0;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& h = header[i];
      const double v = rows[j][i];
      if (h.rfind("v[", 0) == 0) {
        t.samples(j, latent++) = v;
      } else if (h.rfind("ls[", 0) == 0) {
        t.samples(j, n_latent + ls++) = std::log(v);
      }
    }
    t.samples(j, n_latent + n_ls) = std::log(rows[j][sig_f]);
    t.samples(j, n_latent + n_ls + 1) = std::log(rows[j][sig_n]);
    if (accept >= 0) t.accept_prob(j) = rows[j][accept];
    if (energy >= 0) t.energy(j) = rows[j][energy];
  }
  return t;
}

}  // namespace sgphmc
