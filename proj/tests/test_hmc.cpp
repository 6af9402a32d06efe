#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sgphmc/diagnostics.hpp"
#include "sgphmc/errors.hpp"
#include "sgphmc/hmc.hpp"

using namespace sgphmc;

namespace {

// Independent Gaussian with the given standard deviations.
TargetDensity gaussian_target(const Eigen::VectorXd& sd) {
  TargetDensity t;
  t.dimension = sd.size();
  t.evaluate = [sd](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd z = x.cwiseQuotient(sd);
    if (g) *g = -z.cwiseQuotient(sd);
    return -0.5 * z.squaredNorm();
  };
  return t;
}

double gamma21(double x) { return std::log(x) - x; }
double half_cauchy(double x) { return std::log(2.0 / (std::numbers::pi * (1.0 + x * x))); }

}  // namespace

TEST_CASE("log priors match their closed forms") {
  Hypers h;
  h.lengthscales = Eigen::Vector2d(0.7, 2.5);
  h.signal_std = 1.3;
  h.noise_std = 0.2;
  CHECK(log_prior(h, Prior::kGamma) ==
        doctest::Approx(gamma21(0.7) + gamma21(2.5) + gamma21(1.3) + gamma21(0.2)));
  CHECK(log_prior(h, Prior::kHalfCauchy) ==
        doctest::Approx(gamma21(0.7) + gamma21(2.5) + half_cauchy(1.3) + half_cauchy(0.2)));
  CHECK(log_prior(h, Prior::kFlat) == 0.0);
  CHECK_THROWS_AS(parse_prior("lognormal"), InputError);
  CHECK(parse_prior(prior_name(Prior::kGamma)) == Prior::kGamma);

  for (Prior p : {Prior::kGamma, Prior::kHalfCauchy, Prior::kFlat}) {
    const Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& u) { return log_prior(from_unconstrained(u), p); }, to_unconstrained(h));
    CHECK(oracle::close(log_prior_grad_unconstrained(h, p), fd, 1e-7, 1e-9));
  }
}

TEST_CASE("Gamma(2, 1) integrates to one on the log scale with its Jacobian") {
  // int exp(gamma21(e^u) + u) du over a wide grid
  double total = 0.0;
  const double du = 1e-3;
  for (double u = -20.0; u < 5.0; u += du) total += std::exp(gamma21(std::exp(u)) + u) * du;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("q*(theta) target adds prior and Jacobian to the collapsed bound") {
  std::mt19937_64 rng(50);
  const auto inst = oracle::random_instance(rng, 20, 2, 4);
  const InducingSet z{inst.Z};
  const TargetDensity t = make_target(inst.data, z, Prior::kHalfCauchy);
  const Eigen::VectorXd u = to_unconstrained(inst.h);
  CHECK(t.dimension == 4);
  CHECK(t.log_density(u) == doctest::Approx(collapsed_elbo(inst.data, inst.h, z) +
                                            log_prior(inst.h, Prior::kHalfCauchy) + u.sum()));
  const Eigen::VectorXd fd = oracle::fd_gradient([&](const Eigen::VectorXd& x) { return t.log_density(x); }, u);
  CHECK(oracle::close(t.grad(u), fd, 1e-5, 1e-7));
  CHECK(std::isinf(t.log_density(Eigen::VectorXd::Constant(4, 800.0))));
}

TEST_CASE("leapfrog is reversible and nearly conserves energy") {
  const TargetDensity t = gaussian_target(Eigen::Vector3d(1.0, 0.5, 2.0));
  PhasePoint start = make_phase_point(t, Eigen::Vector3d(0.3, -0.2, 1.0));
  start.momentum = Eigen::Vector3d(0.5, 1.0, -0.7);
  const LeapfrogResult fwd = leapfrog(start, t, 0.05, 20);
  CHECK_FALSE(fwd.divergent);
  CHECK(std::abs(fwd.end.hamiltonian() - start.hamiltonian()) < 1e-2);
  const LeapfrogResult back = leapfrog(fwd.end, t, 0.05, 20);
  CHECK((back.end.position - start.position).norm() < 1e-12);
  CHECK((back.end.momentum - start.momentum).norm() < 1e-12);

  // Energy error shrinks as step^2.
  const double e1 = std::abs(leapfrog(start, t, 0.02, 10).end.hamiltonian() - start.hamiltonian());
  const double e2 = std::abs(leapfrog(start, t, 0.01, 20).end.hamiltonian() - start.hamiltonian());
  CHECK(e2 < 0.35 * e1);
}

TEST_CASE("dual averaging settles on a step size that hits the target rate") {
  // Acceptance falls off as exp(-step): the fixed point is step = log(1 / 0.8).
  DualAveraging da(1.0, 0.8);
  for (int i = 0; i < 3000; ++i) da.update(std::min(1.0, std::exp(-da.step_size())));
  CHECK(da.final_step_size() == doctest::Approx(std::log(1.0 / 0.8)).epsilon(0.05));
}

TEST_CASE("HMC draws from a Gaussian have the right moments") {
  const Eigen::Vector2d sd(1.0, 3.0);
  SamplerConfig cfg;
  cfg.n_samples = 4000;
  cfg.n_tune = 500;
  cfg.seed = 7;
  const Trace tr = hmc_sample(gaussian_target(sd), cfg, Eigen::Vector2d(2.0, -2.0));
  CHECK(tr.size() == 4000);
  CHECK(tr.divergence_count() == 0);
  CHECK(tr.accept_prob.mean() > 0.6);
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd x = tr.samples.col(k);
    const double n_eff = ess(x);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    CHECK(std::abs(mean) < 4.0 * sd(k) / std::sqrt(n_eff));
    CHECK(var == doctest::Approx(sd(k) * sd(k)).epsilon(0.15));
  }
}

TEST_CASE("sampling is deterministic for a seed") {
  const TargetDensity t = gaussian_target(Eigen::Vector2d(1.0, 1.0));
  SamplerConfig cfg;
  cfg.n_samples = 50;
  cfg.n_tune = 50;
  cfg.seed = 3;
  const Trace a = hmc_sample(t, cfg, Eigen::Vector2d::Zero());
  const Trace b = hmc_sample(t, cfg, Eigen::Vector2d::Zero());
  CHECK(a.samples == b.samples);
  cfg.seed = 4;
  CHECK(hmc_sample(t, cfg, Eigen::Vector2d::Zero()).samples != a.samples);
}

TEST_CASE("a target that is never finite away from the start fails tuning") {
  TargetDensity t;
  t.dimension = 1;
  t.evaluate = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = Eigen::VectorXd::Zero(1);
    return x(0) == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  SamplerConfig cfg;
  cfg.n_samples = 10;
  cfg.n_tune = 50;
  CHECK_THROWS_AS(hmc_sample(t, cfg, Eigen::VectorXd::Zero(1)), SamplerError);
  CHECK_THROWS_AS(hmc_sample(t, cfg, Eigen::VectorXd::Ones(1)), SamplerError);
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg;
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.path_length_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.init_step_size = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("trace round-trips through CSV on the constrained scale") {
  Trace t;
  t.n_latent = 2;
  t.samples = Eigen::MatrixXd::Random(5, 2 + 3);
  t.accept_prob = Eigen::VectorXd::LinSpaced(5, 0.1, 0.9);
  t.energy = Eigen::VectorXd::LinSpaced(5, -3.0, 3.0);
  std::stringstream ss;
  write_trace(t, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("v[0],v[1],ls[0],sig_f,sig_n,accept_prob,energy\n", 0) == 0);
  const Trace r = read_trace(ss);
  CHECK(r.n_latent == 2);
  CHECK(r.input_dim() == 1);
  CHECK((r.samples - t.samples).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.accept_prob - t.accept_prob).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.hypers(3).signal_std == doctest::Approx(std::exp(t.samples(3, 3))));
  CHECK(r.hyper_names() == std::vector<std::string>{"ls[0]", "sig_f", "sig_n"});

  std::stringstream bad("ls[0],sig_f,sig_n\n1,2\n");
  CHECK_THROWS_AS(read_trace(bad), ParseError);
  std::stringstream nohead("a,b\n1,2\n");
  CHECK_THROWS_AS(read_trace(nohead), ParseError);
}

TEST_CASE("leapfrog on the quadratic target: small drift and unit Jacobian") {
  const TargetDensity t = gaussian_target(Eigen::Vector2d::Ones());
  PhasePoint start = make_phase_point(t, Eigen::Vector2d(0.8, -0.4));
  start.momentum = Eigen::Vector2d(-0.3, 1.1);
  CHECK(std::abs(leapfrog(start, t, 1e-3, 100).end.hamiltonian() - start.hamiltonian()) < 1e-4);

  // Jacobian of (q, p) -> leapfrog(q, p) by central differences.
  auto map = [&](const Eigen::Vector4d& z) {
    PhasePoint s = make_phase_point(t, z.head(2));
    s.momentum = z.tail(2);
    const PhasePoint e = leapfrog(s, t, 0.1, 10).end;
    Eigen::Vector4d out;
    out << e.position, e.momentum;
    return out;
  };
  Eigen::Vector4d z0;
  z0 << start.position, start.momentum;
  Eigen::Matrix4d J;
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector4d a = z0, b = z0;
    a(i) += 1e-6;
    b(i) -= 1e-6;
    J.col(i) = (map(a) - map(b)) / 2e-6;
  }
  CHECK(std::abs(std::abs(J.determinant()) - 1.0) < 1e-6);
}

TEST_CASE("HMC on a standard 3-D Gaussian and a correlated 2-D Gaussian") {
  SamplerConfig cfg;
  cfg.n_samples = 2000;
  cfg.n_tune = 500;
  cfg.seed = 21;
  const Trace tr = hmc_sample(gaussian_target(Eigen::Vector3d::Ones()), cfg, Eigen::Vector3d::Zero());
  const double rate = tr.accept_prob.mean();
  CHECK(rate >= cfg.target_accept - 0.15);
  CHECK(rate <= cfg.target_accept + 0.1);
  CHECK(tr.final_step_size > 0.0);
  CHECK(std::isfinite(tr.final_step_size));
  CHECK(tr.potential_energy.allFinite());
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd x = tr.samples.col(k);
    const double var = (x.array() - x.mean()).square().mean();
    CHECK(std::abs(x.mean()) < 4.0 / std::sqrt(ess(x)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.15));
  }

  // rho = 0.9 via the precision matrix.
  Eigen::Matrix2d P;
  P << 1.0, -0.9, -0.9, 1.0;
  P /= (1.0 - 0.81);
  TargetDensity corr;
  corr.dimension = 2;
  corr.evaluate = [P](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = -P * x;
    return -0.5 * x.dot(P * x);
  };
  cfg.n_samples = 4000;
  const Trace tc = hmc_sample(corr, cfg, Eigen::Vector2d::Zero());
  const Eigen::VectorXd a = tc.samples.col(0).array() - tc.samples.col(0).mean();
  const Eigen::VectorXd b = tc.samples.col(1).array() - tc.samples.col(1).mean();
  CHECK(a.dot(b) / (a.norm() * b.norm()) == doctest::Approx(0.9).epsilon(0.05 / 0.9));
}
