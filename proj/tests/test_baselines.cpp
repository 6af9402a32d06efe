#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sgphmc/baselines.hpp"
#include "sgphmc/errors.hpp"

using namespace sgphmc;

namespace {

// Dense joint log density: v whitened so u = chol(K_mm) v.
double joint_oracle(const oracle::Instance& inst, const Eigen::VectorXd& v, const Hypers& h, Prior prior) {
  const Eigen::MatrixXd K = oracle::rbf(inst.Z, inst.Z, h);
  const Eigen::MatrixXd L = K.llt().matrixL();
  const Eigen::MatrixXd Knm = oracle::rbf(inst.data.X, inst.Z, h);
  const Eigen::VectorXd mu = Knm * K.inverse() * (L * v);
  const double s2 = h.noise_variance();
  double lik = 0.0;
  for (Eigen::Index n = 0; n < inst.data.size(); ++n) {
    const double r = inst.data.y(n) - mu(n);
    const double qnn = Knm.row(n) * K.inverse() * Knm.row(n).transpose();
    lik += -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * r * r / s2 - 0.5 * (h.signal_variance() - qnn) / s2;
  }
  const double m = static_cast<double>(v.size());
  const Eigen::VectorXd u = to_unconstrained(h);
  return -0.5 * v.squaredNorm() - 0.5 * m * std::log(2.0 * M_PI) + lik + log_prior(h, prior) + u.sum();
}

Eigen::VectorXd joint_state(const Eigen::VectorXd& v, const Hypers& h) {
  Eigen::VectorXd s(v.size() + h.dims() + 2);
  s << v, to_unconstrained(h);
  return s;
}

}  // namespace

TEST_CASE("joint target matches the dense oracle and its gradient matches finite differences") {
  std::mt19937_64 rng(80);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng, 20, 1 + t % 2, 3);
    const TargetDensity target = joint_hmc_target(inst.data, InducingSet{inst.Z}, Prior::kGamma);
    CHECK(target.dimension == 3 + inst.data.dims() + 2);
    Eigen::VectorXd v(3);
    for (int i = 0; i < 3; ++i) v(i) = g(rng);
    const Eigen::VectorXd s = joint_state(v, inst.h);
    CHECK(target.log_density(s) == doctest::Approx(joint_oracle(inst, v, inst.h, Prior::kGamma)).epsilon(1e-8));
    const Eigen::VectorXd fd =
        oracle::fd_gradient([&](const Eigen::VectorXd& x) { return target.log_density(x); }, s);
    CHECK(oracle::close(target.grad(s), fd, 1e-5, 1e-6));
  }
}

TEST_CASE("integrating the joint target over v recovers the collapsed target") {
  std::mt19937_64 rng(81);
  for (int t = 0; t < 3; ++t) {
    const auto inst = oracle::random_instance(rng, 15, 1, 1);
    const TargetDensity joint = joint_hmc_target(inst.data, InducingSet{inst.Z}, Prior::kGamma);
    const TargetDensity collapsed = make_target(inst.data, InducingSet{inst.Z}, Prior::kGamma);
    const Eigen::VectorXd u = to_unconstrained(inst.h);
    // The integrand is Gaussian in v; a fine grid over +-15 is effectively exact.
    const double dv = 1e-3;
    std::vector<double> logs;
    for (double v = -15.0; v <= 15.0; v += dv) logs.push_back(joint.log_density(joint_state(Eigen::VectorXd::Constant(1, v), inst.h)));
    const double mx = *std::max_element(logs.begin(), logs.end());
    double sum = 0.0;
    for (double l : logs) sum += std::exp(l - mx);
    CHECK(mx + std::log(sum * dv) == doctest::Approx(collapsed.log_density(u)).epsilon(1e-8));
  }

  // Two inducing points on a 2-D grid.
  const auto inst = oracle::random_instance(rng, 12, 1, 2);
  const TargetDensity joint = joint_hmc_target(inst.data, InducingSet{inst.Z}, Prior::kGamma);
  const TargetDensity collapsed = make_target(inst.data, InducingSet{inst.Z}, Prior::kGamma);
  const double dv = 0.01;
  std::vector<double> logs;
  for (double a = -12.0; a <= 12.0; a += dv)
    for (double b = -12.0; b <= 12.0; b += dv)
      logs.push_back(joint.log_density(joint_state(Eigen::Vector2d(a, b), inst.h)));
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - mx);
  CHECK(mx + std::log(sum * dv * dv) ==
        doctest::Approx(collapsed.log_density(to_unconstrained(inst.h))).epsilon(1e-7));
}

TEST_CASE("exact target is the exact marginal likelihood plus prior and Jacobian") {
  std::mt19937_64 rng(82);
  const auto inst = oracle::random_instance(rng, 15, 2, 1);
  const TargetDensity t = make_exact_target(inst.data, Prior::kHalfCauchy);
  const Eigen::VectorXd u = to_unconstrained(inst.h);
  CHECK(t.log_density(u) ==
        doctest::Approx(oracle::exact_lml(inst.data, inst.h) + log_prior(inst.h, Prior::kHalfCauchy) + u.sum()));
  const Eigen::VectorXd fd = oracle::fd_gradient([&](const Eigen::VectorXd& x) { return t.log_density(x); }, u);
  CHECK(oracle::close(t.grad(u), fd, 1e-5, 1e-7));
}

TEST_CASE("exact HMC recovers the noise level of simulated data") {
  // y = sin(2x) + N(0, 0.2^2) on 80 points: the posterior on sig_n concentrates near 0.2.
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  Dataset d;
  d.X.resize(80, 1);
  d.y.resize(80);
  for (int n = 0; n < 80; ++n) {
    d.X(n, 0) = unif(rng);
    d.y(n) = std::sin(2.0 * d.X(n, 0)) + 0.2 * g(rng);
  }
  SamplerConfig cfg;
  cfg.n_samples = 300;
  cfg.n_tune = 200;
  cfg.seed = 5;
  const Trace tr = exact_hmc_train(d, Hypers::constant(1, 0.693), cfg, Prior::kHalfCauchy);
  const Eigen::MatrixXd c = tr.constrained();
  CHECK(c.col(2).mean() == doctest::Approx(0.2).epsilon(0.25));

  const Eigen::MatrixXd Xs = Eigen::VectorXd::LinSpaced(4, -2.0, 2.0);
  const MixturePredictive mix = exact_mixture_predict(d, tr, Xs, false);
  CHECK(mix.components() == 300);
  const DiagPrediction first = exact_predict_diag(d, tr.hypers(0), Xs);
  CHECK((mix.means.row(0).transpose() - first.mean).norm() < 1e-10);
  CHECK((mix.mean() - Xs.col(0).unaryExpr([](double x) { return std::sin(2.0 * x); })).cwiseAbs().maxCoeff() < 0.3);
}

TEST_CASE("joint HMC runs with whitened latents and predicts through them") {
  std::mt19937_64 rng(84);
  const auto inst = oracle::random_instance(rng, 40, 1, 4);
  JointConfig cfg;
  cfg.warm_start_steps = 10;
  cfg.sampler.n_samples = 50;
  cfg.sampler.n_tune = 100;
  cfg.sampler.seed = 2;
  const JointModel m = joint_hmc_train(inst.data, Hypers::constant(1, 0.693), InducingSet{inst.Z}, cfg);
  CHECK(m.trace.n_latent == 4);
  CHECK(m.trace.size() == 50);
  CHECK(m.trace.input_dim() == 1);

  const Eigen::MatrixXd Xs = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  const MixturePredictive p = joint_mixture_predict(inst.data, m.inducing, m.trace, Xs, false);
  const Hypers h = m.trace.hypers(7);
  const Eigen::MatrixXd K = oracle::rbf(m.inducing.Z, m.inducing.Z, h);
  const Eigen::MatrixXd L = K.llt().matrixL();
  const Eigen::MatrixXd Ksm = oracle::rbf(Xs, m.inducing.Z, h);
  const Eigen::VectorXd v = m.trace.samples.row(7).head(4).transpose();
  const Eigen::VectorXd mean = Ksm * K.inverse() * L * v;
  const Eigen::VectorXd var = (h.signal_variance() - (Ksm * K.inverse() * Ksm.transpose()).diagonal().array()).matrix();
  CHECK((p.means.row(7).transpose() - mean).norm() < 1e-8);
  CHECK((p.vars.row(7).transpose() - var).norm() < 1e-8);

  Trace wrong = m.trace;
  wrong.n_latent = 3;
  CHECK_THROWS_AS(joint_mixture_predict(inst.data, m.inducing, wrong, Xs, false), InputError);
}
