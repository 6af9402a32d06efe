#include "sgphmc/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "linalg.hpp"
#include "sgphmc/errors.hpp"
#include "sgphmc/log.hpp"

namespace sgphmc {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

WarmStartResult ml2_train(const Dataset& data, const Hypers& h0, const InducingSet& z0, int steps,
                          const AdamConfig& adam) {
  return warm_start(data, h0, z0, steps, adam);
}

TargetDensity make_exact_target(const Dataset& data, Prior prior) {
  TargetDensity t;
  t.dimension = data.dims() + 2;
  const Dataset* dp = &data;
  t.evaluate = [dp, prior](const Eigen::VectorXd& u, Eigen::VectorXd* grad) -> double {
    if (!u.allFinite()) return kNegInf;
    const Hypers h = from_unconstrained(u);
    try {
      double value;
      if (grad != nullptr) {
        const ValueAndGrad vg = exact_lml_grad(*dp, h);
        value = vg.value;
        *grad = vg.grad + log_prior_grad_unconstrained(h, prior);
        grad->array() += 1.0;
      } else {
        value = exact_lml(*dp, h);
      }
      value += log_prior(h, prior) + log_jacobian(u);
      return std::isfinite(value) ? value : kNegInf;
    } catch (const NumericalError&) {
      return kNegInf;
    } catch (const InputError&) {
      return kNegInf;
    }
  };
  return t;
}

Trace exact_hmc_train(const Dataset& data, const Hypers& h0, const SamplerConfig& config,
                      Prior prior) {
  const TargetDensity target = make_exact_target(data, prior);
  return hmc_sample(target, config, to_unconstrained(h0));
}

MixturePredictive exact_mixture_predict(const Dataset& data, const Trace& trace,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                        bool include_noise) {
  if (trace.size() == 0) throw InputError("exact_mixture_predict: empty trace");
  std::vector<DiagPrediction> parts;
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    try {
      parts.push_back(exact_predict_diag(data, trace.hypers(j), X_star, include_noise));
    } catch (const NumericalError& e) {
      log_warning("exact_mixture_predict: dropping component " + std::to_string(j) + ": " + e.what());
    }
  }
  if (parts.empty()) throw NumericalError("exact_mixture_predict: every component failed");
  return MixturePredictive::from_components(parts, OutputScale::of(data), include_noise);
}

TargetDensity joint_hmc_target(const Dataset& data, const InducingSet& z, Prior prior) {
  if (z.dims() != data.dims()) throw InputError("joint_hmc_target: Z / data dimension mismatch");
  const Eigen::Index M = z.size();
  const Eigen::Index D = data.dims();
  TargetDensity t;
  t.dimension = M + D + 2;
  const Dataset* dp = &data;
  t.evaluate = [dp, z, prior, M, D](const Eigen::VectorXd& s, Eigen::VectorXd* grad) -> double {
    if (!s.allFinite()) return kNegInf;
    const Dataset& data = *dp;
    const Eigen::VectorXd v = s.head(M);
    const Eigen::VectorXd u = s.tail(D + 2);
    const Hypers h = from_unconstrained(u);
    try {
      validate(h);
      const Eigen::Index N = data.size();
      const double n = static_cast<double>(N);
      const double sigma2 = h.noise_variance();
      const Eigen::MatrixXd kmm = kernel_matrix(z.Z, z.Z, h);
      const detail::KmmFactor kf = detail::factorize_kmm(kmm, h.signal_variance());
      const Eigen::MatrixXd& L = kf.L;
      const auto Lt = L.triangularView<Eigen::Lower>();
      const Eigen::MatrixXd kmn = kernel_matrix(z.Z, data.X, h);
      const Eigen::MatrixXd A = Lt.solve(kmn);  // L^{-1} K_mn
      const Eigen::VectorXd r = data.y - A.transpose() * v;
      const double kdiag_sum = n * h.signal_variance();
      const double qsum = A.squaredNorm();

      const double lik = -0.5 * n * (kLog2Pi + std::log(sigma2)) - 0.5 * r.squaredNorm() / sigma2 -
                         0.5 * (kdiag_sum - qsum) / sigma2;
      const double value = -0.5 * v.squaredNorm() - 0.5 * static_cast<double>(M) * kLog2Pi + lik +
                           log_prior(h, prior) + log_jacobian(u);
      if (!std::isfinite(value)) return kNegInf;

      if (grad != nullptr) {
        grad->resize(M + D + 2);
        const Eigen::VectorXd s_vec = A * r;  // L^{-1} K_mn r
        grad->head(M) = -v + s_vec / sigma2;

        const Eigen::VectorXd w = Lt.transpose().solve(v);  // L^{-T} v
        const Eigen::MatrixXd kinv_kmn = Lt.transpose().solve(A);
        // Data-fit term through mu = K_nm L^{-T} v (K_mn and L); trace term through K_mm^{-1}.
        Eigen::MatrixXd G_kmn = (w * r.transpose() + kinv_kmn) / sigma2;
        const Eigen::MatrixXd L_bar = -(w * s_vec.transpose()) / sigma2;
        Eigen::MatrixXd G_kmm = detail::cholesky_backward(L, L_bar);
        G_kmm -= 0.5 * kinv_kmn * kinv_kmn.transpose() / sigma2;
        G_kmm = detail::symmetrize(G_kmm);

        Eigen::VectorXd gu = Eigen::VectorXd::Zero(D + 2);
        accumulate_self_grad(z.Z, kmm, G_kmm, h, kf.jitter_rel, gu, nullptr);
        accumulate_cross_grad(z.Z, data.X, kmn, G_kmn, h, gu, nullptr);
        gu(D) += -kdiag_sum / sigma2;
        const double g_sigma2 = -0.5 * n / sigma2 + 0.5 * r.squaredNorm() / (sigma2 * sigma2) +
                                0.5 * (kdiag_sum - qsum) / (sigma2 * sigma2);
        gu(D + 1) = 2.0 * sigma2 * g_sigma2;
        gu += log_prior_grad_unconstrained(h, prior);
        gu.array() += 1.0;
        grad->tail(D + 2) = gu;
      }
      return value;
    } catch (const NumericalError&) {
      return kNegInf;
    } catch (const InputError&) {
      return kNegInf;
    }
  };
  return t;
}

JointModel joint_hmc_train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                           const JointConfig& config) {
  JointModel model;
  model.inducing = optimize_inducing(data, h0, z0, config.warm_start_steps, config.adam).inducing;
  const TargetDensity target = joint_hmc_target(data, model.inducing, config.prior);
  const Eigen::Index M = model.inducing.size();
  Eigen::VectorXd init(M + h0.dims() + 2);
  init.head(M).setZero();
  init.tail(h0.dims() + 2) = to_unconstrained(h0);
  model.trace = hmc_sample(target, config.sampler, init, M);
  return model;
}

MixturePredictive joint_mixture_predict(const Dataset& data, const InducingSet& z,
                                        const Trace& trace,
                                        const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                        bool include_noise) {
  if (trace.size() == 0) throw InputError("joint_mixture_predict: empty trace");
  const Eigen::Index M = z.size();
  if (trace.n_latent != M) throw InputError("joint_mixture_predict: trace latent size differs from M");
  std::vector<DiagPrediction> parts;
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    const Hypers h = trace.hypers(j);
    try {
      const Eigen::MatrixXd L =
          detail::factorize_kmm(kernel_matrix(z.Z, z.Z, h), h.signal_variance()).L;
      const Eigen::MatrixXd V = L.triangularView<Eigen::Lower>().solve(kernel_matrix(z.Z, X_star, h));
      DiagPrediction p;
      const Eigen::VectorXd v = trace.samples.row(j).head(M).transpose();
      p.mean = V.transpose() * v;
      p.var = (h.signal_variance() - V.colwise().squaredNorm().array()).transpose().max(0.0).matrix();
      if (include_noise) p.var.array() += h.noise_variance();
      parts.push_back(std::move(p));
    } catch (const NumericalError& e) {
      log_warning("joint_mixture_predict: dropping component " + std::to_string(j) + ": " + e.what());
    }
  }
  if (parts.empty()) throw NumericalError("joint_mixture_predict: every component failed");
  return MixturePredictive::from_components(parts, OutputScale::of(data), include_noise);
}

TrainedModel fixed_z_train(const Dataset& data, const Hypers& h0, const InducingSet& z0,
                           const TrainConfig& config) {
  TrainConfig c = config;
  c.warm_start_steps = 0;
  c.total_steps = 0;
  return train(data, h0, z0, c);
}

}  // namespace sgphmc
