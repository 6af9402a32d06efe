#include "sgphmc/sgpr.hpp"

#include <cmath>

#include "linalg.hpp"
#include "sgphmc/errors.hpp"

namespace sgphmc {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd lower_solve(const Eigen::MatrixXd& L, const Eigen::MatrixXd& B) {
  return L.triangularView<Eigen::Lower>().solve(B);
}

Eigen::MatrixXd upper_solve(const Eigen::MatrixXd& L, const Eigen::MatrixXd& B) {
  return L.transpose().triangularView<Eigen::Upper>().solve(B);
}
}  // namespace

SgprWorkspace::SgprWorkspace(const Dataset& data, const Hypers& h, const InducingSet& z)
    : data_(&data), h_(h), z_(z) {
  validate(h);
  if (z.size() < 1) throw InputError("inducing set must have at least one row");
  if (z.dims() != h.dims() || data.dims() != h.dims())
    throw InputError("inducing set / dataset dimension does not match hypers");
  if (data.y.size() != data.X.rows()) throw InputError("dataset X/y length mismatch");

  const Eigen::Index N = data.size();
  const double sigma = h.noise_std;
  const double sigma2 = h.noise_variance();

  {
    const Eigen::MatrixXd kmm_all = kernel_matrix(z.Z, z.Z, h);
    detail::ActiveFactor af = detail::factorize_kmm_active(kmm_all, h.signal_variance());
    active_ = std::move(af.active);
    l_ = std::move(af.L);
    if (static_cast<Eigen::Index>(active_.size()) == z.size()) {
      za_ = z.Z;
      kmm_ = kmm_all;
    } else {
      za_ = z.Z(active_, Eigen::all);
      kmm_ = kmm_all(active_, active_);
    }
  }
  const Eigen::Index M = za_.rows();
  kmn_ = kernel_matrix(za_, data.X, h);

  a_ = lower_solve(l_, kmn_) / sigma;
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(M, M);
  B.selfadjointView<Eigen::Lower>().rankUpdate(a_);
  B = B.selfadjointView<Eigen::Lower>();
  lb_ = detail::factorize(B, "I + A A^T (Sigma = K_mm + sig_n^-2 K_mn K_nm)").matrixL();
  ay_ = a_ * data.y;
  c_ = lower_solve(lb_, ay_) / sigma;

  const double n = static_cast<double>(N);
  const double kdiag_sum = n * h.signal_variance();
  trace_term_ = -0.5 * (kdiag_sum / sigma2 - a_.squaredNorm());
  elbo_ = -0.5 * n * kLog2Pi - lb_.diagonal().array().log().sum() - n * std::log(sigma) -
          0.5 * data.y.squaredNorm() / sigma2 + 0.5 * c_.squaredNorm() + trace_term_;
}

Eigen::MatrixXd SgprWorkspace::sigma_cholesky() const {
  return (l_.triangularView<Eigen::Lower>() * lb_).eval().triangularView<Eigen::Lower>();
}

Eigen::MatrixXd SgprWorkspace::sigma() const {
  return kmm_ + kmn_ * kmn_.transpose() / h_.noise_variance();
}

SgprGradient SgprWorkspace::gradient() const {
  const Dataset& data = *data_;
  const Eigen::Index M = za_.rows();
  const Eigen::Index N = data.size();
  const Eigen::Index D = h_.dims();
  const double sigma = h_.noise_std;
  const double sigma2 = h_.noise_variance();

  // z = B^{-1} A y,  alpha = (Q_nn + sig^2 I)^{-1} y = (y - A^T z) / sig^2
  const Eigen::VectorXd zvec = upper_solve(lb_, lower_solve(lb_, ay_));
  const Eigen::VectorXd alpha = (data.y - a_.transpose() * zvec) / sigma2;
  // beta = K_mm^{-1} K_mn alpha = sig L^{-T} A alpha
  const Eigen::VectorXd beta = sigma * upper_solve(l_, a_ * alpha);

  Eigen::MatrixXd Binv = upper_solve(lb_, lower_solve(lb_, Eigen::MatrixXd::Identity(M, M)));
  Binv = detail::symmetrize(Binv);
  const Eigen::MatrixXd AAt = a_ * a_.transpose();

  // dF/dK_mm = L^{-T} (I - AA^T - B^{-1}) L^{-1} / 2 - beta beta^T / 2
  Eigen::MatrixXd inner = 0.5 * (Eigen::MatrixXd::Identity(M, M) - AAt - Binv);
  Eigen::MatrixXd G_kmm = upper_solve(l_, inner);
  G_kmm = upper_solve(l_, G_kmm.transpose()).transpose();
  G_kmm = detail::symmetrize(G_kmm) - 0.5 * beta * beta.transpose();

  // dF/dK_mn = beta alpha^T + L^{-T} (I - B^{-1}) A / sig
  Eigen::MatrixXd G_kmn = upper_solve(l_, (Eigen::MatrixXd::Identity(M, M) - Binv) * a_) / sigma;
  G_kmn.noalias() += beta * alpha.transpose();

  // dF/dsig^2
  const double n = static_cast<double>(N);
  const double m = static_cast<double>(M);
  const double tr_cinv = (n - m + Binv.trace()) / sigma2;
  const double kdiag_sum = n * h_.signal_variance();
  const double tr_q = sigma2 * a_.squaredNorm();
  const double g_sigma2 =
      0.5 * (alpha.squaredNorm() - tr_cinv) + 0.5 * (kdiag_sum - tr_q) / (sigma2 * sigma2);

  SgprGradient out;
  out.value = elbo_;
  out.grad_u = Eigen::VectorXd::Zero(D + 2);
  Eigen::MatrixXd grad_za = Eigen::MatrixXd::Zero(M, D);
  accumulate_self_grad(za_, kmm_, G_kmm, h_, 0.0, out.grad_u, &grad_za);
  accumulate_cross_grad(za_, data.X, kmn_, G_kmn, h_, out.grad_u, &grad_za);
  // Dropped points do not enter the bound.
  out.grad_Z = Eigen::MatrixXd::Zero(z_.size(), D);
  for (Eigen::Index a = 0; a < M; ++a) out.grad_Z.row(active_[static_cast<std::size_t>(a)]) = grad_za.row(a);
  // Tr(K_nn) = N sig_f^2 enters with weight -1 / (2 sig^2).
  out.grad_u(D) += -kdiag_sum / sigma2;
  out.grad_u(D + 1) = 2.0 * sigma2 * g_sigma2;
  return out;
}

OptimalQu SgprWorkspace::optimal_q_u() const {
  // S* = K Sigma^{-1} K = T B^{-1} T^T,  m* = T LB^{-T} c  with T = K_{m,kept} L^{-T};
  // T = L when every point is kept.
  const bool all_kept = static_cast<Eigen::Index>(active_.size()) == z_.size();
  const Eigen::MatrixXd T =
      all_kept ? l_ : Eigen::MatrixXd(lower_solve(l_, kernel_matrix(za_, z_.Z, h_)).transpose());
  const Eigen::MatrixXd W = lower_solve(lb_, T.transpose());  // LB^{-1} T^T
  OptimalQu q;
  q.cov = detail::symmetrize(W.transpose() * W);
  q.mean = T * upper_solve(lb_, c_);
  return q;
}

GaussianPrediction SgprWorkspace::predict(const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                          bool include_noise) const {
  if (X_star.cols() != h_.dims()) throw InputError("predict: test input dimension mismatch");
  // V = L^{-1} K_m*, W = LB^{-1} V
  //   mean = V^T LB^{-T} c,   cov = K_** - V^T V + W^T W
  const Eigen::MatrixXd V = lower_solve(l_, kernel_matrix(za_, X_star, h_));
  const Eigen::MatrixXd W = lower_solve(lb_, V);
  GaussianPrediction out;
  out.mean = W.transpose() * c_;
  out.cov = kernel_matrix(X_star, X_star, h_) - V.transpose() * V + W.transpose() * W;
  out.cov = detail::symmetrize(out.cov);
  out.cov.diagonal() = out.cov.diagonal().cwiseMax(0.0);
  if (include_noise) out.cov.diagonal().array() += h_.noise_variance();
  return out;
}

DiagPrediction SgprWorkspace::predict_diag(const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                           bool include_noise) const {
  if (X_star.cols() != h_.dims()) throw InputError("predict: test input dimension mismatch");
  const Eigen::MatrixXd V = lower_solve(l_, kernel_matrix(za_, X_star, h_));
  const Eigen::MatrixXd W = lower_solve(lb_, V);
  DiagPrediction out;
  out.mean = W.transpose() * c_;
  out.var = (h_.signal_variance() - V.colwise().squaredNorm().array() +
             W.colwise().squaredNorm().array())
                .transpose()
                .max(0.0)
                .matrix();
  if (include_noise) out.var.array() += h_.noise_variance();
  return out;
}

double collapsed_elbo(const Dataset& data, const Hypers& h, const InducingSet& z) {
  return SgprWorkspace(data, h, z).elbo();
}

SgprGradient collapsed_elbo_grad(const Dataset& data, const Hypers& h, const InducingSet& z) {
  return SgprWorkspace(data, h, z).gradient();
}

OptimalQu optimal_q_u(const Dataset& data, const Hypers& h, const InducingSet& z) {
  return SgprWorkspace(data, h, z).optimal_q_u();
}

GaussianPrediction predict_fixed(const Dataset& data, const Hypers& h, const InducingSet& z,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                 bool include_noise) {
  return SgprWorkspace(data, h, z).predict(X_star, include_noise);
}

}  // namespace sgphmc
