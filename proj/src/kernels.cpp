#include "sgphmc/kernels.hpp"

#include <cmath>
#include <string>

#include "sgphmc/errors.hpp"

namespace sgphmc {

Hypers Hypers::constant(Eigen::Index dims, double value) {
  Hypers h;
  h.lengthscales = Eigen::VectorXd::Constant(dims, value);
  h.signal_std = value;
  h.noise_std = value;
  return h;
}

void validate(const Hypers& h) {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (h.lengthscales.size() == 0) throw InputError("hypers: at least one lengthscale required");
  for (Eigen::Index d = 0; d < h.lengthscales.size(); ++d) {
    if (!ok(h.lengthscales(d)))
      throw InputError("hypers: lengthscale " + std::to_string(d) + " must be positive");
  }
  if (!ok(h.signal_std)) throw InputError("hypers: signal_std must be positive");
  if (!ok(h.noise_std)) throw InputError("hypers: noise_std must be positive");
}

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime, const Hypers& h) {
  if (x.size() != h.dims() || x_prime.size() != h.dims())
    throw InputError("kernel_eval: input dimension does not match lengthscales");
  const double r2 = (x - x_prime).cwiseQuotient(h.lengthscales).squaredNorm();
  return h.signal_variance() * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::MatrixXd>& X_prime, const Hypers& h) {
  if (X.cols() != h.dims() || X_prime.cols() != h.dims())
    throw InputError("kernel_matrix: column count does not match lengthscales");
  const Eigen::VectorXd inv_ls = h.lengthscales.cwiseInverse();
  const Eigen::MatrixXd A = X * inv_ls.asDiagonal();
  const Eigen::MatrixXd B = X_prime * inv_ls.asDiagonal();
  // Squared distances formed explicitly per pair; the |a|^2 + |b|^2 - 2ab
  // expansion loses the exact zero on the diagonal.
  Eigen::MatrixXd K(X.rows(), X_prime.rows());
  const double sf2 = h.signal_variance();
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      K(i, j) = sf2 * std::exp(-0.5 * (A.row(i) - B.row(j)).squaredNorm());
    }
  }
  return K;
}

Eigen::VectorXd kernel_diag(const Eigen::Ref<const Eigen::MatrixXd>& X, const Hypers& h) {
  if (X.cols() != h.dims()) throw InputError("kernel_diag: column count does not match lengthscales");
  return Eigen::VectorXd::Constant(X.rows(), h.signal_variance());
}

UnconstrainedHypers to_unconstrained(const Hypers& h) {
  validate(h);
  const Eigen::Index D = h.dims();
  UnconstrainedHypers u(D + 2);
  u.head(D) = h.lengthscales.array().log().matrix();
  u(D) = std::log(h.signal_std);
  u(D + 1) = std::log(h.noise_std);
  return u;
}

Hypers from_unconstrained(const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (u.size() < 3) throw InputError("from_unconstrained: need at least 3 entries");
  const Eigen::Index D = u.size() - 2;
  Hypers h;
  h.lengthscales = u.head(D).array().exp().matrix();
  h.signal_std = std::exp(u(D));
  h.noise_std = std::exp(u(D + 1));
  return h;
}

double log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& u) { return u.sum(); }

void accumulate_cross_grad(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::MatrixXd& K, const Eigen::MatrixXd& G, const Hypers& h,
                           Eigen::Ref<Eigen::VectorXd> grad_u, Eigen::MatrixXd* grad_A) {
  const Eigen::Index D = h.dims();
  const Eigen::MatrixXd GK = G.cwiseProduct(K);
  grad_u(D) += 2.0 * GK.sum();
  const Eigen::VectorXd row_sums = GK.rowwise().sum();
  for (Eigen::Index d = 0; d < D; ++d) {
    const double inv_l2 = 1.0 / (h.lengthscales(d) * h.lengthscales(d));
    // sum_ij GK_ij (a_i - b_j)^2 = sum_i a_i^2 r_i + sum_j b_j^2 c_j - 2 a^T GK b
    const Eigen::VectorXd a = A.col(d);
    const Eigen::VectorXd b = B.col(d);
    const Eigen::VectorXd GKb = GK * b;
    const Eigen::VectorXd col_sums = GK.colwise().sum().transpose();
    const double sq = a.cwiseAbs2().dot(row_sums) + b.cwiseAbs2().dot(col_sums) - 2.0 * a.dot(GKb);
    grad_u(d) += sq * inv_l2;
    if (grad_A != nullptr) {
      // d/da_i: sum_j GK_ij * (b_j - a_i) / l^2
      grad_A->col(d) += (GKb - a.cwiseProduct(row_sums)) * inv_l2;
    }
  }
}

void accumulate_self_grad(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::MatrixXd& K,
                          const Eigen::MatrixXd& G, const Hypers& h, double jitter_rel,
                          Eigen::Ref<Eigen::VectorXd> grad_u, Eigen::MatrixXd* grad_A) {
  const Eigen::Index D = h.dims();
  // Lengthscale and signal parts are those of a cross kernel with B = A.
  accumulate_cross_grad(A, A, K, G, h, grad_u, nullptr);
  grad_u(D) += 2.0 * jitter_rel * h.signal_variance() * G.trace();
  if (grad_A != nullptr) {
    // Rows of A enter on both sides.
    const Eigen::MatrixXd Gsym = G + G.transpose();
    const Eigen::MatrixXd GK = Gsym.cwiseProduct(K);
    const Eigen::VectorXd row_sums = GK.rowwise().sum();
    for (Eigen::Index d = 0; d < D; ++d) {
      const double inv_l2 = 1.0 / (h.lengthscales(d) * h.lengthscales(d));
      const Eigen::VectorXd a = A.col(d);
      grad_A->col(d) += (GK * a - a.cwiseProduct(row_sums)) * inv_l2;
    }
  }
}

}  // namespace sgphmc
