#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/kernels.hpp"

namespace sgphmc {

/// Inducing locations, M x D, in the same (standardized) space as the data.
struct InducingSet {
  Eigen::MatrixXd Z;

  Eigen::Index size() const { return Z.rows(); }
  Eigen::Index dims() const { return Z.cols(); }
};

struct SgprGradient {
  double value = 0.0;
  Eigen::VectorXd grad_u;  // over UnconstrainedHypers, D + 2
  Eigen::MatrixXd grad_Z;  // M x D
};

struct OptimalQu {
  Eigen::VectorXd mean;  // m*
  Eigen::MatrixXd cov;   // S*
};

/// Shared factorizations for one (data, hypers, Z) triple. All quantities are
/// computed in O(N M^2) without forming any N x N matrix:
///   L  = chol(K_mm),  A = L^{-1} K_mn / sig_n,
///   LB = chol(I + A A^T),  so chol(K_mm + sig_n^-2 K_mn K_nm) = L LB.
/// Inducing points that are numerically linear combinations of earlier ones
/// (duplicates and near-duplicates) are left out of the factorization; they
/// add nothing to Q_nn. Matrix accessors refer to the kept points.
/// The workspace keeps a pointer to `data`, which must outlive it.
class SgprWorkspace {
 public:
  SgprWorkspace(const Dataset& data, const Hypers& h, const InducingSet& z);

  double elbo() const { return elbo_; }
  /// -(1/2 sig_n^2) Tr(K_nn - Q_nn); never positive up to round-off.
  double trace_term() const { return trace_term_; }

  SgprGradient gradient() const;
  OptimalQu optimal_q_u() const;
  GaussianPrediction predict(const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                             bool include_noise) const;
  DiagPrediction predict_diag(const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                              bool include_noise) const;

  const Hypers& hypers() const { return h_; }
  const InducingSet& inducing() const { return z_; }
  /// Indices of the inducing points kept in the factorization.
  const std::vector<Eigen::Index>& active() const { return active_; }
  /// K_mm over the kept points.
  const Eigen::MatrixXd& kmm() const { return kmm_; }
  Eigen::MatrixXd kmm_cholesky() const { return l_; }
  /// Lower Cholesky factor of K_mm + sig_n^-2 K_mn K_nm.
  Eigen::MatrixXd sigma_cholesky() const;
  Eigen::MatrixXd sigma() const;

 private:
  const Dataset* data_;
  Hypers h_;
  InducingSet z_;
  std::vector<Eigen::Index> active_;
  Eigen::MatrixXd za_;  // kept rows of Z
  Eigen::MatrixXd kmm_;
  Eigen::MatrixXd kmn_;
  Eigen::MatrixXd l_;   // chol(K_mm)
  Eigen::MatrixXd a_;   // L^{-1} K_mn / sig_n
  Eigen::MatrixXd lb_;  // chol(I + A A^T)
  Eigen::VectorXd ay_;  // A y
  Eigen::VectorXd c_;   // LB^{-1} A y / sig_n
  double trace_term_ = 0.0;
  double elbo_ = 0.0;
};

double collapsed_elbo(const Dataset& data, const Hypers& h, const InducingSet& z);
SgprGradient collapsed_elbo_grad(const Dataset& data, const Hypers& h, const InducingSet& z);
OptimalQu optimal_q_u(const Dataset& data, const Hypers& h, const InducingSet& z);
GaussianPrediction predict_fixed(const Dataset& data, const Hypers& h, const InducingSet& z,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                 bool include_noise = false);

}  // namespace sgphmc
