#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgphmc::detail {

/// Cholesky of a symmetric matrix; throws NumericalError naming `what`.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& A, const std::string& what);

/// Cholesky of K_mm under the library's jitter policy: the plain matrix is
/// tried first; on failure kRelativeJitter * sig_f^2 is added to the diagonal,
/// escalating tenfold up to three times.
struct KmmFactor {
  Eigen::MatrixXd L;
  double jitter_rel = 0.0;  // multiple of sig_f^2 that was added
};
KmmFactor factorize_kmm(const Eigen::MatrixXd& kmm, double signal_variance);

/// Cholesky of K_mm over a maximal subset of inducing points: a point is kept
/// when its variance conditional on the points kept before it exceeds
/// 1e-10 * sig_f^2. Points dropped this way are numerically linear combinations
/// of the kept ones (duplicates, near-duplicates). `L` factors K restricted to
/// `active`, in order.
struct ActiveFactor {
  std::vector<Eigen::Index> active;
  Eigen::MatrixXd L;
};
ActiveFactor factorize_kmm_active(const Eigen::MatrixXd& kmm, double signal_variance);

/// log|A| from its Cholesky factor.
double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt);

/// Reverse-mode Cholesky: given A = L L^T and dF/dL (lower triangle used),
/// returns the symmetric dF/dA.
Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& L, const Eigen::MatrixXd& L_bar);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

}  // namespace sgphmc::detail
