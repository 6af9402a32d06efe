#pragma once

#include <Eigen/Dense>

namespace sgphmc {

/// RBF-ARD kernel hyperparameters on the constrained (positive) scale.
struct Hypers {
  Eigen::VectorXd lengthscales;  // one per input dimension
  double signal_std = 1.0;
  double noise_std = 1.0;

  Eigen::Index dims() const { return lengthscales.size(); }
  double signal_variance() const { return signal_std * signal_std; }
  double noise_variance() const { return noise_std * noise_std; }

  /// All parameters set to `value` for a `dims`-dimensional input.
  static Hypers constant(Eigen::Index dims, double value);
};

/// Log-space view of Hypers: (log l_1..log l_D, log sig_f, log sig_n).
using UnconstrainedHypers = Eigen::VectorXd;

/// First diagonal jitter tried on K_mm when its plain Cholesky fails,
/// relative to the signal variance.
inline constexpr double kRelativeJitter = 1e-6;

/// Throws InputError unless every field is finite and strictly positive.
void validate(const Hypers& h);

double kernel_eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime, const Hypers& h);

/// Rows of `X` against rows of `X_prime`.
Eigen::MatrixXd kernel_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::MatrixXd>& X_prime, const Hypers& h);

Eigen::VectorXd kernel_diag(const Eigen::Ref<const Eigen::MatrixXd>& X, const Hypers& h);

UnconstrainedHypers to_unconstrained(const Hypers& h);
Hypers from_unconstrained(const Eigen::Ref<const Eigen::VectorXd>& u);
/// log |d exp(u) / du| = sum(u).
double log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& u);

// Reverse-mode helpers shared by every objective built on the kernel.
// Given G = dF/dK for a kernel matrix K, they add the contribution to the
// gradient over unconstrained hypers (lengthscale and signal entries only)
// and optionally to the gradient over the input rows.

/// K = kernel_matrix(A, B, h) already evaluated; G has K's shape.
void accumulate_cross_grad(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::MatrixXd& K, const Eigen::MatrixXd& G, const Hypers& h,
                           Eigen::Ref<Eigen::VectorXd> grad_u, Eigen::MatrixXd* grad_A);

/// K = kernel_matrix(A, A, h) without jitter; the factorized matrix is
/// K + jitter_rel * sig_f^2 * I. G must be symmetric.
void accumulate_self_grad(const Eigen::Ref<const Eigen::MatrixXd>& A, const Eigen::MatrixXd& K,
                          const Eigen::MatrixXd& G, const Hypers& h, double jitter_rel,
                          Eigen::Ref<Eigen::VectorXd> grad_u, Eigen::MatrixXd* grad_A);

}  // namespace sgphmc
