#include "linalg.hpp"

#include <cmath>
#include <limits>

#include "sgphmc/errors.hpp"
#include "sgphmc/kernels.hpp"

namespace sgphmc::detail {

namespace {

double condition_estimate(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Smallest accepted squared pivot relative to sig_f^2 before jitter is added.
constexpr double kMinPivot = 1e-13;
// Conditional variance, relative to sig_f^2, below which an inducing point is
// treated as dependent on the others.
constexpr double kDependentTol = 1e-10;

}  // namespace

Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& A, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success || !A.allFinite()) {
    throw NumericalError(what, condition_estimate(A));
  }
  // LLT does not flag tiny negative pivots that come out as NaN.
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) {
    throw NumericalError(what, condition_estimate(A));
  }
  return llt;
}

KmmFactor factorize_kmm(const Eigen::MatrixXd& kmm, double signal_variance) {
  KmmFactor f;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd A = kmm;
    if (jitter > 0.0) A.diagonal().array() += jitter * signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    // The pivot floor rejects factors of numerically singular matrices.
    if (llt.info() == Eigen::Success && diag.allFinite() &&
        (diag.array().square() > kMinPivot * signal_variance).all()) {
      f.L = llt.matrixL();
      f.jitter_rel = jitter;
      return f;
    }
    jitter = jitter == 0.0 ? kRelativeJitter : 10.0 * jitter;
  }
  throw NumericalError("K_mm + jitter", condition_estimate(kmm));
}

ActiveFactor factorize_kmm_active(const Eigen::MatrixXd& kmm, double signal_variance) {
  const Eigen::Index M = kmm.rows();
  const double floor = kDependentTol * signal_variance;
  ActiveFactor f;
  Eigen::LLT<Eigen::MatrixXd> llt(kmm);
  if (llt.info() == Eigen::Success && kmm.allFinite() &&
      (llt.matrixLLT().diagonal().array().square() > floor).all()) {
    f.L = llt.matrixL();
    f.active.resize(static_cast<std::size_t>(M));
    for (Eigen::Index i = 0; i < M; ++i) f.active[static_cast<std::size_t>(i)] = i;
    return f;
  }
  if (!kmm.allFinite()) throw NumericalError("K_mm", condition_estimate(kmm));
  // Row-by-row Cholesky that skips rows with a negligible pivot.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M, M);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < M; ++i) {
    Eigen::VectorXd k(r);
    for (Eigen::Index a = 0; a < r; ++a) k(a) = kmm(f.active[static_cast<std::size_t>(a)], i);
    const Eigen::VectorXd v =
        r > 0 ? Eigen::VectorXd(L.topLeftCorner(r, r).triangularView<Eigen::Lower>().solve(k)) : k;
    const double pivot2 = kmm(i, i) - v.squaredNorm();
    if (!(pivot2 > floor)) continue;
    L.block(r, 0, 1, r) = v.transpose();
    L(r, r) = std::sqrt(pivot2);
    f.active.push_back(i);
    ++r;
  }
  if (r == 0) throw NumericalError("K_mm", condition_estimate(kmm));
  f.L = L.topLeftCorner(r, r);
  return f;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd cholesky_backward(const Eigen::MatrixXd& L, const Eigen::MatrixXd& L_bar) {
  Eigen::MatrixXd P = (L.transpose() * L_bar.triangularView<Eigen::Lower>()).eval();
  P = P.triangularView<Eigen::Lower>();
  P.diagonal() *= 0.5;
  const auto Lt = L.triangularView<Eigen::Lower>();
  // G = L^{-T} P L^{-1}
  Eigen::MatrixXd G = Lt.transpose().solve(P);
  G = Lt.transpose().solve(G.transpose()).transpose();
  return symmetrize(G);
}

}  // namespace sgphmc::detail
