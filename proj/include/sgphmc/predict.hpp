#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/hmc.hpp"
#include "sgphmc/sgpr.hpp"

namespace sgphmc {

/// Affine map between standardized and original output units.
struct OutputScale {
  double mean = 0.0;
  double std = 1.0;

  static OutputScale of(const Dataset& data) { return {data.y_mean, data.y_std}; }
};

enum class Moment { kMean, kStd, kVariance };

Eigen::VectorXd destandardize(const Eigen::VectorXd& values, const OutputScale& scale, Moment kind);
Eigen::VectorXd standardize(const Eigen::VectorXd& values, const OutputScale& scale, Moment kind);

/// Equally weighted (after any dropped components) Gaussian mixture over
/// test points; component moments are stored in standardized units.
struct MixturePredictive {
  Eigen::MatrixXd means;  // J x P
  Eigen::MatrixXd vars;   // J x P, diagonal variances
  Eigen::VectorXd weights;
  OutputScale scale;
  bool includes_noise = false;

  Eigen::Index components() const { return means.rows(); }
  Eigen::Index points() const { return means.cols(); }

  Eigen::VectorXd mean() const;
  /// sum_j w_j (v_j + mu_j^2) - mean^2
  Eigen::VectorXd variance() const;
  Eigen::VectorXd mean_original() const { return destandardize(mean(), scale, Moment::kMean); }
  Eigen::VectorXd variance_original() const {
    return destandardize(variance(), scale, Moment::kVariance);
  }

  /// Uniform weights over the given components.
  static MixturePredictive from_components(const std::vector<DiagPrediction>& parts,
                                           const OutputScale& scale, bool includes_noise);
};

/// One predict_fixed component per trace draw, sharing Z. Components whose
/// factorization fails are dropped with a warning.
MixturePredictive mixture_predict(const Dataset& data, const InducingSet& z, const Trace& trace,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                  bool include_noise);

/// Single-component mixture at a point estimate.
MixturePredictive point_predict(const Dataset& data, const Hypers& h, const InducingSet& z,
                                const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                bool include_noise);

double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& point_pred);

/// Per-point -log p(y_n) in original units via log-sum-exp.
Eigen::VectorXd nlpd_pointwise(const Eigen::VectorXd& y_true, const MixturePredictive& pred);
/// Mean of nlpd_pointwise.
double nlpd(const Eigen::VectorXd& y_true, const MixturePredictive& pred);

}  // namespace sgphmc
