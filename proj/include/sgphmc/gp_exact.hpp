#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "sgphmc/kernels.hpp"

namespace sgphmc {

/// Regression data in standardized units plus the statistics needed to map
/// predictions back to original units.
struct Dataset {
  Eigen::MatrixXd X;  // N x D
  Eigen::VectorXd y;  // N
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_std;
  double y_mean = 0.0;
  double y_std = 1.0;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dims() const { return X.cols(); }

  /// Wraps already-standardized arrays with identity statistics.
  static Dataset from_arrays(Eigen::MatrixXd X, Eigen::VectorXd y);
  void validate() const;
};

struct GaussianPrediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct DiagPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

struct ValueAndGrad {
  double value = 0.0;
  Eigen::VectorXd grad;  // over UnconstrainedHypers
};

/// log N(y; 0, K + sig_n^2 I) by Cholesky.
double exact_lml(const Dataset& data, const Hypers& h);
ValueAndGrad exact_lml_grad(const Dataset& data, const Hypers& h);

GaussianPrediction exact_predict(const Dataset& data, const Hypers& h,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                 bool include_noise = false);
DiagPrediction exact_predict_diag(const Dataset& data, const Hypers& h,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                  bool include_noise = false);

/// A hyperparameter that can be gridded in the LML surface. Variances, not
/// standard deviations, are the gridded quantity for the signal and noise.
struct SurfaceAxis {
  enum class Kind { kSignalVariance, kLengthscale, kNoiseVariance };
  Kind kind = Kind::kSignalVariance;
  Eigen::Index dim = 0;  // lengthscale index

  /// "sig_f2", "ls[d]" or "sig_n2".
  std::string name() const;
  static SurfaceAxis parse(const std::string& text);
  void apply(Hypers& h, double value) const;
};

struct SurfaceSpec {
  SurfaceAxis axis_a;
  SurfaceAxis axis_b;
  Eigen::VectorXd values_a;
  Eigen::VectorXd values_b;

  /// Evenly spaced in log10 when `log_spacing`, linear otherwise.
  static Eigen::VectorXd make_axis(double lo, double hi, int resolution, bool log_spacing);
};

struct LmlSurface {
  SurfaceSpec spec;
  Eigen::MatrixXd neg_lml;  // rows follow axis_a, columns axis_b; NaN marks failed cells
};

LmlSurface lml_surface(const Dataset& data, const SurfaceSpec& spec, const Hypers& fixed);

/// "# axis_a=<name> values=..." and "# axis_b=..." headers, then one comma
/// separated row per axis_a value.
void write_surface(const LmlSurface& surface, std::ostream& out);

}  // namespace sgphmc
