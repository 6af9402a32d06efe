#include "sgphmc/predict.hpp"

#include <cmath>
#include <string>

#include "sgphmc/errors.hpp"
#include "sgphmc/log.hpp"

namespace sgphmc {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Eigen::VectorXd destandardize(const Eigen::VectorXd& values, const OutputScale& scale,
                              Moment kind) {
  switch (kind) {
    case Moment::kMean:
      return (values.array() * scale.std + scale.mean).matrix();
    case Moment::kStd:
      return values * scale.std;
    case Moment::kVariance:
      return values * (scale.std * scale.std);
  }
  return values;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& values, const OutputScale& scale, Moment kind) {
  switch (kind) {
    case Moment::kMean:
      return ((values.array() - scale.mean) / scale.std).matrix();
    case Moment::kStd:
      return values / scale.std;
    case Moment::kVariance:
      return values / (scale.std * scale.std);
  }
  return values;
}

Eigen::VectorXd MixturePredictive::mean() const { return means.transpose() * weights; }

Eigen::VectorXd MixturePredictive::variance() const {
  const Eigen::VectorXd m = mean();
  const Eigen::VectorXd second = (vars + means.cwiseAbs2()).transpose() * weights;
  return (second - m.cwiseAbs2()).cwiseMax(0.0);
}

MixturePredictive MixturePredictive::from_components(const std::vector<DiagPrediction>& parts,
                                                     const OutputScale& scale, bool includes_noise) {
  if (parts.empty()) throw InputError("mixture: no components");
  const Eigen::Index J = static_cast<Eigen::Index>(parts.size());
  const Eigen::Index P = parts.front().mean.size();
  MixturePredictive m;
  m.means.resize(J, P);
  m.vars.resize(J, P);
  for (Eigen::Index j = 0; j < J; ++j) {
    if (parts[j].mean.size() != P || parts[j].var.size() != P)
      throw InputError("mixture: components disagree on test point count");
    m.means.row(j) = parts[j].mean.transpose();
    m.vars.row(j) = parts[j].var.transpose();
  }
  m.weights = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
  m.scale = scale;
  m.includes_noise = includes_noise;
  return m;
}

MixturePredictive mixture_predict(const Dataset& data, const InducingSet& z, const Trace& trace,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                  bool include_noise) {
  if (trace.size() == 0) throw InputError("mixture_predict: empty trace");
  std::vector<DiagPrediction> parts;
  parts.reserve(trace.size());
  std::string last_error;
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    try {
      const SgprWorkspace ws(data, trace.hypers(j), z);
      parts.push_back(ws.predict_diag(X_star, include_noise));
    } catch (const NumericalError& e) {
      last_error = e.what();
      log_warning("mixture_predict: dropping component " + std::to_string(j) + ": " + e.what());
    }
  }
  if (parts.empty()) throw NumericalError("mixture_predict: every component failed: " + last_error);
  return MixturePredictive::from_components(parts, OutputScale::of(data), include_noise);
}

MixturePredictive point_predict(const Dataset& data, const Hypers& h, const InducingSet& z,
                                const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                bool include_noise) {
  const SgprWorkspace ws(data, h, z);
  return MixturePredictive::from_components({ws.predict_diag(X_star, include_noise)},
                                            OutputScale::of(data), include_noise);
}

double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& point_pred) {
  if (y_true.size() != point_pred.size()) throw InputError("rmse: length mismatch");
  if (y_true.size() == 0) throw InputError("rmse: empty input");
  return std::sqrt((y_true - point_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

Eigen::VectorXd nlpd_pointwise(const Eigen::VectorXd& y_true, const MixturePredictive& pred) {
  if (y_true.size() != pred.points()) throw InputError("nlpd: length mismatch");
  if ((pred.vars.array() <= 0.0).any()) throw InputError("nlpd: non-positive predictive variance");
  const Eigen::VectorXd ys = standardize(y_true, pred.scale, Moment::kMean);
  const Eigen::VectorXd log_w = pred.weights.array().log();
  const Eigen::Index J = pred.components();
  Eigen::VectorXd out(ys.size());
  Eigen::VectorXd terms(J);
  for (Eigen::Index n = 0; n < ys.size(); ++n) {
    for (Eigen::Index j = 0; j < J; ++j) {
      const double v = pred.vars(j, n);
      const double r = ys(n) - pred.means(j, n);
      terms(j) = log_w(j) - 0.5 * (kLog2Pi + std::log(v) + r * r / v);
    }
    const double mx = terms.maxCoeff();
    const double lse = mx + std::log((terms.array() - mx).exp().sum());
    out(n) = -lse + std::log(pred.scale.std);
  }
  return out;
}

double nlpd(const Eigen::VectorXd& y_true, const MixturePredictive& pred) {
  return nlpd_pointwise(y_true, pred).mean();
}

}  // namespace sgphmc
