#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sgphmc/errors.hpp"
#include "sgphmc/predict.hpp"

using namespace sgphmc;

namespace {

DiagPrediction part(std::initializer_list<double> mean, std::initializer_list<double> var) {
  DiagPrediction p;
  p.mean = Eigen::Map<const Eigen::VectorXd>(mean.begin(), static_cast<Eigen::Index>(mean.size()));
  p.var = Eigen::Map<const Eigen::VectorXd>(var.begin(), static_cast<Eigen::Index>(var.size()));
  return p;
}

double normal_pdf(double y, double mu, double var) {
  return std::exp(-0.5 * (y - mu) * (y - mu) / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace

TEST_CASE("output scaling round trips and scales each moment correctly") {
  const OutputScale s{2.0, 3.0};
  const Eigen::Vector2d v(0.5, -1.0);
  CHECK(destandardize(v, s, Moment::kMean) == Eigen::Vector2d(3.5, -1.0));
  CHECK(destandardize(v.cwiseAbs(), s, Moment::kStd) == Eigen::Vector2d(1.5, 3.0));
  CHECK(destandardize(v.cwiseAbs(), s, Moment::kVariance) == Eigen::Vector2d(4.5, 9.0));
  for (Moment m : {Moment::kMean, Moment::kStd, Moment::kVariance})
    CHECK((standardize(destandardize(v.cwiseAbs(), s, m), s, m) - v.cwiseAbs()).norm() < 1e-15);
}

TEST_CASE("mixture moments follow the law of total variance") {
  const auto mix = MixturePredictive::from_components(
      {part({0.0, 1.0}, {1.0, 0.5}), part({2.0, 1.0}, {3.0, 0.5})}, OutputScale{10.0, 2.0}, false);
  CHECK(mix.components() == 2);
  CHECK(mix.points() == 2);
  CHECK(mix.mean()(0) == doctest::Approx(1.0));
  CHECK(mix.variance()(0) == doctest::Approx(0.5 * (1.0 + 0.0) + 0.5 * (3.0 + 4.0) - 1.0));
  CHECK(mix.variance()(1) == doctest::Approx(0.5));
  CHECK(mix.mean_original()(0) == doctest::Approx(12.0));
  CHECK(mix.variance_original()(1) == doctest::Approx(2.0));
}

TEST_CASE("NLPD agrees with the scalar mixture density in original units") {
  const OutputScale s{1.0, 2.5};
  const auto mix = MixturePredictive::from_components(
      {part({0.0, 1.0, -3.0}, {1.0, 0.2, 0.1}), part({0.5, -1.0, 30.0}, {0.3, 0.2, 0.1})}, s, true);
  const Eigen::Vector3d y(1.4, 3.0, 1.0 + 2.5 * -3.0);
  const Eigen::VectorXd got = nlpd_pointwise(y, mix);
  for (int n = 0; n < 3; ++n) {
    double dens = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double mu = s.mean + s.std * mix.means(j, n);
      const double var = s.std * s.std * mix.vars(j, n);
      dens += 0.5 * normal_pdf(y(n), mu, var);
    }
    CHECK(got(n) == doctest::Approx(-std::log(dens)).epsilon(1e-12));
  }
  CHECK(nlpd(y, mix) == doctest::Approx(got.mean()));
  // A far-away component contributes nothing and must not underflow the sum.
  CHECK(std::isfinite(got(2)));

  CHECK_THROWS_AS(nlpd(Eigen::Vector2d(0, 0), mix), InputError);
  const auto bad = MixturePredictive::from_components({part({0.0}, {0.0})}, s, false);
  CHECK_THROWS_AS(nlpd(Eigen::VectorXd::Zero(1), bad), InputError);
}

TEST_CASE("RMSE") {
  CHECK(rmse(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 4.0)) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(rmse(Eigen::Vector2d(1.0, 2.0), Eigen::Vector3d(1.0, 2.0, 3.0)), InputError);
}

TEST_CASE("mixture over a trace averages per-draw sparse predictions") {
  std::mt19937_64 rng(70);
  auto inst = oracle::random_instance(rng, 25, 1, 4);
  inst.data.y_mean = 0.7;
  inst.data.y_std = 1.9;
  Hypers h2 = inst.h;
  h2.lengthscales(0) *= 1.5;
  Trace tr;
  tr.samples.resize(2, 3);
  tr.samples.row(0) = to_unconstrained(inst.h).transpose();
  tr.samples.row(1) = to_unconstrained(h2).transpose();
  const InducingSet z{inst.Z};
  const Eigen::MatrixXd Xs = Eigen::VectorXd::LinSpaced(5, -3.0, 3.0);
  const MixturePredictive mix = mixture_predict(inst.data, z, tr, Xs, true);
  const GaussianPrediction a = predict_fixed(inst.data, inst.h, z, Xs, true);
  const GaussianPrediction b = predict_fixed(inst.data, h2, z, Xs, true);
  CHECK((mix.mean() - 0.5 * (a.mean + b.mean)).norm() < 1e-10);
  CHECK((mix.means.row(1).transpose() - b.mean).norm() < 1e-10);
  CHECK((mix.vars.row(0).transpose() - a.cov.diagonal()).norm() < 1e-10);
  CHECK(mix.scale.mean == 0.7);
  CHECK(mix.includes_noise);

  const MixturePredictive pt = point_predict(inst.data, inst.h, z, Xs, false);
  CHECK(pt.components() == 1);
  CHECK((pt.mean() - predict_fixed(inst.data, inst.h, z, Xs).mean).norm() < 1e-10);
}
