#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgphmc {

/// Biased sample autocorrelation rho_0..rho_max_lag (normalized by the lag-0
/// autocovariance). A constant chain yields rho_0 = 1 and zeros elsewhere.
Eigen::VectorXd autocorr(const Eigen::VectorXd& x, Eigen::Index max_lag);

/// N / tau with tau = -1 + 2 sum_k P_k over Geyer's initial positive sequence
/// of paired autocorrelations P_k = rho_{2k} + rho_{2k+1}, made monotone.
/// tau is floored at 1 / log10(N) so anticorrelated chains stay bounded.
double ess(const Eigen::VectorXd& x);

/// ESS of the rank-normalized chain.
double ess_bulk(const Eigen::VectorXd& x);

/// Minimum ESS of the indicators x <= q_0.03 and x <= q_0.97.
double ess_tail(const Eigen::VectorXd& x);

/// Narrowest interval holding ceil(mass * N) sorted draws; earliest on ties.
std::pair<double, double> hdi(const Eigen::VectorXd& x, double mass = 0.94);

struct ChainSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  double mcse_mean = 0.0;
  double mcse_sd = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

/// One row per column of `draws`. ESS values are capped at the draw count.
std::vector<ChainSummary> summarize(const Eigen::MatrixXd& draws,
                                    const std::vector<std::string>& names);

/// CSV: hyper,mean,sd,hdi_3%,hdi_97%,mcse_mean,mcse_sd,ess_bulk,ess_tail
void write_summary(const std::vector<ChainSummary>& rows, std::ostream& out);

}  // namespace sgphmc
