#include "sgphmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "sgphmc/errors.hpp"

namespace sgphmc {

namespace {

void require_draws(const Eigen::VectorXd& x, Eigen::Index min, const char* who) {
  if (x.size() < min) {
    throw InputError(std::string(who) + ": need at least " + std::to_string(min) + " draws");
  }
  if (!x.allFinite()) throw InputError(std::string(who) + ": draws must be finite");
}

// Average ranks, 1-based.
Eigen::VectorXd ranks(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Eigen::VectorXd r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[j + 1]) == x(order[i])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) r(order[k]) = avg;
    i = j + 1;
  }
  return r;
}

// Linear interpolation between order statistics.
double quantile(Eigen::VectorXd sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, sorted.size() - 1);
  return sorted(lo) + (pos - static_cast<double>(lo)) * (sorted(hi) - sorted(lo));
}

double sample_sd(const Eigen::VectorXd& x) {
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
}

}  // namespace

Eigen::VectorXd autocorr(const Eigen::VectorXd& x, Eigen::Index max_lag) {
  require_draws(x, 2, "autocorr");
  const Eigen::Index n = x.size();
  max_lag = std::min(max_lag, n - 1);
  const Eigen::VectorXd c = x.array() - x.mean();
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(max_lag + 1);
  rho(0) = 1.0;
  if (c0 == 0.0) return rho;
  for (Eigen::Index k = 1; k <= max_lag; ++k) {
    rho(k) = c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n) / c0;
  }
  return rho;
}

double ess(const Eigen::VectorXd& x) {
  require_draws(x, 4, "ess");
  const Eigen::Index n = x.size();
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd rho = autocorr(x, n - 1);
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    double p = rho(2 * k) + rho(2 * k + 1);
    if (p <= 0.0) break;
    p = std::min(p, prev);  // initial monotone sequence
    sum += p;
    prev = p;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(nd));
  return nd / tau;
}

double ess_bulk(const Eigen::VectorXd& x) {
  require_draws(x, 4, "ess_bulk");
  const double n = static_cast<double>(x.size());
  const boost::math::normal_distribution<double> normal;
  const Eigen::VectorXd r = ranks(x);
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    z(i) = boost::math::quantile(normal, (r(i) - 0.375) / (n + 0.25));
  }
  return ess(z);
}

double ess_tail(const Eigen::VectorXd& x) {
  require_draws(x, 4, "ess_tail");
  Eigen::VectorXd sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double best = std::numeric_limits<double>::infinity();
  for (double p : {0.03, 0.97}) {
    const double q = quantile(sorted, p);
    const Eigen::VectorXd ind = (x.array() <= q).cast<double>();
    best = std::min(best, ess(ind));
  }
  return best;
}

std::pair<double, double> hdi(const Eigen::VectorXd& x, double mass) {
  require_draws(x, 1, "hdi");
  if (!(mass > 0.0 && mass <= 1.0)) throw InputError("hdi: mass must lie in (0, 1]");
  Eigen::VectorXd s = x;
  std::sort(s.begin(), s.end());
  const Eigen::Index n = s.size();
  const auto k = std::min<Eigen::Index>(
      n, std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(mass * static_cast<double>(n)))));
  Eigen::Index best = 0;
  double width = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + k - 1 < n; ++i) {
    const double w = s(i + k - 1) - s(i);
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {s(best), s(best + k - 1)};
}

std::vector<ChainSummary> summarize(const Eigen::MatrixXd& draws,
                                    const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(draws.cols()) != names.size()) {
    throw InputError("summarize: one name per column required");
  }
  const double n = static_cast<double>(draws.rows());
  std::vector<ChainSummary> rows;
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const Eigen::VectorXd x = draws.col(c);
    require_draws(x, 4, "summarize");
    ChainSummary s;
    s.name = names[static_cast<std::size_t>(c)];
    s.mean = x.mean();
    s.sd = sample_sd(x);
    std::tie(s.hdi_low, s.hdi_high) = hdi(x, 0.94);
    s.ess_bulk = std::min(ess_bulk(x), n);
    s.ess_tail = std::min(ess_tail(x), n);
    const double ess_mean = std::min(ess(x), n);
    s.mcse_mean = s.sd / std::sqrt(ess_mean);
    // Delta method on sd = sqrt(E[(x - m)^2]).
    const Eigen::VectorXd sq = (x.array() - s.mean).square();
    const double ess_sq = std::min(ess(sq), n);
    s.mcse_sd = s.sd > 0.0 ? sample_sd(sq) / std::sqrt(ess_sq) / (2.0 * s.sd) : 0.0;
    rows.push_back(std::move(s));
  }
  return rows;
}

void write_summary(const std::vector<ChainSummary>& rows, std::ostream& out) {
  out.precision(17);
  out << "# mcse_sd: delta method on the squared deviations\n";
  out << "hyper,mean,sd,hdi_3%,hdi_97%,mcse_mean,mcse_sd,ess_bulk,ess_tail\n";
  for (const ChainSummary& s : rows) {
    out << s.name << ',' << s.mean << ',' << s.sd << ',' << s.hdi_low << ',' << s.hdi_high << ','
        << s.mcse_mean << ',' << s.mcse_sd << ',' << s.ess_bulk << ',' << s.ess_tail << '\n';
  }
}

}  // namespace sgphmc
