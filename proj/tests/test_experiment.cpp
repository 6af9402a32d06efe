#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sgphmc/data.hpp"
#include "sgphmc/errors.hpp"
#include "sgphmc/experiment.hpp"

using namespace sgphmc;

namespace {

ExperimentConfig quick_config() {
  std::stringstream ini(R"(
[experiment]
method = sgpr-ml2,sgpr-hmc,fixed-z
m = 6
n_splits = 2
seed = 9
ml2_steps = 30

[train]
warm_start_steps = 10
total_steps = 10
sample_interval = 5
first_window_samples = 10
first_window_tune = 20
samples_per_window = 5
later_window_tune = 5
final_samples = 10
)");
  return parse_config(ini);
}

RawTable smooth_table(Eigen::Index n) {
  RawTable t;
  t.values.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::sin(0.37 * i), b = std::cos(0.91 * i);
    t.values.row(i) << a, b, 4.0 * a - b * b + 0.1 * std::sin(13.0 * i);
  }
  return t;
}

MetricRow row(Method m, double rmse, double nlpd, bool ok = true) {
  MetricRow r;
  r.dataset = "d";
  r.method = m;
  r.rmse = rmse;
  r.nlpd = nlpd;
  r.ok = ok;
  return r;
}

}  // namespace

TEST_CASE("methods parse by name") {
  for (Method m : {Method::kSgprMl2, Method::kSgprHmc, Method::kGprHmc, Method::kJointHmc, Method::kFixedZ})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("sgpr-nuts"), InputError);
}

TEST_CASE("config parses, validates and round-trips") {
  const ExperimentConfig c = quick_config();
  CHECK(c.methods.size() == 3);
  CHECK(c.m == 6);
  CHECK(c.train.final_samples == 10);
  CHECK(c.sampler.n_samples == 1000);  // untouched default
  CHECK_NOTHROW(c.validate());

  std::stringstream written;
  c.write(written);
  const ExperimentConfig back = parse_config(written);
  std::stringstream again;
  back.write(again);
  CHECK(again.str() == written.str());

  std::stringstream unknown("[train]\nwarm_start = 3\n");
  CHECK_THROWS_AS(parse_config(unknown), InputError);
  std::stringstream bad_value("[experiment]\nm = many\n");
  CHECK_THROWS_AS(parse_config(bad_value), InputError);
  std::stringstream empty("");
  CHECK_NOTHROW(parse_config(empty).validate());
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);

  ExperimentConfig d;
  d.split_fraction = 1.0;
  CHECK_THROWS_AS(d.validate(), InputError);
}

TEST_CASE("GP_SEED overrides the configured seed") {
  ExperimentConfig c;
  c.seed = 1;
  ::setenv("GP_SEED", "77", 1);
  c.apply_environment();
  CHECK(c.seed == 77);
  ::setenv("GP_SEED", "x", 1);
  CHECK_THROWS_AS(c.apply_environment(), InputError);
  ::unsetenv("GP_SEED");
  c.apply_environment();
  CHECK(c.seed == 77);
}

TEST_CASE("derived seeds differ across tags and indices") {
  CHECK(derive_seed(1, 1, 0) == derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 1, 0) != derive_seed(1, 2, 0));
  CHECK(derive_seed(1, 1, 0) != derive_seed(1, 1, 1));
  CHECK(derive_seed(1, 1, 0) != derive_seed(2, 1, 0));
}

TEST_CASE("aggregation reports mean and standard error over completed splits") {
  const std::vector<MetricRow> rows{row(Method::kSgprHmc, 1.0, 2.0), row(Method::kSgprHmc, 3.0, 4.0),
                                    row(Method::kSgprHmc, 0.0, 0.0, false), row(Method::kSgprMl2, 5.0, 6.0)};
  const auto agg = aggregate_rows(rows);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].attempted == 3);
  CHECK(agg[0].completed == 2);
  CHECK(agg[0].rmse_mean == doctest::Approx(2.0));
  // sd = sqrt(2), sem = sd / sqrt(2) = 1
  CHECK(agg[0].rmse_sem == doctest::Approx(1.0));
  CHECK(agg[0].nlpd_mean == doctest::Approx(3.0));
  CHECK(std::isnan(agg[1].rmse_sem));

  std::stringstream ss;
  write_aggregate(agg, ss);
  const std::string text = ss.str();
  CHECK(text.find("2 of 3 splits completed") != std::string::npos);
  CHECK(text.find("dataset,method,M,rmse_mean,rmse_sem,nlpd_mean,nlpd_sem,wall_total_s,wall_sampling_s") !=
        std::string::npos);
}

TEST_CASE("an experiment is deterministic in its metric values") {
  const ExperimentConfig c = quick_config();
  const RawTable raw = smooth_table(60);
  const ExperimentResult a = run_experiment(raw, "smooth", c);
  const ExperimentResult b = run_experiment(raw, "smooth", c);
  REQUIRE(a.rows.size() == 6);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].ok);
    CHECK(a.rows[i].rmse == b.rows[i].rmse);
    CHECK(a.rows[i].nlpd == b.rows[i].nlpd);
    CHECK(std::isfinite(a.rows[i].nlpd));
    CHECK(a.rows[i].wall_sampling_s <= a.rows[i].wall_total_s);
  }
  CHECK(a.rows[0].draws == 1);   // ML-II point estimate
  CHECK(a.rows[1].draws == 10);  // final window
  // A learnable target: well under the unit output std.
  CHECK(a.rows[1].rmse < 0.5 * std::sqrt((raw.values.col(2).array() - raw.values.col(2).mean()).square().mean()));

  std::stringstream ss;
  write_metrics(a.rows, ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "dataset,split,method,M,rmse,nlpd,J,wall_total_s,wall_sampling_s");

  ExperimentConfig other = c;
  other.seed = 10;
  CHECK(run_experiment(raw, "smooth", other).rows[1].rmse != a.rows[1].rmse);
}
