// Exercises the shared library through its C header only.
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sgphmc/sgphmc.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgphmc_c_api_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void set(sgphmc_config* c, const char* key, const char* value) {
  REQUIRE(sgphmc_config_set(c, key, value) == SGPHMC_OK);
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(sgphmc_version()) > 0);
  CHECK(std::string(sgphmc_status_string(SGPHMC_ERR_PARSE)).size() > 0);
  sgphmc_set_log_level(0);
}

TEST_CASE("objectives through the C interface") {
  const double x[] = {0.5};
  const double y[] = {1.0};
  sgphmc_dataset* d = nullptr;
  REQUIRE(sgphmc_dataset_from_arrays(x, y, 1, 1, &d) == SGPHMC_OK);
  CHECK(sgphmc_dataset_rows(d) == 1);
  CHECK(sgphmc_dataset_dims(d) == 1);

  const double h[] = {1.0, 1.5, 0.5};  // ls, sig_f, sig_n
  double lml = 0.0;
  REQUIRE(sgphmc_exact_lml(d, h, &lml) == SGPHMC_OK);
  const double var = 1.5 * 1.5 + 0.5 * 0.5;
  CHECK(lml == doctest::Approx(-0.5 * std::log(2 * M_PI * var) - 0.5 / var));

  // One inducing point at the data point collapses to the exact value.
  double elbo = 0.0, gh[3], gz[1];
  REQUIRE(sgphmc_collapsed_elbo(d, h, x, 1, &elbo) == SGPHMC_OK);
  CHECK(elbo == doctest::Approx(lml));
  double elbo2 = 0.0;
  REQUIRE(sgphmc_collapsed_elbo_grad(d, h, x, 1, &elbo2, gh, gz) == SGPHMC_OK);
  CHECK(elbo2 == doctest::Approx(elbo));
  CHECK(sgphmc_collapsed_elbo_grad(d, h, x, 1, &elbo2, nullptr, nullptr) == SGPHMC_OK);

  const double bad[] = {1.0, -1.0, 0.5};
  CHECK(sgphmc_exact_lml(d, bad, &lml) == SGPHMC_ERR_INPUT);
  CHECK(std::strlen(sgphmc_last_error()) > 0);
  CHECK(sgphmc_exact_lml(nullptr, h, &lml) == SGPHMC_ERR_INPUT);
  sgphmc_dataset_free(d);
}

TEST_CASE("config handles report bad keys and files") {
  sgphmc_config* c = nullptr;
  REQUIRE(sgphmc_config_create(&c) == SGPHMC_OK);
  CHECK(sgphmc_config_set(c, "experiment.seed", "5") == SGPHMC_OK);
  CHECK(sgphmc_config_set(c, "experiment.colour", "red") == SGPHMC_ERR_INPUT);
  CHECK(std::string(sgphmc_last_error()).find("colour") != std::string::npos);
  const fs::path dir = scratch("config");
  REQUIRE(sgphmc_config_write(c, (dir / "c.ini").c_str()) == SGPHMC_OK);
  sgphmc_config* back = nullptr;
  REQUIRE(sgphmc_config_load((dir / "c.ini").c_str(), &back) == SGPHMC_OK);
  sgphmc_config_free(back);
  CHECK(sgphmc_config_load((dir / "missing.ini").c_str(), &back) == SGPHMC_ERR_IO);
  std::ofstream(dir / "broken.ini") << "[experiment\nseed = 1\n";
  CHECK(sgphmc_config_load((dir / "broken.ini").c_str(), &back) == SGPHMC_ERR_PARSE);
  sgphmc_config_free(c);
}

TEST_CASE("CSV errors map to parse and IO codes") {
  const fs::path dir = scratch("csv");
  std::ofstream(dir / "nan.csv") << "x,y\n1,2\n2,nan\n";
  sgphmc_dataset* d = nullptr;
  CHECK(sgphmc_dataset_load_csv((dir / "nan.csv").c_str(), &d) == SGPHMC_ERR_PARSE);
  CHECK(std::string(sgphmc_last_error()).find("row 3") != std::string::npos);
  CHECK(sgphmc_dataset_load_csv((dir / "none.csv").c_str(), &d) == SGPHMC_ERR_IO);
  CHECK(std::string(sgphmc_last_error()).find("none.csv") != std::string::npos);
}

TEST_CASE("fit, predict and write a trace") {
  const fs::path dir = scratch("fit");
  {
    std::ofstream f(dir / "d.csv");
    f << "x,y\n";
    for (int i = 0; i < 40; ++i) f << 0.1 * i << ',' << 10.0 + 3.0 * std::sin(0.3 * i) << '\n';
  }
  sgphmc_dataset* d = nullptr;
  REQUIRE(sgphmc_dataset_load_csv((dir / "d.csv").c_str(), &d) == SGPHMC_OK);
  sgphmc_config* c = nullptr;
  REQUIRE(sgphmc_config_create(&c) == SGPHMC_OK);
  set(c, "experiment.m", "8");
  set(c, "train.warm_start_steps", "50");
  set(c, "train.total_steps", "10");
  set(c, "train.sample_interval", "5");
  set(c, "train.first_window_samples", "10");
  set(c, "train.first_window_tune", "30");
  set(c, "train.samples_per_window", "5");
  set(c, "train.later_window_tune", "10");
  set(c, "train.final_samples", "20");
  sgphmc_fit* fit = nullptr;
  REQUIRE(sgphmc_fit_create(d, c, &fit) == SGPHMC_OK);
  CHECK(sgphmc_fit_draws(fit) == 20);
  const double xs[] = {0.5, 2.0};
  double mean[2], var[2];
  REQUIRE(sgphmc_fit_predict(fit, xs, 2, mean, var) == SGPHMC_OK);
  // Predictions come back in the original target units.
  CHECK(mean[0] == doctest::Approx(10.0 + 3.0 * std::sin(1.5)).epsilon(0.1));
  CHECK(var[0] > 0.0);
  REQUIRE(sgphmc_fit_write_trace(fit, (dir / "trace.csv").c_str()) == SGPHMC_OK);
  CHECK(fs::file_size(dir / "trace.csv") > 0);
  sgphmc_fit_free(fit);

  set(c, "experiment.out", dir.c_str());
  REQUIRE(sgphmc_run_diagnose(c, (dir / "trace.csv").c_str()) == SGPHMC_OK);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "manifest.ini"));
  CHECK(sgphmc_run_diagnose(c, (dir / "absent.csv").c_str()) == SGPHMC_ERR_IO);

  set(c, "experiment.dataset", (dir / "d.csv").c_str());
  set(c, "experiment.method", "sgpr-ml2");
  set(c, "experiment.ml2_steps", "20");
  set(c, "experiment.n_splits", "2");
  REQUIRE(sgphmc_run_bench(c) == SGPHMC_OK);
  CHECK(fs::exists(dir / "bench.csv"));
  CHECK(fs::exists(dir / "metrics.csv"));
  sgphmc_config_free(c);
  sgphmc_dataset_free(d);
}
