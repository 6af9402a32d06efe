// Command-line harness. Talks to the library only through the C API.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgphmc/sgphmc.h"

namespace {

struct ConfigDeleter {
  void operator()(sgphmc_config* c) const { sgphmc_config_free(c); }
};
using ConfigPtr = std::unique_ptr<sgphmc_config, ConfigDeleter>;

int report(sgphmc_status status, const char* what) {
  if (status == SGPHMC_OK) return 0;
  std::fprintf(stderr, "sgphmc: %s: %s (%s)\n", what, sgphmc_last_error(),
               sgphmc_status_string(status));
  return status == SGPHMC_ERR_INPUT || status == SGPHMC_ERR_PARSE ? 2 : 1;
}

struct Override {
  std::string key;
  std::string value;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse GP regression with HMC over kernel hyperparameters"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_version_flag("--version", std::string(sgphmc_version()));

  std::string config_path;
  std::string seed;
  std::string out;
  int verbosity = 1;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Config file (sectioned key = value)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed (overrides config and GP_SEED)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--set", sets, "Override a config key: section.key=value")->allow_extra_args(false);
  app.add_flag("-q{0},-v{2}", verbosity, "Quiet / verbose progress");

  std::string data, method, m, splits, trace_path, axis_a, axis_b;
  auto add_data_opts = [&](CLI::App* sub) {
    sub->add_option("--data", data, "Input CSV, last column is the target");
    sub->add_option("--m", m, "Number of inducing points");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit one method on the first split");
  add_data_opts(fit);
  fit->add_option("--method", method, "sgpr-ml2, sgpr-hmc, gpr-hmc, joint-hmc or fixed-z");

  CLI::App* bench = app.add_subcommand("bench", "Repeated random splits with aggregate metrics");
  add_data_opts(bench);
  bench->add_option("--method", method, "Comma separated list of methods");
  bench->add_option("--splits", splits, "Number of random splits");

  CLI::App* surface = app.add_subcommand("surface", "Negative exact LML on a 2-D grid");
  surface->add_option("--data", data, "Input CSV, last column is the target");
  surface->add_option("--axis-a", axis_a, "sig_f2, sig_n2 or ls[d]");
  surface->add_option("--axis-b", axis_b, "sig_f2, sig_n2 or ls[d]");

  CLI::App* diagnose = app.add_subcommand("diagnose", "Summarize a saved trace");
  diagnose->add_option("trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);

  CLI::App* synth = app.add_subcommand("synth1d", "1-D gap data: ML-II vs collapsed HMC vs JointHMC");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // usage errors share the input-error code
  }
  sgphmc_set_log_level(verbosity);

  sgphmc_config* raw = nullptr;
  const sgphmc_status loaded =
      config_path.empty() ? sgphmc_config_create(&raw) : sgphmc_config_load(config_path.c_str(), &raw);
  if (int rc = report(loaded, "config")) return rc;
  ConfigPtr config(raw);
  if (int rc = report(sgphmc_config_apply_environment(config.get()), "GP_SEED")) return rc;

  std::vector<Override> overrides;
  auto flag = [&](const std::string& value, const char* key) {
    if (!value.empty()) overrides.push_back({key, value});
  };
  flag(seed, "experiment.seed");
  flag(out, "experiment.out");
  flag(data, "experiment.dataset");
  flag(method, "experiment.method");
  flag(m, "experiment.m");
  flag(splits, "experiment.n_splits");
  flag(axis_a, "surface.axis_a");
  flag(axis_b, "surface.axis_b");
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "sgphmc: --set expects section.key=value, got '%s'\n", s.c_str());
      return 2;
    }
    overrides.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  for (const Override& o : overrides) {
    if (int rc = report(sgphmc_config_set(config.get(), o.key.c_str(), o.value.c_str()), o.key.c_str()))
      return rc;
  }

  if (*fit) return report(sgphmc_run_fit(config.get()), "fit");
  if (*bench) return report(sgphmc_run_bench(config.get()), "bench");
  if (*surface) return report(sgphmc_run_surface(config.get()), "surface");
  if (*diagnose) return report(sgphmc_run_diagnose(config.get(), trace_path.c_str()), "diagnose");
  if (*synth) return report(sgphmc_run_synth1d(config.get()), "synth1d");
  return 2;
}
