#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgphmc/baselines.hpp"
#include "sgphmc/data.hpp"
#include "sgphmc/hmc.hpp"
#include "sgphmc/predict.hpp"
#include "sgphmc/trainer.hpp"

namespace sgphmc {

enum class Method { kSgprMl2, kSgprHmc, kGprHmc, kJointHmc, kFixedZ };

Method parse_method(const std::string& name);
std::string method_name(Method method);

struct SurfaceConfig {
  std::string axis_a = "sig_f2";
  std::string axis_b = "sig_n2";
  double a_low = 0.05, a_high = 5.0;
  double b_low = 0.01, b_high = 2.0;
  int resolution = 40;
  bool log_spacing = true;
};

struct Synth1dConfig {
  Eigen::Index n_train = 120;
  double noise_std = 0.3;
  Eigen::Index n_test = 200;
  Eigen::Index m = 25;
};

/// Everything a harness run needs. Loaded from a sectioned key = value file;
/// every key has a default so an empty file is valid.
struct ExperimentConfig {
  std::string dataset;
  std::vector<Method> methods{Method::kSgprHmc};
  Eigen::Index m = 100;
  double split_fraction = 0.8;
  int n_splits = 10;
  std::uint64_t seed = 0;
  Prior prior = Prior::kHalfCauchy;
  std::string out = "out";
  double init_hyper = 0.693;  // initial lengthscales, signal std and noise std
  int ml2_steps = 1000;
  TrainConfig train;
  SamplerConfig sampler;  // exact GPR + HMC
  JointConfig joint;
  SurfaceConfig surface;
  Synth1dConfig synth1d;

  /// "section.key" = value; throws InputError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  /// Applies GP_SEED when present in the environment.
  void apply_environment();
  /// Same format as load_config reads.
  void write(std::ostream& out) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<stream>");

/// Stream derived from (seed, tag, index); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

/// Result of fitting one method on one training set.
struct FitOutcome {
  Method method = Method::kSgprHmc;
  InducingSet inducing;               // empty for exact GPR
  Hypers point_hypers;                // ML-II estimate (sgpr-ml2 only)
  Trace trace;                        // empty for sgpr-ml2
  std::optional<TrainedModel> model;  // sgpr-hmc and fixed-z
  std::vector<double> ml2_history;
  double fit_seconds = 0.0;
  double sampling_seconds = 0.0;

  Eigen::Index draws() const { return trace.size() > 0 ? trace.size() : 1; }
};

FitOutcome fit_method(Method method, const Dataset& train, const InducingSet& z0,
                      const ExperimentConfig& config, std::uint64_t seed);

/// Predictive on standardized test inputs (observation noise included).
MixturePredictive predict_outcome(const FitOutcome& fit, const Dataset& train,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star);

struct MetricRow {
  std::string dataset;
  int split = 0;
  Method method = Method::kSgprHmc;
  Eigen::Index m = 0;
  double rmse = 0.0;
  double nlpd = 0.0;
  Eigen::Index draws = 0;
  double wall_total_s = 0.0;
  double wall_sampling_s = 0.0;
  bool ok = true;
  std::string error;
};

/// Fits and scores every configured method on one split. Failures are caught
/// and recorded in the row.
std::vector<MetricRow> evaluate_split(const std::string& dataset_name, const TrainTestSplit& split,
                                      const ExperimentConfig& config,
                                      std::vector<FitOutcome>* fits = nullptr);

struct AggregateRow {
  std::string dataset;
  Method method = Method::kSgprHmc;
  Eigen::Index m = 0;
  double rmse_mean = 0.0;
  double rmse_sem = 0.0;  // NaN with a single completed split
  double nlpd_mean = 0.0;
  double nlpd_sem = 0.0;
  double wall_total_s = 0.0;     // mean per split
  double wall_sampling_s = 0.0;  // mean per split
  int completed = 0;
  int attempted = 0;
};

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::vector<AggregateRow> aggregate;
};

std::vector<AggregateRow> aggregate_rows(const std::vector<MetricRow>& rows);

/// All splits of `raw` under config. Throws when more than two splits of any
/// method fail.
ExperimentResult run_experiment(const RawTable& raw, const std::string& dataset_name,
                                const ExperimentConfig& config);

/// dataset,split,method,M,rmse,nlpd,J,wall_total_s,wall_sampling_s
void write_metrics(const std::vector<MetricRow>& rows, std::ostream& out);
/// dataset,method,M,rmse_mean,rmse_sem,nlpd_mean,nlpd_sem,wall_total_s,wall_sampling_s
void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out);

struct Synth1dResult {
  std::vector<MetricRow> rows;  // sgpr-ml2, sgpr-hmc, joint-hmc
  TrainTestSplit data;
  std::vector<FitOutcome> fits;
};

/// Generates the gap data set and compares ML-II, collapsed HMC and JointHMC.
Synth1dResult run_synth1d(const ExperimentConfig& config);

// Subcommands. Each writes its outputs plus manifest.ini into config.out.
void command_fit(const ExperimentConfig& config);
void command_bench(const ExperimentConfig& config);
void command_surface(const ExperimentConfig& config);
void command_diagnose(const ExperimentConfig& config, const std::string& trace_path);
void command_synth1d(const ExperimentConfig& config);

}  // namespace sgphmc
