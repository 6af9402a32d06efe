#include "sgphmc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sgphmc/diagnostics.hpp"
#include "sgphmc/errors.hpp"
#include "sgphmc/log.hpp"

namespace sgphmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw InputError("config: bad value '" + text + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError("config: bad boolean '" + text + "' for " + key);
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(parse_method(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw InputError("config: experiment.method is empty");
  return out;
}

std::string join_methods(const std::vector<Method>& methods) {
  std::string s;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) s += ',';
    s += method_name(methods[i]);
  }
  return s;
}

std::string dataset_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::filesystem::path prepare_out(const ExperimentConfig& config) {
  std::filesystem::path dir(config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + config.out + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f.precision(17);
  return f;
}

void write_manifest(const ExperimentConfig& config, const std::string& command) {
  std::ofstream f = open_out(prepare_out(config) / "manifest.ini");
  f << "[run]\ncommand = " << command << "\nversion = 0.1.0\n\n";
  config.write(f);
}

RawTable load_dataset(const ExperimentConfig& config) {
  if (config.dataset.empty()) throw InputError("no dataset given (set experiment.dataset or --data)");
  if (!std::filesystem::exists(config.dataset)) {
    throw IoError("dataset not found: '" + config.dataset + "'");
  }
  return load_csv(config.dataset);
}

Eigen::VectorXd original_targets(const Dataset& d) {
  return destandardize(d.y, OutputScale::of(d), Moment::kMean);
}

void write_model(const FitOutcome& fit, const Dataset& train, std::ostream& out) {
  out.precision(17);
  const Eigen::IOFormat row(Eigen::FullPrecision, Eigen::DontAlignCols, ",", ",");
  out << "# method=" << method_name(fit.method) << '\n';
  out << "# x_mean=" << train.x_mean.transpose().format(row) << '\n';
  out << "# x_std=" << train.x_std.transpose().format(row) << '\n';
  out << "# y_mean=" << train.y_mean << "\n# y_std=" << train.y_std << '\n';
  if (fit.method == Method::kSgprMl2) {
    out << "# hypers=" << fit.point_hypers.lengthscales.transpose().format(row) << ','
        << fit.point_hypers.signal_std << ',' << fit.point_hypers.noise_std << '\n';
  }
  for (Eigen::Index d = 0; d < train.dims(); ++d) out << (d ? "," : "") << "z[" << d << "]";
  out << '\n';
  for (Eigen::Index i = 0; i < fit.inducing.size(); ++i) {
    out << fit.inducing.Z.row(i).format(row) << '\n';
  }
}

void write_fit_artifacts(const FitOutcome& fit, const Dataset& train,
                         const std::filesystem::path& dir, const std::string& prefix) {
  {
    std::ofstream f = open_out(dir / (prefix + "model.csv"));
    write_model(fit, train, f);
  }
  if (fit.trace.size() > 0) {
    std::ofstream t = open_out(dir / (prefix + "trace.csv"));
    write_trace(fit.trace, t);
    if (fit.trace.size() >= 4) {
      std::ofstream s = open_out(dir / (prefix + "summary.csv"));
      write_summary(summarize(fit.trace.constrained(), fit.trace.hyper_names()), s);
    }
  }
  if (fit.model) {
    std::ofstream l = open_out(dir / (prefix + "training_log.csv"));
    write_training_log(*fit.model, l);
  }
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "sgpr-ml2") return Method::kSgprMl2;
  if (name == "sgpr-hmc") return Method::kSgprHmc;
  if (name == "gpr-hmc") return Method::kGprHmc;
  if (name == "joint-hmc") return Method::kJointHmc;
  if (name == "fixed-z") return Method::kFixedZ;
  throw InputError("unknown method '" + name +
                   "' (expected sgpr-ml2, sgpr-hmc, gpr-hmc, joint-hmc or fixed-z)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kSgprMl2: return "sgpr-ml2";
    case Method::kSgprHmc: return "sgpr-hmc";
    case Method::kGprHmc: return "gpr-hmc";
    case Method::kJointHmc: return "joint-hmc";
    case Method::kFixedZ: return "fixed-z";
  }
  return "unknown";
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
  auto integer = [](auto member) {
    return Setter([member](ExperimentConfig& c, const std::string& k, const std::string& v) {
      auto& field = std::invoke(member, c);
      field = static_cast<std::remove_reference_t<decltype(field)>>(parse_value<long long>(k, v));
    });
  };
  auto real = [](auto member) {
    return Setter([member](ExperimentConfig& c, const std::string& k, const std::string& v) {
      std::invoke(member, c) = parse_value<double>(k, v);
    });
  };
  static const std::map<std::string, Setter> setters = {
      {"experiment.dataset", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
      {"experiment.method", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.methods = parse_methods(v); }},
      {"experiment.m", integer([](ExperimentConfig& c) -> Eigen::Index& { return c.m; })},
      {"experiment.split_fraction", real([](ExperimentConfig& c) -> double& { return c.split_fraction; })},
      {"experiment.n_splits", integer([](ExperimentConfig& c) -> int& { return c.n_splits; })},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_value<std::uint64_t>(k, v); }},
      {"experiment.prior", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.prior = parse_prior(v); }},
      {"experiment.out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"experiment.init_hyper", real([](ExperimentConfig& c) -> double& { return c.init_hyper; })},
      {"experiment.ml2_steps", integer([](ExperimentConfig& c) -> int& { return c.ml2_steps; })},
      {"train.warm_start_steps", integer([](ExperimentConfig& c) -> int& { return c.train.warm_start_steps; })},
      {"train.total_steps", integer([](ExperimentConfig& c) -> int& { return c.train.total_steps; })},
      {"train.sample_interval", integer([](ExperimentConfig& c) -> int& { return c.train.sample_interval; })},
      {"train.first_window_samples", integer([](ExperimentConfig& c) -> int& { return c.train.first_window_samples; })},
      {"train.first_window_tune", integer([](ExperimentConfig& c) -> int& { return c.train.first_window_tune; })},
      {"train.samples_per_window", integer([](ExperimentConfig& c) -> int& { return c.train.samples_per_window; })},
      {"train.later_window_tune", integer([](ExperimentConfig& c) -> int& { return c.train.later_window_tune; })},
      {"train.final_samples", integer([](ExperimentConfig& c) -> int& { return c.train.final_samples; })},
      {"train.learning_rate", real([](ExperimentConfig& c) -> double& { return c.train.adam.learning_rate; })},
      {"train.target_accept", real([](ExperimentConfig& c) -> double& { return c.train.target_accept; })},
      {"train.init_step_size", real([](ExperimentConfig& c) -> double& { return c.train.init_step_size; })},
      {"train.path_length_steps", integer([](ExperimentConfig& c) -> int& { return c.train.path_length_steps; })},
      {"train.converge_tol", real([](ExperimentConfig& c) -> double& { return c.train.converge_tol; })},
      {"train.converge_window", integer([](ExperimentConfig& c) -> int& { return c.train.converge_window; })},
      {"sampler.n_samples", integer([](ExperimentConfig& c) -> int& { return c.sampler.n_samples; })},
      {"sampler.n_tune", integer([](ExperimentConfig& c) -> int& { return c.sampler.n_tune; })},
      {"sampler.target_accept", real([](ExperimentConfig& c) -> double& { return c.sampler.target_accept; })},
      {"sampler.init_step_size", real([](ExperimentConfig& c) -> double& { return c.sampler.init_step_size; })},
      {"sampler.path_length_steps", integer([](ExperimentConfig& c) -> int& { return c.sampler.path_length_steps; })},
      {"joint.warm_start_steps", integer([](ExperimentConfig& c) -> int& { return c.joint.warm_start_steps; })},
      {"joint.n_samples", integer([](ExperimentConfig& c) -> int& { return c.joint.sampler.n_samples; })},
      {"joint.n_tune", integer([](ExperimentConfig& c) -> int& { return c.joint.sampler.n_tune; })},
      {"joint.target_accept", real([](ExperimentConfig& c) -> double& { return c.joint.sampler.target_accept; })},
      {"joint.init_step_size", real([](ExperimentConfig& c) -> double& { return c.joint.sampler.init_step_size; })},
      {"joint.path_length_steps", integer([](ExperimentConfig& c) -> int& { return c.joint.sampler.path_length_steps; })},
      {"joint.prior", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.joint.prior = parse_prior(v); }},
      {"surface.axis_a", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.surface.axis_a = v; }},
      {"surface.axis_b", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.surface.axis_b = v; }},
      {"surface.a_low", real([](ExperimentConfig& c) -> double& { return c.surface.a_low; })},
      {"surface.a_high", real([](ExperimentConfig& c) -> double& { return c.surface.a_high; })},
      {"surface.b_low", real([](ExperimentConfig& c) -> double& { return c.surface.b_low; })},
      {"surface.b_high", real([](ExperimentConfig& c) -> double& { return c.surface.b_high; })},
      {"surface.resolution", integer([](ExperimentConfig& c) -> int& { return c.surface.resolution; })},
      {"surface.log_spacing", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.surface.log_spacing = parse_bool(k, v); }},
      {"synth1d.n_train", integer([](ExperimentConfig& c) -> Eigen::Index& { return c.synth1d.n_train; })},
      {"synth1d.noise_std", real([](ExperimentConfig& c) -> double& { return c.synth1d.noise_std; })},
      {"synth1d.n_test", integer([](ExperimentConfig& c) -> Eigen::Index& { return c.synth1d.n_test; })},
      {"synth1d.m", integer([](ExperimentConfig& c) -> Eigen::Index& { return c.synth1d.m; })},
  };
  if (key.rfind("run.", 0) == 0) return;  // manifest bookkeeping
  const auto it = setters.find(key);
  if (it == setters.end()) throw InputError("config: unknown key '" + key + "'");
  it->second(*this, key, value);
}

void ExperimentConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw InputError("config: split_fraction must lie in (0, 1)");
  if (n_splits < 1) throw InputError("config: n_splits must be at least 1");
  if (m < 1) throw InputError("config: m must be at least 1");
  if (ml2_steps < 0) throw InputError("config: ml2_steps must be non-negative");
  if (!(init_hyper > 0.0)) throw InputError("config: init_hyper must be positive");
  if (methods.empty()) throw InputError("config: no method given");
  train.validate();
  sampler.validate();
  joint.sampler.validate();
  if (joint.warm_start_steps < 0) throw InputError("config: joint.warm_start_steps must be >= 0");
  if (surface.resolution < 2) throw InputError("config: surface.resolution must be at least 2");
  if (synth1d.m < 1) throw InputError("config: synth1d.m must be at least 1");
}

void ExperimentConfig::apply_environment() {
  if (const char* env = std::getenv("GP_SEED"); env != nullptr && *env != '\0') {
    seed = parse_value<std::uint64_t>("GP_SEED", env);
  }
}

void ExperimentConfig::write(std::ostream& os) const {
  os.precision(17);
  os << std::boolalpha;
  os << "[experiment]\n"
      << "dataset = " << dataset << "\nmethod = " << join_methods(methods) << "\nm = " << m
      << "\nsplit_fraction = " << split_fraction << "\nn_splits = " << n_splits
      << "\nseed = " << seed << "\nprior = " << prior_name(prior) << "\nout = " << this->out
      << "\ninit_hyper = " << init_hyper << "\nml2_steps = " << ml2_steps << "\n\n";
  os << "[train]\n"
      << "warm_start_steps = " << train.warm_start_steps << "\ntotal_steps = " << train.total_steps
      << "\nsample_interval = " << train.sample_interval
      << "\nfirst_window_samples = " << train.first_window_samples
      << "\nfirst_window_tune = " << train.first_window_tune
      << "\nsamples_per_window = " << train.samples_per_window
      << "\nlater_window_tune = " << train.later_window_tune
      << "\nfinal_samples = " << train.final_samples << "\nlearning_rate = " << train.adam.learning_rate
      << "\ntarget_accept = " << train.target_accept << "\ninit_step_size = " << train.init_step_size
      << "\npath_length_steps = " << train.path_length_steps
      << "\nconverge_tol = " << train.converge_tol << "\nconverge_window = " << train.converge_window
      << "\n\n";
  os << "[sampler]\n"
      << "n_samples = " << sampler.n_samples << "\nn_tune = " << sampler.n_tune
      << "\ntarget_accept = " << sampler.target_accept << "\ninit_step_size = " << sampler.init_step_size
      << "\npath_length_steps = " << sampler.path_length_steps << "\n\n";
  os << "[joint]\n"
      << "warm_start_steps = " << joint.warm_start_steps << "\nn_samples = " << joint.sampler.n_samples
      << "\nn_tune = " << joint.sampler.n_tune << "\ntarget_accept = " << joint.sampler.target_accept
      << "\ninit_step_size = " << joint.sampler.init_step_size
      << "\npath_length_steps = " << joint.sampler.path_length_steps
      << "\nprior = " << prior_name(joint.prior) << "\n\n";
  os << "[surface]\n"
      << "axis_a = " << surface.axis_a << "\naxis_b = " << surface.axis_b << "\na_low = " << surface.a_low
      << "\na_high = " << surface.a_high << "\nb_low = " << surface.b_low << "\nb_high = " << surface.b_high
      << "\nresolution = " << surface.resolution << "\nlog_spacing = " << surface.log_spacing << "\n\n";
  os << "[synth1d]\n"
      << "n_train = " << synth1d.n_train << "\nnoise_std = " << synth1d.noise_std
      << "\nn_test = " << synth1d.n_test << "\nm = " << synth1d.m << "\n";
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(source + ": " + e.message(), static_cast<long>(e.line()), 0);
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ParseError(source + ": key '" + section + "' outside a section", 0, 0);
    }
    for (const auto& [key, node] : body) config.set(section + "." + key, node.data());
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

FitOutcome fit_method(Method method, const Dataset& train, const InducingSet& z0,
                      const ExperimentConfig& config, std::uint64_t seed) {
  const Hypers h0 = Hypers::constant(train.dims(), config.init_hyper);
  FitOutcome fit;
  fit.method = method;
  const auto start = Clock::now();
  switch (method) {
    case Method::kSgprMl2: {
      WarmStartResult r = ml2_train(train, h0, z0, config.ml2_steps, config.train.adam);
      fit.point_hypers = r.hypers;
      fit.inducing = r.inducing;
      fit.ml2_history = std::move(r.elbo_history);
      break;
    }
    case Method::kSgprHmc:
    case Method::kFixedZ: {
      TrainConfig tc = config.train;
      tc.seed = seed;
      tc.prior = config.prior;
      TrainedModel model = method == Method::kSgprHmc ? sgphmc::train(train, h0, z0, tc)
                                                      : fixed_z_train(train, h0, z0, tc);
      fit.inducing = model.inducing;
      fit.trace = model.trace;
      fit.sampling_seconds = model.sampling_seconds;
      fit.model = std::move(model);
      break;
    }
    case Method::kGprHmc: {
      SamplerConfig sc = config.sampler;
      sc.seed = seed;
      fit.trace = exact_hmc_train(train, h0, sc, config.prior);
      fit.sampling_seconds = fit.trace.sampling_seconds;
      break;
    }
    case Method::kJointHmc: {
      JointConfig jc = config.joint;
      jc.adam = config.train.adam;
      jc.sampler.seed = seed;
      JointModel model = joint_hmc_train(train, h0, z0, jc);
      fit.inducing = model.inducing;
      fit.trace = std::move(model.trace);
      fit.sampling_seconds = fit.trace.sampling_seconds;
      break;
    }
  }
  fit.fit_seconds = seconds_since(start);
  return fit;
}

MixturePredictive predict_outcome(const FitOutcome& fit, const Dataset& train,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star) {
  switch (fit.method) {
    case Method::kSgprMl2:
      return point_predict(train, fit.point_hypers, fit.inducing, X_star, true);
    case Method::kSgprHmc:
    case Method::kFixedZ:
      return mixture_predict(train, fit.inducing, fit.trace, X_star, true);
    case Method::kGprHmc:
      return exact_mixture_predict(train, fit.trace, X_star, true);
    case Method::kJointHmc:
      return joint_mixture_predict(train, fit.inducing, fit.trace, X_star, true);
  }
  throw InputError("predict_outcome: unknown method");
}

std::vector<MetricRow> evaluate_split(const std::string& dataset_name, const TrainTestSplit& split,
                                      const ExperimentConfig& config,
                                      std::vector<FitOutcome>* fits) {
  const int k = split.record.split;
  const InducingSet z0 = init_inducing(split.train, config.m, derive_seed(config.seed, 1, k));
  const Eigen::VectorXd y_test = original_targets(split.test);
  std::vector<MetricRow> rows;
  for (Method method : config.methods) {
    MetricRow row;
    row.dataset = dataset_name;
    row.split = k;
    row.method = method;
    row.m = method == Method::kGprHmc ? split.train.size() : z0.size();
    const auto start = Clock::now();
    try {
      FitOutcome fit = fit_method(method, split.train, z0, config, derive_seed(config.seed, 2, k));
      const MixturePredictive pred = predict_outcome(fit, split.train, split.test.X);
      row.rmse = rmse(y_test, pred.mean_original());
      row.nlpd = nlpd(y_test, pred);
      row.draws = fit.draws();
      row.wall_sampling_s = fit.sampling_seconds;
      if (fits != nullptr) fits->push_back(std::move(fit));
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.rmse = row.nlpd = std::numeric_limits<double>::quiet_NaN();
      log_warning("split " + std::to_string(k) + " " + method_name(method) + " failed: " + e.what());
    }
    row.wall_total_s = seconds_since(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AggregateRow> aggregate_rows(const std::vector<MetricRow>& rows) {
  std::vector<AggregateRow> out;
  for (const MetricRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.dataset == r.dataset && a.method == r.method;
    });
    if (it == out.end()) {
      AggregateRow a;
      a.dataset = r.dataset;
      a.method = r.method;
      a.m = r.m;
      out.push_back(a);
      it = std::prev(out.end());
    }
    ++it->attempted;
  }
  for (AggregateRow& a : out) {
    std::vector<const MetricRow*> done;
    for (const MetricRow& r : rows)
      if (r.ok && r.dataset == a.dataset && r.method == a.method) done.push_back(&r);
    a.completed = static_cast<int>(done.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (done.empty()) {
      a.rmse_mean = a.rmse_sem = a.nlpd_mean = a.nlpd_sem = nan;
      continue;
    }
    const double n = static_cast<double>(done.size());
    auto mean_sem = [&](auto field, double& mean, double& sem) {
      double s = 0.0;
      for (const MetricRow* r : done) s += field(*r);
      mean = s / n;
      if (done.size() < 2) {
        sem = nan;
        return;
      }
      double ss = 0.0;
      for (const MetricRow* r : done) ss += (field(*r) - mean) * (field(*r) - mean);
      sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    };
    mean_sem([](const MetricRow& r) { return r.rmse; }, a.rmse_mean, a.rmse_sem);
    mean_sem([](const MetricRow& r) { return r.nlpd; }, a.nlpd_mean, a.nlpd_sem);
    double wt = 0.0, ws = 0.0;
    for (const MetricRow* r : done) {
      wt += r->wall_total_s;
      ws += r->wall_sampling_s;
    }
    a.wall_total_s = wt / n;
    a.wall_sampling_s = ws / n;
  }
  return out;
}

ExperimentResult run_experiment(const RawTable& raw, const std::string& dataset_name,
                                const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  for (int k = 0; k < config.n_splits; ++k) {
    const TrainTestSplit split = split_standardize(raw, config.split_fraction, config.seed, k);
    log_info("split " + std::to_string(k + 1) + "/" + std::to_string(config.n_splits));
    std::vector<MetricRow> rows = evaluate_split(dataset_name, split, config);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.aggregate = aggregate_rows(result.rows);
  for (const AggregateRow& a : result.aggregate) {
    const int failed = a.attempted - a.completed;
    if (failed > 2 || a.completed == 0) {
      throw NumericalError(method_name(a.method) + ": " + std::to_string(failed) + " of " +
                           std::to_string(a.attempted) + " splits failed");
    }
  }
  return result;
}

void write_metrics(const std::vector<MetricRow>& rows, std::ostream& out) {
  out.precision(17);
  out << "dataset,split,method,M,rmse,nlpd,J,wall_total_s,wall_sampling_s\n";
  for (const MetricRow& r : rows) {
    out << r.dataset << ',' << r.split << ',' << method_name(r.method) << ',' << r.m << ',';
    if (r.ok) {
      out << r.rmse << ',' << r.nlpd << ',' << r.draws;
    } else {
      out << "nan,nan,0";
    }
    out << ',' << r.wall_total_s << ',' << r.wall_sampling_s << '\n';
  }
}

void write_aggregate(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out.precision(17);
  for (const AggregateRow& a : rows) {
    out << "# " << a.dataset << ' ' << method_name(a.method) << ": " << a.completed << " of "
        << a.attempted << " splits completed\n";
  }
  out << "dataset,method,M,rmse_mean,rmse_sem,nlpd_mean,nlpd_sem,wall_total_s,wall_sampling_s\n";
  auto sem = [&](double v) {
    if (std::isnan(v)) return std::string();
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  for (const AggregateRow& a : rows) {
    out << a.dataset << ',' << method_name(a.method) << ',' << a.m << ',' << a.rmse_mean << ','
        << sem(a.rmse_sem) << ',' << a.nlpd_mean << ',' << sem(a.nlpd_sem) << ',' << a.wall_total_s
        << ',' << a.wall_sampling_s << '\n';
  }
}

Synth1dResult run_synth1d(const ExperimentConfig& config) {
  const Synth1dConfig& sc = config.synth1d;
  const Synth1d gen = synth1d_generate(config.seed, sc.n_train, sc.noise_std, sc.n_test);
  RawTable all;
  all.values.resize(gen.train.rows() + gen.test.rows(), 2);
  all.values << gen.train.values, gen.test.values;
  SplitRecord rec;
  for (Eigen::Index i = 0; i < gen.train.rows(); ++i) rec.train_rows.push_back(i);
  for (Eigen::Index i = 0; i < gen.test.rows(); ++i) rec.test_rows.push_back(gen.train.rows() + i);

  Synth1dResult result;
  result.data = standardize_split(all, std::move(rec));
  ExperimentConfig c = config;
  c.m = sc.m;
  c.methods = {Method::kSgprMl2, Method::kSgprHmc, Method::kJointHmc};
  result.rows = evaluate_split("synth1d", result.data, c, &result.fits);
  return result;
}

void command_fit(const ExperimentConfig& config) {
  config.validate();
  const RawTable raw = load_dataset(config);
  const auto dir = prepare_out(config);
  write_manifest(config, "fit");
  const TrainTestSplit split = split_standardize(raw, config.split_fraction, config.seed, 0);
  ExperimentConfig c = config;
  c.methods = {config.methods.front()};
  std::vector<FitOutcome> fits;
  const std::vector<MetricRow> rows = evaluate_split(dataset_stem(config.dataset), split, c, &fits);
  if (fits.empty()) throw NumericalError("fit failed: " + rows.front().error);
  write_fit_artifacts(fits.front(), split.train, dir, "");
  std::ofstream m = open_out(dir / "metrics.csv");
  write_metrics(rows, m);
}

void command_bench(const ExperimentConfig& config) {
  const RawTable raw = load_dataset(config);
  const auto dir = prepare_out(config);
  write_manifest(config, "bench");
  const ExperimentResult result = run_experiment(raw, dataset_stem(config.dataset), config);
  {
    std::ofstream m = open_out(dir / "metrics.csv");
    write_metrics(result.rows, m);
  }
  std::ofstream a = open_out(dir / "bench.csv");
  write_aggregate(result.aggregate, a);
}

void command_surface(const ExperimentConfig& config) {
  config.validate();
  const RawTable raw = load_dataset(config);
  const auto dir = prepare_out(config);
  write_manifest(config, "surface");
  const TrainTestSplit split = split_standardize(raw, config.split_fraction, config.seed, 0);
  SurfaceSpec spec;
  spec.axis_a = SurfaceAxis::parse(config.surface.axis_a);
  spec.axis_b = SurfaceAxis::parse(config.surface.axis_b);
  spec.values_a = SurfaceSpec::make_axis(config.surface.a_low, config.surface.a_high,
                                         config.surface.resolution, config.surface.log_spacing);
  spec.values_b = SurfaceSpec::make_axis(config.surface.b_low, config.surface.b_high,
                                         config.surface.resolution, config.surface.log_spacing);
  const LmlSurface surface =
      lml_surface(split.train, spec, Hypers::constant(split.train.dims(), config.init_hyper));
  std::ofstream f = open_out(dir / "surface.csv");
  write_surface(surface, f);
}

void command_diagnose(const ExperimentConfig& config, const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw IoError("cannot open trace '" + trace_path + "'");
  const Trace trace = read_trace(in);
  const auto dir = prepare_out(config);
  write_manifest(config, "diagnose");
  std::ofstream f = open_out(dir / "summary.csv");
  write_summary(summarize(trace.constrained(), trace.hyper_names()), f);
}

void command_synth1d(const ExperimentConfig& config) {
  config.validate();
  const auto dir = prepare_out(config);
  write_manifest(config, "synth1d");
  const Synth1dResult result = run_synth1d(config);
  {
    std::ofstream m = open_out(dir / "metrics.csv");
    write_metrics(result.rows, m);
  }
  for (const FitOutcome& fit : result.fits) {
    write_fit_artifacts(fit, result.data.train, dir, method_name(fit.method) + "_");
  }
}

}  // namespace sgphmc
