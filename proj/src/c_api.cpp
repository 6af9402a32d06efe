#include "sgphmc/sgphmc.h"

#include <exception>
#include <fstream>
#include <string>

#include "sgphmc/errors.hpp"
#include "sgphmc/experiment.hpp"
#include "sgphmc/log.hpp"

struct sgphmc_dataset {
  sgphmc::Dataset data;
};

struct sgphmc_config {
  sgphmc::ExperimentConfig config;
};

struct sgphmc_fit {
  sgphmc::Dataset train;
  sgphmc::FitOutcome outcome;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
sgphmc_status guarded(F&& body) noexcept {
  try {
    g_last_error.clear();
    body();
    return SGPHMC_OK;
  } catch (const sgphmc::ParseError& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_PARSE;
  } catch (const sgphmc::InputError& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_INPUT;
  } catch (const sgphmc::SamplerError& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_SAMPLER;
  } catch (const sgphmc::NumericalError& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_NUMERICAL;
  } catch (const sgphmc::IoError& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SGPHMC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return SGPHMC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw sgphmc::InputError(std::string(name) + " is NULL");
}

sgphmc::Hypers read_hypers(const double* h, Eigen::Index d) {
  require(h, "hypers");
  sgphmc::Hypers out;
  out.lengthscales = Eigen::Map<const Eigen::VectorXd>(h, d);
  out.signal_std = h[d];
  out.noise_std = h[d + 1];
  return out;
}

sgphmc::InducingSet read_inducing(const double* z, size_t m, Eigen::Index d) {
  require(z, "z");
  if (m == 0) throw sgphmc::InputError("m must be positive");
  sgphmc::InducingSet out;
  out.Z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      z, static_cast<Eigen::Index>(m), d);
  return out;
}

}  // namespace

extern "C" {

const char* sgphmc_version(void) { return "0.1.0"; }

const char* sgphmc_last_error(void) { return g_last_error.c_str(); }

const char* sgphmc_status_string(sgphmc_status status) {
  switch (status) {
    case SGPHMC_OK: return "ok";
    case SGPHMC_ERR_INPUT: return "invalid input";
    case SGPHMC_ERR_PARSE: return "parse error";
    case SGPHMC_ERR_NUMERICAL: return "numerical failure";
    case SGPHMC_ERR_SAMPLER: return "sampler failure";
    case SGPHMC_ERR_IO: return "i/o error";
    case SGPHMC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void sgphmc_set_log_level(int level) {
  sgphmc::set_log_level(level <= 0   ? sgphmc::LogLevel::kQuiet
                        : level == 1 ? sgphmc::LogLevel::kWarning
                                     : sgphmc::LogLevel::kInfo);
}

sgphmc_status sgphmc_dataset_from_arrays(const double* x, const double* y, size_t n, size_t d,
                                         sgphmc_dataset** out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(out, "out");
    if (n == 0 || d == 0) throw sgphmc::InputError("dataset needs n > 0 and d > 0");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd X =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x, rows, cols);
    Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y, rows);
    if (!X.allFinite() || !Y.allFinite()) throw sgphmc::InputError("dataset values must be finite");
    *out = new sgphmc_dataset{sgphmc::Dataset::from_arrays(std::move(X), std::move(Y))};
  });
}

sgphmc_status sgphmc_dataset_load_csv(const char* path, sgphmc_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const sgphmc::RawTable raw = sgphmc::load_csv(path);
    sgphmc::SplitRecord all;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) all.train_rows.push_back(i);
    *out = new sgphmc_dataset{sgphmc::standardize_split(raw, std::move(all)).train};
  });
}

void sgphmc_dataset_free(sgphmc_dataset* data) { delete data; }

size_t sgphmc_dataset_rows(const sgphmc_dataset* data) {
  return data == nullptr ? 0 : static_cast<size_t>(data->data.size());
}

size_t sgphmc_dataset_dims(const sgphmc_dataset* data) {
  return data == nullptr ? 0 : static_cast<size_t>(data->data.dims());
}

sgphmc_status sgphmc_exact_lml(const sgphmc_dataset* data, const double* hypers, double* value) {
  return guarded([&] {
    require(data, "data");
    require(value, "value");
    *value = sgphmc::exact_lml(data->data, read_hypers(hypers, data->data.dims()));
  });
}

sgphmc_status sgphmc_collapsed_elbo(const sgphmc_dataset* data, const double* hypers,
                                    const double* z, size_t m, double* value) {
  return guarded([&] {
    require(data, "data");
    require(value, "value");
    const Eigen::Index d = data->data.dims();
    *value = sgphmc::collapsed_elbo(data->data, read_hypers(hypers, d), read_inducing(z, m, d));
  });
}

sgphmc_status sgphmc_collapsed_elbo_grad(const sgphmc_dataset* data, const double* hypers,
                                         const double* z, size_t m, double* value,
                                         double* grad_hypers, double* grad_z) {
  return guarded([&] {
    require(data, "data");
    require(value, "value");
    const Eigen::Index d = data->data.dims();
    const sgphmc::SgprGradient g =
        sgphmc::collapsed_elbo_grad(data->data, read_hypers(hypers, d), read_inducing(z, m, d));
    *value = g.value;
    if (grad_hypers != nullptr) Eigen::Map<Eigen::VectorXd>(grad_hypers, d + 2) = g.grad_u;
    if (grad_z != nullptr) {
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          grad_z, static_cast<Eigen::Index>(m), d) = g.grad_Z;
    }
  });
}

sgphmc_status sgphmc_config_create(sgphmc_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sgphmc_config{};
  });
}

sgphmc_status sgphmc_config_load(const char* path, sgphmc_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new sgphmc_config{sgphmc::load_config(path)};
  });
}

sgphmc_status sgphmc_config_set(sgphmc_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

sgphmc_status sgphmc_config_apply_environment(sgphmc_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.apply_environment();
  });
}

sgphmc_status sgphmc_config_write(const sgphmc_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    std::ofstream f(path);
    if (!f) throw sgphmc::IoError(std::string("cannot write '") + path + "'");
    config->config.write(f);
  });
}

void sgphmc_config_free(sgphmc_config* config) { delete config; }

sgphmc_status sgphmc_run_fit(const sgphmc_config* config) {
  return guarded([&] {
    require(config, "config");
    sgphmc::command_fit(config->config);
  });
}

sgphmc_status sgphmc_run_bench(const sgphmc_config* config) {
  return guarded([&] {
    require(config, "config");
    sgphmc::command_bench(config->config);
  });
}

sgphmc_status sgphmc_run_surface(const sgphmc_config* config) {
  return guarded([&] {
    require(config, "config");
    sgphmc::command_surface(config->config);
  });
}

sgphmc_status sgphmc_run_diagnose(const sgphmc_config* config, const char* trace_path) {
  return guarded([&] {
    require(config, "config");
    require(trace_path, "trace_path");
    sgphmc::command_diagnose(config->config, trace_path);
  });
}

sgphmc_status sgphmc_run_synth1d(const sgphmc_config* config) {
  return guarded([&] {
    require(config, "config");
    sgphmc::command_synth1d(config->config);
  });
}

sgphmc_status sgphmc_fit_create(const sgphmc_dataset* train, const sgphmc_config* config,
                                sgphmc_fit** out) {
  return guarded([&] {
    require(train, "train");
    require(config, "config");
    require(out, "out");
    const sgphmc::ExperimentConfig& c = config->config;
    c.validate();
    const sgphmc::InducingSet z0 =
        sgphmc::init_inducing(train->data, c.m, sgphmc::derive_seed(c.seed, 1, 0));
    auto* fit = new sgphmc_fit{train->data, {}};
    try {
      fit->outcome = sgphmc::fit_method(c.methods.front(), train->data, z0, c,
                                        sgphmc::derive_seed(c.seed, 2, 0));
    } catch (...) {
      delete fit;
      throw;
    }
    *out = fit;
  });
}

void sgphmc_fit_free(sgphmc_fit* fit) { delete fit; }

size_t sgphmc_fit_draws(const sgphmc_fit* fit) {
  return fit == nullptr ? 0 : static_cast<size_t>(fit->outcome.draws());
}

sgphmc_status sgphmc_fit_predict(const sgphmc_fit* fit, const double* x_star, size_t p,
                                 double* mean, double* var) {
  return guarded([&] {
    require(fit, "fit");
    require(x_star, "x_star");
    require(mean, "mean");
    require(var, "var");
    const sgphmc::Dataset& d = fit->train;
    const auto rows = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd X =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            x_star, rows, d.dims());
    X = (X.rowwise() - d.x_mean.transpose()).array().rowwise() / d.x_std.transpose().array();
    const sgphmc::MixturePredictive pred = sgphmc::predict_outcome(fit->outcome, d, X);
    Eigen::Map<Eigen::VectorXd>(mean, rows) = pred.mean_original();
    Eigen::Map<Eigen::VectorXd>(var, rows) = pred.variance_original();
  });
}

sgphmc_status sgphmc_fit_write_trace(const sgphmc_fit* fit, const char* path) {
  return guarded([&] {
    require(fit, "fit");
    require(path, "path");
    if (fit->outcome.trace.size() == 0) throw sgphmc::InputError("fit has no trace (point estimate)");
    std::ofstream f(path);
    if (!f) throw sgphmc::IoError(std::string("cannot write '") + path + "'");
    sgphmc::write_trace(fit->outcome.trace, f);
  });
}

}  // extern "C"
