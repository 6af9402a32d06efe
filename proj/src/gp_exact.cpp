#include "sgphmc/gp_exact.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <regex>

#include "linalg.hpp"
#include "sgphmc/errors.hpp"

namespace sgphmc {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_shapes(const Dataset& data, const Hypers& h) {
  validate(h);
  if (data.dims() != h.dims())
    throw InputError("dataset has " + std::to_string(data.dims()) + " inputs but hypers have " +
                     std::to_string(h.dims()) + " lengthscales");
  if (data.y.size() != data.X.rows()) throw InputError("dataset X/y length mismatch");
}

struct ExactFactor {
  Eigen::MatrixXd K;  // noise-free kernel matrix
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter_rel = 0.0;
};

// K + sig_n^2 I; retried once with the K_mm jitter before giving up.
ExactFactor factor_exact(const Dataset& data, const Hypers& h) {
  ExactFactor f;
  f.K = kernel_matrix(data.X, data.X, h);
  Eigen::MatrixXd C = f.K;
  C.diagonal().array() += h.noise_variance();
  try {
    f.llt = detail::factorize(C, "K_nn + sig_n^2 I");
  } catch (const NumericalError&) {
    f.jitter_rel = kRelativeJitter;
    C.diagonal().array() += kRelativeJitter * h.signal_variance();
    f.llt = detail::factorize(C, "K_nn + sig_n^2 I (with jitter)");
  }
  return f;
}

}  // namespace

Dataset Dataset::from_arrays(Eigen::MatrixXd X, Eigen::VectorXd y) {
  Dataset d;
  d.x_mean = Eigen::VectorXd::Zero(X.cols());
  d.x_std = Eigen::VectorXd::Ones(X.cols());
  d.X = std::move(X);
  d.y = std::move(y);
  d.validate();
  return d;
}

void Dataset::validate() const {
  if (X.rows() < 1) throw InputError("dataset: need at least one row");
  if (y.size() != X.rows()) throw InputError("dataset: X and y lengths differ");
  if (x_mean.size() != X.cols() || x_std.size() != X.cols())
    throw InputError("dataset: standardization statistics have wrong length");
  if ((x_std.array() <= 0.0).any() || !(y_std > 0.0))
    throw InputError("dataset: standard deviations must be positive");
}

double exact_lml(const Dataset& data, const Hypers& h) {
  check_shapes(data, h);
  const ExactFactor f = factor_exact(data, h);
  const Eigen::VectorXd alpha = f.llt.solve(data.y);
  const double n = static_cast<double>(data.size());
  return -0.5 * data.y.dot(alpha) - 0.5 * detail::log_det(f.llt) - 0.5 * n * kLog2Pi;
}

ValueAndGrad exact_lml_grad(const Dataset& data, const Hypers& h) {
  check_shapes(data, h);
  const ExactFactor f = factor_exact(data, h);
  const Eigen::Index N = data.size();
  const Eigen::Index D = data.dims();
  const Eigen::VectorXd alpha = f.llt.solve(data.y);
  ValueAndGrad out;
  out.value = -0.5 * data.y.dot(alpha) - 0.5 * detail::log_det(f.llt) -
              0.5 * static_cast<double>(N) * kLog2Pi;

  // dF/dC = (alpha alpha^T - C^{-1}) / 2
  Eigen::MatrixXd W = f.llt.solve(Eigen::MatrixXd::Identity(N, N));
  W = alpha * alpha.transpose() - W;
  out.grad = Eigen::VectorXd::Zero(D + 2);
  const Eigen::MatrixXd G = 0.5 * W;
  accumulate_self_grad(data.X, f.K, G, h, f.jitter_rel, out.grad, nullptr);
  out.grad(D + 1) = h.noise_variance() * W.trace();
  return out;
}

GaussianPrediction exact_predict(const Dataset& data, const Hypers& h,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                 bool include_noise) {
  check_shapes(data, h);
  if (X_star.cols() != h.dims()) throw InputError("exact_predict: test input dimension mismatch");
  const ExactFactor f = factor_exact(data, h);
  const Eigen::MatrixXd Kns = kernel_matrix(data.X, X_star, h);
  GaussianPrediction out;
  out.mean = Kns.transpose() * f.llt.solve(data.y);
  const Eigen::MatrixXd V = f.llt.matrixL().solve(Kns);
  out.cov = kernel_matrix(X_star, X_star, h) - V.transpose() * V;
  out.cov = detail::symmetrize(out.cov);
  if (include_noise) out.cov.diagonal().array() += h.noise_variance();
  return out;
}

DiagPrediction exact_predict_diag(const Dataset& data, const Hypers& h,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X_star,
                                  bool include_noise) {
  check_shapes(data, h);
  if (X_star.cols() != h.dims()) throw InputError("exact_predict: test input dimension mismatch");
  const ExactFactor f = factor_exact(data, h);
  const Eigen::MatrixXd Kns = kernel_matrix(data.X, X_star, h);
  DiagPrediction out;
  out.mean = Kns.transpose() * f.llt.solve(data.y);
  const Eigen::MatrixXd V = f.llt.matrixL().solve(Kns);
  out.var = (h.signal_variance() - V.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
  if (include_noise) out.var.array() += h.noise_variance();
  return out;
}

std::string SurfaceAxis::name() const {
  switch (kind) {
    case Kind::kSignalVariance:
      return "sig_f2";
    case Kind::kNoiseVariance:
      return "sig_n2";
    case Kind::kLengthscale:
      return "ls[" + std::to_string(dim) + "]";
  }
  return "?";
}

SurfaceAxis SurfaceAxis::parse(const std::string& text) {
  SurfaceAxis a;
  if (text == "sig_f2") {
    a.kind = Kind::kSignalVariance;
    return a;
  }
  if (text == "sig_n2") {
    a.kind = Kind::kNoiseVariance;
    return a;
  }
  static const std::regex ls_re(R"(ls\[(\d+)\])");
  std::smatch m;
  if (text == "ls") {
    a.kind = Kind::kLengthscale;
    return a;
  }
  if (std::regex_match(text, m, ls_re)) {
    a.kind = Kind::kLengthscale;
    a.dim = std::stol(m[1].str());
    return a;
  }
  throw InputError("unknown surface axis '" + text + "' (expected sig_f2, ls[d] or sig_n2)");
}

void SurfaceAxis::apply(Hypers& h, double value) const {
  if (!(value > 0.0)) throw InputError("surface axis values must be positive");
  switch (kind) {
    case Kind::kSignalVariance:
      h.signal_std = std::sqrt(value);
      break;
    case Kind::kNoiseVariance:
      h.noise_std = std::sqrt(value);
      break;
    case Kind::kLengthscale:
      if (dim < 0 || dim >= h.dims()) throw InputError("surface axis lengthscale index out of range");
      h.lengthscales(dim) = value;
      break;
  }
}

Eigen::VectorXd SurfaceSpec::make_axis(double lo, double hi, int resolution, bool log_spacing) {
  if (resolution < 1) throw InputError("surface resolution must be >= 1");
  if (resolution == 1) return Eigen::VectorXd::Constant(1, lo);
  if (log_spacing) {
    if (!(lo > 0.0 && hi > 0.0)) throw InputError("log-spaced axis needs positive bounds");
    Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(resolution, std::log10(lo), std::log10(hi));
    return e.unaryExpr([](double v) { return std::pow(10.0, v); });
  }
  return Eigen::VectorXd::LinSpaced(resolution, lo, hi);
}

LmlSurface lml_surface(const Dataset& data, const SurfaceSpec& spec, const Hypers& fixed) {
  check_shapes(data, fixed);
  if (spec.axis_a.kind == spec.axis_b.kind && spec.axis_a.dim == spec.axis_b.dim)
    throw InputError("surface axes must differ");
  LmlSurface out;
  out.spec = spec;
  out.neg_lml.resize(spec.values_a.size(), spec.values_b.size());
  for (Eigen::Index i = 0; i < spec.values_a.size(); ++i) {
    for (Eigen::Index j = 0; j < spec.values_b.size(); ++j) {
      Hypers h = fixed;
      spec.axis_a.apply(h, spec.values_a(i));
      spec.axis_b.apply(h, spec.values_b(j));
      try {
        out.neg_lml(i, j) = -exact_lml(data, h);
      } catch (const NumericalError&) {
        out.neg_lml(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return out;
}

void write_surface(const LmlSurface& surface, std::ostream& out) {
  auto join = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v(i);
  };
  out << std::setprecision(17);
  out << "# axis_a=" << surface.spec.axis_a.name() << " values=";
  join(surface.spec.values_a);
  out << "\n# axis_b=" << surface.spec.axis_b.name() << " values=";
  join(surface.spec.values_b);
  out << '\n';
  for (Eigen::Index i = 0; i < surface.neg_lml.rows(); ++i) {
    for (Eigen::Index j = 0; j < surface.neg_lml.cols(); ++j) {
      const double v = surface.neg_lml(i, j);
      out << (j ? "," : "");
      if (std::isfinite(v)) {
        out << v;
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
}

}  // namespace sgphmc
