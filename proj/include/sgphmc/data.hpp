#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgphmc/gp_exact.hpp"
#include "sgphmc/sgpr.hpp"

namespace sgphmc {

/// Numeric table; the last column is the regression target.
struct RawTable {
  Eigen::MatrixXd values;
  std::vector<std::string> header;  // empty when the file had none

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index input_dims() const { return values.cols() - 1; }
};

/// Header is detected as a first row containing a non-numeric cell. Ragged
/// rows and non-numeric or non-finite cells raise ParseError (1-based).
RawTable parse_csv(std::istream& in, const std::string& source = "<stream>");
RawTable load_csv(const std::string& path);

struct SplitRecord {
  int split = 0;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;  // standardized with the training statistics
  SplitRecord record;
};

/// Seeded Fisher-Yates shuffle, first ceil(fraction * N) rows train.
SplitRecord split_indices(Eigen::Index n, double fraction, std::uint64_t seed, int split_index);

/// Standardizes `train_rows` to zero mean, unit (population) std per column and
/// applies the same map to `test_rows`. Constant columns keep std 1.
TrainTestSplit standardize_split(const RawTable& raw, SplitRecord record);

TrainTestSplit split_standardize(const RawTable& raw, double fraction, std::uint64_t seed,
                                 int split_index);

/// M distinct seeded training rows; M > N is clamped with a warning.
InducingSet init_inducing(const Dataset& train, Eigen::Index m, std::uint64_t seed);

/// sin(3x) + 0.3 cos(pi x)
double synth1d_function(double x);

struct Synth1d {
  RawTable train;  // x uniform on [-5, -2] U [2, 5]
  RawTable test;   // uniform grid over [-5, 5], noisy targets
};

Synth1d synth1d_generate(std::uint64_t seed, Eigen::Index n_train = 120, double noise_std = 0.3,
                         Eigen::Index n_test = 200);

}  // namespace sgphmc
