#include "sgphmc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sgphmc/errors.hpp"
#include "sgphmc/log.hpp"

namespace sgphmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

// Mixes split_index into the seed so every split draws an independent stream.
std::mt19937_64 split_rng(std::uint64_t seed, int split_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split_index), 0x5u};
  return std::mt19937_64(seq);
}

// Fisher-Yates with explicit index draws so the permutation does not depend on
// the standard library's shuffle implementation.
void fisher_yates(std::vector<Eigen::Index>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::uint64_t j = rng() % static_cast<std::uint64_t>(i);
    std::swap(v[i - 1], v[static_cast<std::size_t>(j)]);
  }
}

}  // namespace

RawTable parse_csv(std::istream& in, const std::string& source) {
  RawTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_cells(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError(source + ": row " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(width),
                       line_no, static_cast<long>(std::min(cells.size(), width)) + 1);
    }
    std::vector<double> values(width);
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_number(cells[c], values[c]) || !std::isfinite(values[c])) {
        numeric = false;
        bad = c;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && table.header.empty()) {
        // Header only if no cell parses as a (possibly non-finite) number.
        double dummy;
        const bool any_numeric = std::any_of(cells.begin(), cells.end(),
                                             [&](const std::string& s) { return parse_number(s, dummy); });
        if (!any_numeric) {
          table.header = cells;
          continue;
        }
      }
      throw ParseError(source + ": row " + std::to_string(line_no) + ", column " +
                           std::to_string(bad + 1) + ": '" + cells[bad] + "' is not a finite number",
                       line_no, static_cast<long>(bad) + 1);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(source + ": no data rows", line_no, 0);
  if (width < 2) throw ParseError(source + ": need at least one input and one target column", 1, 1);
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

RawTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_csv(in, path);
}

SplitRecord split_indices(Eigen::Index n, double fraction, std::uint64_t seed, int split_index) {
  if (n < 5) throw InputError("split: need at least 5 rows, got " + std::to_string(n));
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split: fraction must lie in (0, 1)");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng = split_rng(seed, split_index);
  fisher_yates(perm, rng);
  auto n_train = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);
  SplitRecord rec;
  rec.split = split_index;
  rec.train_rows.assign(perm.begin(), perm.begin() + n_train);
  rec.test_rows.assign(perm.begin() + n_train, perm.end());
  return rec;
}

TrainTestSplit standardize_split(const RawTable& raw, SplitRecord record) {
  const Eigen::Index d = raw.input_dims();
  if (d < 1) throw InputError("standardize: table needs an input column");
  auto gather = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), raw.values.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = raw.values.row(idx[i]);
    return m;
  };
  const Eigen::MatrixXd tr = gather(record.train_rows);
  const Eigen::MatrixXd te = gather(record.test_rows);
  const Eigen::RowVectorXd mean = tr.colwise().mean();
  Eigen::RowVectorXd sd =
      ((tr.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(tr.rows())).sqrt();
  for (Eigen::Index c = 0; c < sd.size(); ++c) {
    if (!(sd(c) > 1e-12)) {
      const std::string name = c == d ? "target" : "input column " + std::to_string(c);
      log_warning("standardize: " + name + " is constant on the training rows; std set to 1");
      sd(c) = 1.0;
    }
  }
  auto make = [&](const Eigen::MatrixXd& m) {
    Dataset ds;
    const Eigen::MatrixXd z = (m.rowwise() - mean).array().rowwise() / sd.array();
    ds.X = z.leftCols(d);
    ds.y = z.col(d);
    ds.x_mean = mean.head(d).transpose();
    ds.x_std = sd.head(d).transpose();
    ds.y_mean = mean(d);
    ds.y_std = sd(d);
    return ds;
  };
  TrainTestSplit out;
  out.train = make(tr);
  out.test = make(te);
  out.record = std::move(record);
  return out;
}

TrainTestSplit split_standardize(const RawTable& raw, double fraction, std::uint64_t seed,
                                 int split_index) {
  return standardize_split(raw, split_indices(raw.rows(), fraction, seed, split_index));
}

InducingSet init_inducing(const Dataset& train, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw InputError("init_inducing: M must be positive");
  const Eigen::Index n = train.size();
  if (m > n) {
    log_warning("init_inducing: M=" + std::to_string(m) + " exceeds N=" + std::to_string(n) +
                "; using M=N");
    m = n;
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng = split_rng(seed, -1);
  fisher_yates(perm, rng);
  InducingSet z;
  z.Z.resize(m, train.dims());
  for (Eigen::Index i = 0; i < m; ++i) z.Z.row(i) = train.X.row(perm[static_cast<std::size_t>(i)]);
  return z;
}

double synth1d_function(double x) { return std::sin(3.0 * x) + 0.3 * std::cos(M_PI * x); }

Synth1d synth1d_generate(std::uint64_t seed, Eigen::Index n_train, double noise_std,
                         Eigen::Index n_test) {
  if (n_train < 10) throw InputError("synth1d: n_train must be at least 10");
  if (n_test < 2) throw InputError("synth1d: n_test must be at least 2");
  if (!(noise_std >= 0.0)) throw InputError("synth1d: noise_std must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Synth1d out;
  out.train.values.resize(n_train, 2);
  out.train.header = {"x", "y"};
  for (Eigen::Index i = 0; i < n_train; ++i) {
    // Equal-length pieces: map [0, 6) onto [-5, -2) U [2, 5).
    const double t = 6.0 * unit(rng);
    const double x = t < 3.0 ? -5.0 + t : 2.0 + (t - 3.0);
    out.train.values(i, 0) = x;
    out.train.values(i, 1) = synth1d_function(x) + noise_std * noise(rng);
  }
  out.test.values.resize(n_test, 2);
  out.test.header = {"x", "y"};
  for (Eigen::Index i = 0; i < n_test; ++i) {
    const double x = -5.0 + 10.0 * static_cast<double>(i) / static_cast<double>(n_test - 1);
    out.test.values(i, 0) = x;
    out.test.values(i, 1) = synth1d_function(x) + noise_std * noise(rng);
  }
  return out;
}

}  // namespace sgphmc
