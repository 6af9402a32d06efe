#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sgphmc/data.hpp"
#include "sgphmc/errors.hpp"

using namespace sgphmc;

namespace {

RawTable table(Eigen::Index rows, Eigen::Index cols) {
  RawTable t;
  t.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) t.values(i, j) = std::sin(1.3 * i + 0.7 * j) + j;
  return t;
}

}  // namespace

TEST_CASE("CSV parsing detects headers and reads numbers") {
  std::stringstream with("x1,x2,y\n1,2,3\n4,5,6.5\n");
  const RawTable a = parse_csv(with);
  CHECK(a.header == std::vector<std::string>{"x1", "x2", "y"});
  CHECK(a.rows() == 2);
  CHECK(a.input_dims() == 2);
  CHECK(a.values(1, 2) == 6.5);

  std::stringstream without("1,2\n3,4\n\n");
  const RawTable b = parse_csv(without);
  CHECK(b.header.empty());
  CHECK(b.rows() == 2);
  CHECK(b.values(1, 0) == 3.0);
}

TEST_CASE("CSV errors carry the row and column") {
  std::stringstream nan("a,b\n1,2\n3,nan\n");
  try {
    parse_csv(nan);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 2);
  }
  std::stringstream text("1,2\nfoo,4\n");
  CHECK_THROWS_AS(parse_csv(text), ParseError);
  std::stringstream ragged("1,2\n3\n");
  try {
    parse_csv(ragged);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
  }
  std::stringstream empty("");
  CHECK_THROWS_AS(parse_csv(empty), ParseError);
  CHECK_THROWS_AS(load_csv("/nonexistent/dir/data.csv"), IoError);
}

TEST_CASE("splits partition the rows and depend only on the seed and split index") {
  const SplitRecord s = split_indices(506, 0.8, 1, 0);
  CHECK(s.train_rows.size() == 405);
  CHECK(s.test_rows.size() == 101);
  std::set<Eigen::Index> all(s.train_rows.begin(), s.train_rows.end());
  all.insert(s.test_rows.begin(), s.test_rows.end());
  CHECK(all.size() == 506);
  CHECK(*all.rbegin() == 505);

  CHECK(split_indices(506, 0.8, 1, 0).train_rows == s.train_rows);
  CHECK(split_indices(506, 0.8, 1, 1).train_rows != s.train_rows);
  CHECK(split_indices(506, 0.8, 2, 0).train_rows != s.train_rows);
  CHECK_THROWS_AS(split_indices(4, 0.8, 1, 0), InputError);
  CHECK_THROWS_AS(split_indices(50, 1.5, 1, 0), InputError);
}

TEST_CASE("standardization uses training statistics only") {
  RawTable t = table(40, 3);
  t.values.col(1).setConstant(2.0);
  const TrainTestSplit sp = split_standardize(t, 0.75, 4, 0);
  CHECK(sp.train.size() == 30);
  CHECK(sp.test.size() == 10);
  CHECK(std::abs(sp.train.X.col(0).mean()) < 1e-12);
  const double pop_sd = std::sqrt((sp.train.X.col(0).array() - sp.train.X.col(0).mean()).square().mean());
  CHECK(pop_sd == doctest::Approx(1.0));
  CHECK(std::abs(sp.train.y.mean()) < 1e-12);
  // Constant column: centred, unscaled.
  CHECK(sp.train.X.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sp.train.x_std(1) == 1.0);

  // Test rows use the same map.
  const Eigen::Index r = sp.record.test_rows[0];
  CHECK(sp.test.X(0, 0) == doctest::Approx((t.values(r, 0) - sp.train.x_mean(0)) / sp.train.x_std(0)));
  CHECK(sp.test.y(0) == doctest::Approx((t.values(r, 2) - sp.train.y_mean) / sp.train.y_std));
  CHECK(sp.test.y_mean == sp.train.y_mean);
}

TEST_CASE("inducing initialization picks distinct training rows") {
  const TrainTestSplit sp = split_standardize(table(30, 3), 0.8, 5, 0);
  const InducingSet z = init_inducing(sp.train, 10, 7);
  CHECK(z.size() == 10);
  std::set<std::vector<double>> rows;
  for (Eigen::Index m = 0; m < z.size(); ++m) {
    bool found = false;
    for (Eigen::Index n = 0; n < sp.train.size(); ++n) found = found || (sp.train.X.row(n) == z.Z.row(m));
    CHECK(found);
    rows.insert({z.Z(m, 0), z.Z(m, 1)});
  }
  CHECK(rows.size() == 10);
  CHECK(init_inducing(sp.train, 10, 7).Z == z.Z);
  CHECK(init_inducing(sp.train, 500, 7).size() == sp.train.size());
}

TEST_CASE("synthetic 1-D data has a gap and the stated function") {
  CHECK(synth1d_function(0.0) == doctest::Approx(0.3));
  CHECK(synth1d_function(1.0) == doctest::Approx(std::sin(3.0) - 0.3));
  const Synth1d s = synth1d_generate(3);
  CHECK(s.train.rows() == 120);
  CHECK(s.test.rows() == 200);
  for (Eigen::Index i = 0; i < s.train.rows(); ++i) {
    const double x = s.train.values(i, 0);
    CHECK(std::abs(x) >= 2.0);
    CHECK(std::abs(x) <= 5.0);
  }
  CHECK(s.test.values(0, 0) == doctest::Approx(-5.0));
  CHECK(s.test.values(199, 0) == doctest::Approx(5.0));
  const Eigen::VectorXd resid = s.train.values.col(1) - s.train.values.col(0).unaryExpr(&synth1d_function);
  CHECK(std::sqrt(resid.squaredNorm() / 120.0) == doctest::Approx(0.3).epsilon(0.2));
  CHECK(synth1d_generate(3).train.values == s.train.values);
}
