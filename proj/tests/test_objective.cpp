#include "sgfl/objective.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace sgfl;

TEST_SUITE_BEGIN("objective");

namespace {

Dataset scalar_dataset(std::vector<double> xs, std::vector<double> ys) {
  Dataset d;
  d.T = static_cast<int>(xs.size());
  d.d = 1;
  d.p = 1;
  for (size_t t = 0; t < xs.size(); ++t) {
    d.X.push_back(Mat::Constant(1, 1, xs[t]));
    d.y.push_back(Vec::Constant(1, ys[t]));
  }
  return d;
}

}  // namespace

TEST_CASE("objective value on scalar instances") {
  Dataset d1 = scalar_dataset({1.0}, {1.0});
  PenaltyConfig pen = PenaltyConfig::make(1.0, 0.0, 1);
  Mat beta = Mat::Constant(1, 1, 0.5);
  CHECK(evaluate_objective(d1, pen, beta) == doctest::Approx(0.625).epsilon(1e-14));

  Dataset d2 = scalar_dataset({1.0, 1.0}, {1.0, 1.0});
  PenaltyConfig pen2 = PenaltyConfig::make(1.0, 2.0, 2);
  Mat beta2(1, 2);
  beta2 << 0.5, 1.0;
  CHECK(evaluate_objective(d2, pen2, beta2) == doctest::Approx(2.625).epsilon(1e-14));
}

TEST_CASE("objective equals half RSS at per-block least squares with no penalty") {
  std::mt19937_64 rng(7);
  Dataset data = testutil::random_dataset(5, 6, 3, rng);  // p <= d, full rank a.s.
  PenaltyConfig pen = PenaltyConfig::make(0.0, 0.0, data.T);
  Mat beta(data.p, data.T);
  double rss = 0.0;
  for (int t = 0; t < data.T; ++t) {
    beta.col(t) = oracle::least_squares(data.X[static_cast<size_t>(t)], data.y[static_cast<size_t>(t)]);
    rss += (data.y[static_cast<size_t>(t)] - data.X[static_cast<size_t>(t)] * beta.col(t)).squaredNorm();
  }
  CHECK(evaluate_objective(data, pen, beta) == doctest::Approx(0.5 * rss).epsilon(1e-12));
}

TEST_CASE("objective is convex along random segments") {
  std::mt19937_64 rng(11);
  Dataset data = testutil::random_dataset(6, 3, 4, rng);
  PenaltyConfig pen = PenaltyConfig::make(0.7, 1.3, data.T, 0.8);
  std::uniform_real_distribution<double> unif;
  for (int rep = 0; rep < 50; ++rep) {
    const Mat a = testutil::random_matrix(data.p, data.T, rng);
    const Mat b = testutil::random_matrix(data.p, data.T, rng);
    const double th = unif(rng);
    const double lhs = evaluate_objective(data, pen, Mat(th * a + (1 - th) * b));
    const double rhs =
        th * evaluate_objective(data, pen, a) + (1 - th) * evaluate_objective(data, pen, b);
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("objective separates across blocks when lambda2 = 0") {
  std::mt19937_64 rng(13);
  Dataset data = testutil::random_dataset(4, 3, 5, rng);
  PenaltyConfig pen = PenaltyConfig::make(0.9, 0.0, data.T, 0.6);
  const Mat beta = testutil::random_matrix(data.p, data.T, rng);
  double parts = 0.0;
  for (int t = 0; t < data.T; ++t) {
    Dataset single;
    single.T = 1;
    single.d = data.d;
    single.p = data.p;
    single.X = {data.X[static_cast<size_t>(t)]};
    single.y = {data.y[static_cast<size_t>(t)]};
    parts += evaluate_objective(single, PenaltyConfig::make(0.9, 0.0, 1, 0.6), Mat(beta.col(t)));
  }
  CHECK(evaluate_objective(data, pen, beta) == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("objective rejects bad input") {
  Dataset d = scalar_dataset({1.0}, {1.0});
  PenaltyConfig pen = PenaltyConfig::make(1.0, 0.0, 1);
  CHECK_THROWS_AS(evaluate_objective(d, pen, Mat::Zero(2, 1)), std::invalid_argument);
  Mat bad = Mat::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(evaluate_objective(d, pen, bad), std::invalid_argument);
  PenaltyConfig neg = PenaltyConfig::make(-1.0, 0.0, 1);
  CHECK_THROWS_AS(evaluate_objective(d, pen = neg, Mat::Zero(1, 1)), std::invalid_argument);
}

TEST_CASE("kronecker lift materializes x' (x) I_d") {
  {
    std::vector<Vec> xs{Vec::Constant(1, 3.0)};
    std::vector<Vec> ys{Vec::Zero(2)};
    Dataset d = kronecker_lift(xs, ys, 2);
    Mat expect(2, 2);
    expect << 3, 0, 0, 3;
    CHECK(d.design(0) == expect);
  }
  {
    Vec x(3);
    x << 1.5, -2.0, 0.25;
    Dataset d = kronecker_lift({x}, {Vec::Zero(1)}, 1);
    CHECK(d.design(0) == x.transpose());
  }
  {
    Vec x(2);
    x << 2.0, 5.0;  // (a, b)
    Dataset d = kronecker_lift({x}, {Vec::Zero(2)}, 2);
    Mat expect(2, 4);
    expect << 2, 0, 5, 0, 0, 2, 0, 5;
    CHECK(d.design(0) == expect);
  }
  CHECK_THROWS_AS(kronecker_lift({}, {}, 2), std::invalid_argument);
}

TEST_CASE("lifted products agree with the dense design") {
  std::mt19937_64 rng(17);
  const int d = 3, m = 4;
  std::vector<Vec> xs, ys;
  for (int t = 0; t < 5; ++t) {
    xs.push_back(testutil::random_vector(m, rng));
    ys.push_back(testutil::random_vector(d, rng));
  }
  Dataset lifted = kronecker_lift(xs, ys, d);
  for (int t = 0; t < lifted.T; ++t) {
    const Mat A = testutil::random_matrix(d, m, rng);
    const Vec beta = Eigen::Map<const Vec>(A.data(), d * m);  // vec(A)
    CHECK((lifted.apply(t, beta) - A * xs[static_cast<size_t>(t)]).cwiseAbs().maxCoeff() < 1e-12);
    const Mat Xt = lifted.design(t);
    CHECK((lifted.apply(t, beta) - Xt * beta).cwiseAbs().maxCoeff() < 1e-12);
    const Vec r = testutil::random_vector(d, rng);
    CHECK((lifted.apply_t(t, r) - Xt.transpose() * r).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lifted.gram_apply(t, beta) - Xt.transpose() * (Xt * beta)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lifted.gram(t) - Xt.transpose() * Xt).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("spectral norm by power iteration") {
  Mat diag = Mat::Zero(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = 1.0;
  CHECK(spectral_norm(diag) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(spectral_norm(Mat::Zero(4, 4)) == 0.0);

  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat A = testutil::random_matrix(5, 5, rng);
    const Mat M = A * A.transpose();
    CHECK(spectral_norm(M) == doctest::Approx(oracle::dense_spectral(M)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(spectral_norm(Mat::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("solution storage round trips and canonicalizes") {
  Mat dense(2, 5);
  dense << 1, 1, 2, 2, 2, 0, 0, 3, 3, 3;
  Solution s = Solution::from_dense(dense);
  CHECK(s.seg.num_chains() == 2);
  CHECK(s.seg.starts == std::vector<int>{0, 2});
  CHECK(s.dense() == dense);
  CHECK(s.seg.change_points() == std::vector<int>{2});

  s.beta[1] = s.beta[0];
  s.canonicalize();
  CHECK(s.seg.num_chains() == 1);
}

TEST_SUITE_END();
