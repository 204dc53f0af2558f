#include "sgfl/prox.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace sgfl;

TEST_SUITE_BEGIN("prox");

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  Vec x(3);
  x << 3.0, -0.5, -2.0;
  Vec lam(3);
  lam << 1.0, 1.0, 0.5;
  Vec expect(3);
  expect << 2.0, 0.0, -1.5;
  CHECK(soft_threshold(x, lam) == expect);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("phi operator") {
  auto scalar_phi = [](double x, double s, double lam) {
    Vec xv = Vec::Constant(1, x), sv = Vec::Constant(1, s);
    return phi(xv, sv, lam)[0];
  };
  CHECK(scalar_phi(2.0, 1.0, 0.5) == 2.5);
  CHECK(scalar_phi(0.3, 0.0, 0.5) == 0.0);
  CHECK(scalar_phi(-1.0, -2.0, 0.25) == -1.25);
  CHECK_THROWS_AS(phi(Vec::Zero(2), Vec::Zero(3), 1.0), std::invalid_argument);
}

TEST_CASE("block simple-solution conditions by hand") {
  // left = right = 0, X'y = 2, lambda1 = 1: ||S(-2,1)|| = 1
  Mat XtX = Mat::Identity(1, 1);
  Vec Xty = Vec::Constant(1, 2.0);
  Vec zero = Vec::Zero(1);
  {
    PenaltyConfig pen = PenaltyConfig::make(1.0, 1.0, 3);
    auto res = check_block_simple(zero, zero, XtX, Xty, pen, 1.0, 1.0);
    REQUIRE(res.has_value());
    CHECK(*res == zero);
  }
  {
    PenaltyConfig pen = PenaltyConfig::make(1.0, 0.25, 3);
    CHECK_FALSE(check_block_simple(zero, zero, XtX, Xty, pen, 1.0, 1.0).has_value());
  }
}

namespace {

// dual-route check: minimal-norm subgradient of the local objective at the
// candidate, via the projected-gradient oracle
double oracle_residual_at(const Vec& cand, const Vec& left, const Vec& right, const Mat& XtX,
                          const Vec& Xty, const PenaltyConfig& pen, double wl, double wr,
                          int len = 1) {
  Vec g0 = XtX * cand - Xty + pen.ridge() * len * cand;
  std::vector<double> balls;
  if (pen.lambda2 > 0 && wl > 0) {
    if (cand == left)
      balls.push_back(pen.lambda2 * wl);
    else {
      const Vec diff = cand - left;
      g0 += (pen.lambda2 * wl / diff.norm()) * diff;
    }
  }
  if (pen.lambda2 > 0 && wr > 0) {
    if (cand == right)
      balls.push_back(pen.lambda2 * wr);
    else {
      const Vec diff = cand - right;
      g0 += (pen.lambda2 * wr / diff.norm()) * diff;
    }
  }
  return oracle::min_subgradient_norm_at(g0, cand, pen.l1_scale() * len, balls, 20000);
}

}  // namespace

TEST_CASE("block simple solutions agree with the subdifferential oracle") {
  std::mt19937_64 rng(23);
  const int p = 4;
  int hits = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const Mat A = testutil::random_matrix(6, p, rng);
    const Mat XtX = A.transpose() * A;
    const Vec Xty = testutil::random_vector(p, rng);
    // neighbors with exact zeros so the sign sets bite
    const Vec left = testutil::random_sparse_vector(p, 0.5, rng) * 0.3;
    const Vec right = testutil::random_sparse_vector(p, 0.5, rng) * 0.3;
    PenaltyConfig pen = PenaltyConfig::make(0.8, 2.0, 3, 0.9);
    const double wl = 1.2, wr = 0.7;
    auto res = check_block_simple(left, right, XtX, Xty, pen, wl, wr);
    if (res) {
      ++hits;
      CHECK(oracle_residual_at(*res, left, right, XtX, Xty, pen, wl, wr) <= 1e-6);
    } else {
      // neither neighbor may be optimal
      CHECK(oracle_residual_at(left, left, right, XtX, Xty, pen, wl, wr) > 1e-8);
      CHECK(oracle_residual_at(right, left, right, XtX, Xty, pen, wl, wr) > 1e-8);
    }
  }
  CHECK(hits > 0);  // the large-lambda2 design must exercise the snap path
}

TEST_CASE("chain check on a single-element chain matches the block check") {
  std::mt19937_64 rng(29);
  const int p = 3;
  for (int rep = 0; rep < 50; ++rep) {
    const Mat A = testutil::random_matrix(5, p, rng);
    SegmentData seg;
    seg.gram = A.transpose() * A;
    seg.lin = testutil::random_vector(p, rng);
    seg.len = 1;
    seg.left = testutil::random_sparse_vector(p, 0.4, rng);
    seg.right = testutil::random_sparse_vector(p, 0.4, rng);
    seg.w_left = 0.9;
    seg.w_right = 1.4;
    PenaltyConfig pen = PenaltyConfig::make(0.6, 1.5, 3, 0.85);
    auto chain = check_chain_simple(seg, pen);
    auto block = check_block_simple(seg.left, seg.right, seg.gram, seg.lin, pen, seg.w_left,
                                    seg.w_right);
    CHECK(chain.has_value() == block.has_value());
    if (chain) CHECK(*chain == *block);
  }
}

TEST_CASE("chain check with equal neighbors and dominant lambda2 snaps") {
  std::mt19937_64 rng(31);
  const int p = 4;
  const Mat A = testutil::random_matrix(8, p, rng);
  SegmentData seg;
  seg.gram = A.transpose() * A;
  seg.lin = testutil::random_vector(p, rng);
  seg.len = 3;
  seg.left = testutil::random_vector(p, rng);
  seg.right = seg.left;
  seg.w_left = 1.0;
  seg.w_right = 1.0;
  PenaltyConfig pen = PenaltyConfig::make(0.1, 1e6, 5);
  auto res = check_chain_simple(seg, pen);
  REQUIRE(res.has_value());
  CHECK(*res == seg.left);
}

TEST_CASE("chain simple solutions agree with the subdifferential oracle") {
  std::mt19937_64 rng(37);
  const int p = 3;
  for (int rep = 0; rep < 40; ++rep) {
    const Mat A = testutil::random_matrix(9, p, rng);
    SegmentData seg;
    seg.gram = A.transpose() * A;
    seg.lin = testutil::random_vector(p, rng) * 0.5;
    seg.len = 3;
    seg.left = testutil::random_sparse_vector(p, 0.5, rng) * 0.2;
    seg.right = testutil::random_sparse_vector(p, 0.5, rng) * 0.2;
    seg.w_left = 1.0;
    seg.w_right = 1.0;
    PenaltyConfig pen = PenaltyConfig::make(0.5, 3.0, 5, 0.9);
    auto res = check_chain_simple(seg, pen);
    if (res) {
      const Vec cand = *res;
      Vec g0 = seg.gram * cand - seg.lin + pen.ridge() * seg.len * cand;
      std::vector<double> balls;
      if (cand == seg.left)
        balls.push_back(pen.lambda2 * seg.w_left);
      else
        g0 += (pen.lambda2 * seg.w_left / (cand - seg.left).norm()) * (cand - seg.left);
      if (cand == seg.right)
        balls.push_back(pen.lambda2 * seg.w_right);
      else
        g0 += (pen.lambda2 * seg.w_right / (cand - seg.right).norm()) * (cand - seg.right);
      CHECK(oracle::min_subgradient_norm_at(g0, cand, pen.l1_scale() * seg.len, balls, 20000) <=
            1e-6);
    }
  }
}

TEST_CASE("ist_prox closed-form cases") {
  const int p = 3;
  std::mt19937_64 rng(41);
  const Vec z = testutil::random_vector(p, rng);

  ProxNeighborhood nb;
  nb.left = Vec::Zero(p);
  nb.right = Vec::Zero(p);
  nb.L = 2.0;

  SUBCASE("pure quadratic returns z") {
    auto res = ist_prox(z, nb, Vec::Zero(p));
    CHECK((res.beta - z).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("separable lasso prox") {
    nb.l1_scale = 0.8;
    auto res = ist_prox(z, nb, Vec::Zero(p));
    const Vec expect = soft_threshold(Vec(2.0 * z), 0.8) / 2.0;
    CHECK((res.beta - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("ist_prox p=1 matches a dense grid search") {
  ProxNeighborhood nb;
  nb.left = Vec::Zero(1);
  nb.right = Vec::Constant(1, 2.0);
  nb.w_left = 1.0;
  nb.w_right = 1.0;
  nb.lambda2 = 0.1;
  nb.l1_scale = 0.05;
  nb.L = 1.0;
  const Vec z = Vec::Constant(1, 0.8);

  auto res = ist_prox(z, nb, Vec::Constant(1, 0.5), 1e-12);
  auto obj = [&](double b) { return ist_objective(Vec::Constant(1, b), z, nb); };
  const double xstar = oracle::grid_search_1d(obj, -1.0, 3.0, 1e-7);
  CHECK(obj(res.beta[0]) == doctest::Approx(obj(xstar)).epsilon(1e-6));
  CHECK(std::abs(res.beta[0] - xstar) < 1e-5);
}

TEST_CASE("ist_prox returns an anchor when the anchor is the prox") {
  // huge TV weights force the prox onto the (equal) anchors
  const int p = 2;
  ProxNeighborhood nb;
  nb.left = Vec::Constant(p, 0.7);
  nb.right = nb.left;
  nb.w_left = 2.0;
  nb.w_right = 1.0;
  nb.lambda2 = 1e5;
  nb.l1_scale = 0.3;
  nb.L = 1.0;
  std::mt19937_64 rng(43);
  auto res = ist_prox(testutil::random_vector(p, rng), nb, Vec::Zero(p));
  CHECK(res.beta == nb.left);
  CHECK(res.iterations == 0);
}

TEST_CASE("ist_prox descends and converges linearly") {
  std::mt19937_64 rng(47);
  const int p = 3;
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    ProxNeighborhood nb;
    nb.left = testutil::random_vector(p, rng);
    nb.right = testutil::random_vector(p, rng);
    nb.w_left = 0.8;
    nb.w_right = 1.1;
    nb.lambda2 = 0.4;
    nb.l1_scale = 0.2;
    nb.L = 1.5;
    const Vec z = testutil::random_vector(p, rng);

    IstTrace trace;
    auto res = ist_prox(z, nb, z, 1e-13, 20000, &trace);
    if (res.beta == nb.left || res.beta == nb.right || res.restarted) continue;
    ++checked;

    // the fixed-point iteration descends at every step
    for (size_t i = 1; i < trace.objective.size(); ++i)
      CHECK(trace.objective[i] <= trace.objective[i - 1] + 1e-12 * (1 + std::abs(trace.objective[i - 1])));

    // geometric tail: r_{n+1}/r_n bounded below 1
    const double fstar = ist_objective(res.beta, z, nb);
    std::vector<double> r;
    for (double v : trace.objective) {
      const double gap = v - fstar;
      if (gap > 1e-12 * (1 + std::abs(fstar)))
        r.push_back(gap);
      else
        break;
    }
    if (r.size() >= 6) {
      for (size_t i = r.size() / 2; i + 1 < r.size(); ++i) CHECK(r[i + 1] / r[i] <= 0.999);
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("fixed-point operator is the prox-gradient map") {
  std::mt19937_64 rng(53);
  const int p = 4;
  for (int rep = 0; rep < 25; ++rep) {
    ProxNeighborhood nb;
    nb.left = testutil::random_vector(p, rng);
    nb.right = testutil::random_vector(p, rng);
    nb.w_left = 0.6;
    nb.w_right = 0.9;
    nb.lambda2 = 0.7;
    nb.l1_scale = 0.25;
    nb.L = 2.0;
    const Vec z = testutil::random_vector(p, rng);
    const Vec b = testutil::random_vector(p, rng);

    const double inv_gamma = nb.L + nb.lambda2 * nb.w_left / (b - nb.left).norm() +
                             nb.lambda2 * nb.w_right / (b - nb.right).norm();
    // grad of g2 = anchored l2 terms + quadratic
    Vec g2 = nb.L * (b - z) +
             (nb.lambda2 * nb.w_left / (b - nb.left).norm()) * (b - nb.left) +
             (nb.lambda2 * nb.w_right / (b - nb.right).norm()) * (b - nb.right);
    const Vec via_prox_grad = soft_threshold(Vec(b - g2 / inv_gamma), nb.l1_scale / inv_gamma);
    CHECK((ist_operator(b, z, nb) - via_prox_grad).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ist_prox optimality residual is small at the output") {
  std::mt19937_64 rng(59);
  const int p = 3;
  const double tol = 1e-10;
  for (int rep = 0; rep < 20; ++rep) {
    ProxNeighborhood nb;
    nb.left = testutil::random_vector(p, rng);
    nb.right = testutil::random_vector(p, rng);
    nb.w_left = 1.0;
    nb.w_right = 1.0;
    nb.lambda2 = 0.5;
    nb.l1_scale = 0.3;
    nb.L = 2.0;
    const Vec z = testutil::random_vector(p, rng);
    auto res = ist_prox(z, nb, z, tol);
    if (res.beta == nb.left || res.beta == nb.right) continue;

    Vec g0 = nb.L * (res.beta - z) +
             (nb.lambda2 * nb.w_left / (res.beta - nb.left).norm()) * (res.beta - nb.left) +
             (nb.lambda2 * nb.w_right / (res.beta - nb.right).norm()) * (res.beta - nb.right);
    CHECK(phi(g0, res.beta, nb.l1_scale).norm() <= 10 * tol * nb.L * (1 + res.beta.norm()));
  }
}

TEST_SUITE_END();
