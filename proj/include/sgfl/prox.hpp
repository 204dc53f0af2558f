#pragma once

#include "sgfl/types.hpp"

namespace sgfl {

/// Componentwise soft-thresholding S(x, lambda).
inline double soft_threshold(double x, double lambda) {
  if (lambda < 0) throw std::invalid_argument("soft_threshold: negative threshold");
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}
Vec soft_threshold(const Vec& x, double lambda);
Vec soft_threshold(const Vec& x, const Vec& lambda);

/// Componentwise operator phi(x, s, lambda):
///   x_i + lambda_i if s_i > 0, x_i - lambda_i if s_i < 0,
///   S(x_i, lambda_i) if s_i == 0.
Vec phi(const Vec& x, const Vec& s, double lambda);

/// Anchored prox subproblem
///   min_b l1_scale ||b||_1 + lambda2 (w_left ||b - left|| + w_right ||b - right||)
///         + L/2 ||b - z||^2.
/// A zero weight drops the corresponding anchor. left/right must be sized p
/// (ignored under zero weight).
struct ProxNeighborhood {
  Vec left;
  Vec right;
  double w_left = 0.0;
  double w_right = 0.0;
  double lambda2 = 0.0;
  double l1_scale = 0.0;  // lambda1*alpha for a block, lambda1*alpha*n_C for a chain
  double L = 1.0;         // quadratic curvature, elastic-net fold included
};

struct ProxResult {
  Vec beta;
  bool converged = true;
  int iterations = 0;
  bool restarted = false;  // near-collision guard fired
};

struct IstTrace {
  std::vector<double> objective;  // anchored objective per iterate
};

/// Fixed-point iterative soft-thresholding for the anchored prox
/// subproblem. Checks whether an anchor solves the subproblem exactly
/// before iterating; guards against near-collisions with an anchor by
/// snapping, re-checking, and restarting from a perturbed point.
ProxResult ist_prox(const Vec& z, const ProxNeighborhood& nbhd, const Vec& start,
                    double tol = 1e-10, int max_iter = 10000,
                    IstTrace* trace = nullptr);

/// Anchored objective g-bar evaluated at b (value minimized by ist_prox).
double ist_objective(const Vec& b, const Vec& z, const ProxNeighborhood& nbhd);

/// One application of the fixed-point operator T at b (b must differ from
/// both active anchors).
Vec ist_operator(const Vec& b, const Vec& z, const ProxNeighborhood& nbhd);

/// Sufficient data for a single-block or single-chain subproblem:
/// aggregated Gram/linear terms over the segment plus fixed neighbors.
/// Zero neighbor weight encodes the w_0 = w_T = 0 boundary convention.
struct SegmentData {
  Mat gram;   // sum_s X_s' X_s
  Vec lin;    // sum_s X_s' y_s
  int len = 1;
  Vec left;
  Vec right;
  double w_left = 0.0;
  double w_right = 0.0;
};

/// Closed-form simple-solution test for the block subproblem: returns the
/// neighbor that solves it exactly, if any. Under the elastic net the l1
/// scale is alpha*lambda1 and the gradient gains lambda1*(1-alpha)*beta.
std::optional<Vec> check_block_simple(const Vec& left, const Vec& right,
                                      const Mat& XtX, const Vec& Xty,
                                      const PenaltyConfig& penalty,
                                      double w_left, double w_right);

/// Chain variant with summed gradients and l1 scale lambda1*n_C.
std::optional<Vec> check_chain_simple(const SegmentData& seg,
                                      const PenaltyConfig& penalty);

}  // namespace sgfl
