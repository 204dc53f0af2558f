#pragma once

#include "sgfl/types.hpp"

namespace sgfl {

/// Full objective value at chain-wise or dense coefficients.
double evaluate_objective(const Dataset& data, const PenaltyConfig& penalty,
                          const Solution& sol);
double evaluate_objective(const Dataset& data, const PenaltyConfig& penalty,
                          const Mat& dense_beta);

/// Dataset for the multivariate-response model y_t = A_t x_t, recast as
/// y_t = X_t beta_t with beta_t = vec(A_t) and X_t = x_t' (x) I_d.
Dataset kronecker_lift(const std::vector<Vec>& x, const std::vector<Vec>& y,
                       int d);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// deterministic start, relative tolerance 1e-8.
double spectral_norm(const Mat& M);

}  // namespace sgfl
