#pragma once

#include "sgfl/types.hpp"

namespace sgfl {

/// Simulation design: piecewise-constant sparse regression with
/// exchangeable predictor correlation. change_points are 0-based chain
/// starts strictly inside (0, T).
struct SimSpec {
  int d = 10;
  int p = 50;
  int T = 60;
  std::vector<int> change_points;
  double sparsity = 0.9;    // fraction of zeroed coefficients per segment
  double sigma_eps = 0.25;  // noise level
  double rho_x = 0.0;       // exchangeable correlation of X entries
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimTruth {
  Dataset data;
  Solution truth;  // planted coefficients and segmentation
};

/// Deterministic generator for the simulation design: X entries share one
/// global normal factor (exchangeable correlation rho_x), segment
/// coefficients are standard normal with round(s*p) entries zeroed, and
/// y_t = X_t beta_t + sigma*eps_t.
SimTruth simulate(const SimSpec& spec);

struct Metrics {
  int ncp = 0;
  double hausdorff = 0.0;
  double tpr = 0.0;
  double ppv = 0.0;
  double sparsity = 0.0;
  double r2 = 0.0;
};

/// Hausdorff distance between change-point sets; by convention returns
/// T_worst when exactly one side is empty and 0 when both are.
double hausdorff_distance(const std::vector<int>& a, const std::vector<int>& b, int T_worst);

/// TPR / PPV / estimated sparsity from exact-zero supports. Baseline dense
/// estimates must be thresholded before calling this.
Metrics classification_metrics(const Mat& beta_hat, const Mat& beta_true,
                               bool* ppv_degenerate = nullptr);

double pseudo_r2(const Dataset& data, const Mat& beta_hat);

/// Number of nonzero entries of the increments theta_t = beta_t -
/// beta_{t-1} with beta_0 = 0; computed chain-wise.
int free_parameters(const Solution& sol);

/// High-dimensional BIC: d*T*log(RSS) + 2*gamma*log(p)*free_parameters.
double hbic(const Dataset& data, const Solution& sol, double gamma);

/// BIC: d*T*log(RSS) + log(d*T)*free_parameters.
double bic(const Dataset& data, const Solution& sol);

double rss(const Dataset& data, const Solution& sol);

/// Merge segments shorter than min_segment_len into the closer neighbor,
/// then refit each segment by least squares restricted to the nonzero
/// support of its representative.
Solution sgfl_ols_refit(const Dataset& data, const Solution& sol, int min_segment_len,
                        std::vector<std::string>* flags = nullptr);

/// lambda1max = (1/T) || sum_t X_t' y_t ||_inf; at or above it the fully
/// fused solve is exactly zero.
double lambda1_max(const Dataset& data);

enum class GridScale { Linear, Log };

struct PenaltyGrid {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
};

/// Product grid: lambda1 spans [floor_ratio*lambda1max, lambda1max],
/// lambda2 spans [floor_ratio*lambda2_ceiling, lambda2_ceiling] with the
/// data-scale ceiling max_t ||X_t' y_t||_2.
PenaltyGrid build_grid(const Dataset& data, int n1, int n2, GridScale scale,
                       double floor_ratio);

}  // namespace sgfl
