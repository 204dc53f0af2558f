#pragma once

#include "sgfl/hybrid.hpp"

namespace sgfl {

struct BaselineConfig {
  int iterations = 4000;  // main run budget
  int trial_iters = 100;  // per-candidate tuning runs

  // SPG smoothing schedule
  double spg_mu_start_factor = 1e-2;  // mu0 = factor * lambda2 * max(w)
  double spg_mu_decrement = 0.1;
  double spg_mu_floor = 1e-8;
  int spg_stall_window = 100;
  int spg_iterations = 10000;

  // PD (Condat-Vu)
  double pd_rho = 1.9;
  std::vector<double> pd_tau_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1,
                                     1e0,  1e1,  1e2,  1e3,  1e4,  1e5, 1e6};

  // ADMM / LADMM penalty grid, tried from large to small
  std::vector<double> admm_rho_grid = {1e4, 1e3, 1e2, 1e1, 1e0, 1e-1, 1e-2, 1e-3, 1e-4};
  double admm_inner_tol = 1e-10;
  int admm_inner_max_iter = 400;
};

struct BaselineResult {
  Mat beta;  // dense p x T
  double objective = 0.0;
  std::vector<double> trace;  // true objective per outer iteration
  double selected_param = 0.0;
  double tuning_time_s = 0.0;
  double solve_time_s = 0.0;
  Mat dual;  // method-specific dual state (PD: v, ADMM/LADMM: scaled u)
  std::vector<std::string> flags;
};

/// Smoothing proximal gradient with restarts on a decreasing mu schedule.
BaselineResult spg_solve(const Dataset& data, const PenaltyConfig& penalty,
                         const BaselineConfig& config = {});

/// Condat-Vu primal-dual splitting with the trial-and-error tau selection.
BaselineResult pd_solve(const Dataset& data, const PenaltyConfig& penalty,
                        const BaselineConfig& config = {});

/// ADMM on the split z = D beta; the x-update is an inner warm-started
/// lasso solve.
BaselineResult admm_solve(const Dataset& data, const PenaltyConfig& penalty,
                          const BaselineConfig& config = {});

/// Linearized ADMM: the x-update becomes a single soft-thresholded
/// gradient step.
BaselineResult ladmm_solve(const Dataset& data, const PenaltyConfig& penalty,
                           const BaselineConfig& config = {});

/// Two-step approximation: segment with lambda1 = 0, then fit an
/// elastic net per resulting chain.
std::pair<Solution, BaselineResult> two_step_solve(const Dataset& data,
                                                   const PenaltyConfig& penalty,
                                                   const HybridConfig& step1_config = {},
                                                   const BaselineConfig& config = {});

/// Post-hoc segmentation of a dense estimate: threshold adjacent
/// differences at 1e-6 * scale. Approximate by construction; generic
/// solvers leave every time point an epsilon-change point.
Segmentation extract_segmentation(const Mat& beta, double tol_scale = 1e-6);

}  // namespace sgfl
