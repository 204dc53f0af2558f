#pragma once

#include "sgfl/fista.hpp"
#include "sgfl/objective.hpp"
#include "sgfl/prox.hpp"

#include <random>

namespace sgfl {

struct HybridConfig {
  double epsilon = 1e-6;  // outer tolerance of the (1-eps) progress rule
  enum class Sweep { Cyclic, Random };
  Sweep sweep = Sweep::Cyclic;
  std::uint64_t seed = 0;
  int max_rounds = 1000;

  FistaConfig block_fista;
  FistaConfig chain_fista;
  FistaConfig allchains_fista;
  FistaConfig certificate_fista;

  // ist_prox budget per call: the kernel converges in tens of iterations
  // away from the anchors; tight caps only truncate the slow near-anchor
  // subproblems, which the fusion cycle resolves by merging anyway
  double prox_tol = 1e-10;
  int prox_max_iter = 150;
  // skip re-optimizing a segment whose minimal-norm subgradient is already
  // below this relative residual; the reachable objective decrease
  // residual^2/(2L) sits far below the epsilon-progress resolution
  double skip_residual = 1e-7;

  // certificate threshold: tol = certificate_tol_scale * (1 + ||Z||_F)
  double certificate_tol_scale = 1e-6;
  // path-style fits can skip the optimality certificate and the terminal
  // polish that feeds it
  bool certify_at_exit = true;
  // all-chains merge threshold, relative to the representatives' norms
  double collision_tol = 1e-8;

  // Per-stage FISTA budgets. The block/chain passes only have to clear the
  // (1-eps) progress rule; exit accuracy comes from the terminal all-chains
  // polish and the certificate.
  HybridConfig() {
    block_fista.max_iter = 60;
    block_fista.rel_tol = 1e-9;
    block_fista.stall_window = 10;
    chain_fista.max_iter = 150;
    chain_fista.rel_tol = 1e-9;
    chain_fista.stall_window = 20;
    allchains_fista.mode = FistaConfig::Mode::Backtracking;
    allchains_fista.max_iter = 5000;
    allchains_fista.rel_tol = 1e-12;
    allchains_fista.stall_window = 100;
    certificate_fista.max_iter = 20000;
    certificate_fista.rel_tol = 1e-15;
    certificate_fista.stall_window = 400;
  }
};

/// Minimal-norm subgradient data. U and V live in the rescaled constraint
/// sets (the lambda1*alpha box and the lambda2*w_t balls), so
/// G = Z + U + V D'.
struct SubgradientCertificate {
  Mat U;  // p x T
  Mat V;  // p x (T-1)
  Mat G;  // p x T
  double norm = 0.0;
  double tol = 0.0;
  std::vector<double> chain_norms;
  bool pass() const { return norm <= tol; }
};

std::vector<int> sweep_order(int T, HybridConfig::Sweep sweep, std::mt19937_64& rng);

/// One block coordinate descent sweep (simple-solution snaps + per-block
/// FISTA). The returned segmentation is re-canonicalized.
Solution block_descent_pass(const Solution& sol, const Dataset& data,
                            const PenaltyConfig& penalty, const HybridConfig& config);

/// One fusion cycle: chain optimizations at chain starts, tentative merges
/// at chain ends committed only on strict objective decrease.
Solution fusion_cycle_pass(const Solution& sol, const Dataset& data,
                           const PenaltyConfig& penalty, const HybridConfig& config);

/// Backtracking FISTA over the chain representatives with merge-restart
/// when two adjacent representatives collide.
Solution all_chains_descent(const Solution& sol, const Dataset& data,
                            const PenaltyConfig& penalty, const HybridConfig& config);

/// Gradient projection (FISTA, constant L = 5) for the minimal-norm
/// subgradient, solved independently on each fusion chain.
SubgradientCertificate min_norm_subgradient(const Solution& sol, const Dataset& data,
                                            const PenaltyConfig& penalty,
                                            const HybridConfig& config = {});

/// Exact line search along -G; the previous segmentation is abandoned.
/// bracket_ok reports whether a descent bracket was found.
Solution subgradient_step(const Solution& sol, const Mat& G, const Dataset& data,
                          const PenaltyConfig& penalty, bool* bracket_ok = nullptr);

/// The full hybrid solve: block descent / fusion cycles / all-chains
/// descent / certificate / subgradient step, with the (1-eps) progress
/// rules throughout.
std::pair<Solution, SolverReport> solve_sgfl(const Dataset& data,
                                             const PenaltyConfig& penalty,
                                             const HybridConfig& config = {},
                                             const std::optional<Mat>& start = {});

}  // namespace sgfl
