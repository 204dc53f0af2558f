#pragma once

#include "sgfl/types.hpp"

#include <functional>

namespace sgfl {

struct FistaConfig {
  enum class Mode { Constant, Backtracking };
  Mode mode = Mode::Constant;
  double lipschitz = 1.0;  // constant mode
  double L0 = 1.0;         // backtracking initial guess
  double eta = 2.0;        // backtracking growth factor, > 1
  int max_iter = 5000;
  double rel_tol = 1e-10;
  // FISTA iterates oscillate with period ~ pi * sqrt(condition number);
  // the window must exceed the longest best-objective plateau
  int stall_window = 50;
  bool monotone_guard = true;

  void validate() const {
    if (eta <= 1.0) throw std::invalid_argument("FistaConfig: eta must exceed 1");
    if (rel_tol <= 0) throw std::invalid_argument("FistaConfig: rel_tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("FistaConfig: max_iter must be >= 1");
  }
};

/// Splitting min f + g with smooth f and proximable g. prox(v, L) returns
/// prox_{g/L}(v); it may solve the subproblem inexactly as long as its
/// tolerance is well below rel_tol.
struct FistaProblem {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  std::function<double(const Vec&)> g;
  std::function<Vec(const Vec&, double)> prox;
};

struct FistaResult {
  Vec x;
  double objective = 0.0;
  int iterations = 0;
  bool progress = false;  // improved on the starting objective
  double final_L = 0.0;
  std::vector<double> trace;    // raw iterate objectives
  std::vector<double> L_trace;  // backtracked L per iteration
};

/// Accelerated proximal gradient with constant step or backtracking. With
/// the monotone guard the best iterate seen is returned (the raw iterates
/// may oscillate).
FistaResult fista(const FistaProblem& problem, Vec start, const FistaConfig& config);

/// Majorization test (f+g)(x) <= Q_L(x, y).
bool backtrack_check(const FistaProblem& problem, const Vec& x, const Vec& y, double L);

/// Momentum recursion a_{k+1} = (1 + sqrt(1 + 4 a_k^2)) / 2.
inline double fista_momentum_next(double a) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * a * a));
}

}  // namespace sgfl
