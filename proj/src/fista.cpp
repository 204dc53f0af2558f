#include "sgfl/fista.hpp"

namespace sgfl {

bool backtrack_check(const FistaProblem& problem, const Vec& x, const Vec& y, double L) {
  const double lhs = problem.f(x) + problem.g(x);
  const double q = problem.f(y) + problem.grad(y).dot(x - y) + problem.g(x) +
                   0.5 * L * (x - y).squaredNorm();
  return lhs <= q;
}

FistaResult fista(const FistaProblem& problem, Vec start, const FistaConfig& config) {
  config.validate();
  const bool backtracking = config.mode == FistaConfig::Mode::Backtracking;
  double L = backtracking ? config.L0 : config.lipschitz;
  if (L <= 0) throw std::invalid_argument("fista: nonpositive step constant");

  FistaResult res;
  Vec x = start;
  Vec x_prev = start;
  Vec y = start;
  double alpha = 1.0;

  double obj = problem.f(x) + problem.g(x);
  if (!std::isfinite(obj)) throw std::runtime_error("fista: nonfinite objective at start");
  const double obj_start = obj;
  res.trace.push_back(obj);
  Vec best_x = x;
  double best_obj = obj;
  std::vector<double> best_hist{best_obj};

  int tiny_steps = 0;
  for (int k = 1; k <= config.max_iter; ++k) {
    Vec x_new;
    if (backtracking) {
      const double fy = problem.f(y);
      const Vec gy = problem.grad(y);
      int doublings = 0;
      for (;;) {
        x_new = problem.prox(y - gy / L, L);
        const double q = fy + gy.dot(x_new - y) + 0.5 * L * (x_new - y).squaredNorm();
        if (problem.f(x_new) <= q) break;
        if (++doublings > 60)
          throw std::runtime_error("fista: backtracking exceeded 60 step-size increases");
        L *= config.eta;
      }
    } else {
      x_new = problem.prox(y - problem.grad(y) / L, L);
    }

    const double alpha_next = fista_momentum_next(alpha);
    y = x_new + ((alpha - 1.0) / alpha_next) * (x_new - x);
    alpha = alpha_next;
    x_prev = std::move(x);
    x = std::move(x_new);

    obj = problem.f(x) + problem.g(x);
    if (!std::isfinite(obj)) throw std::runtime_error("fista: nonfinite objective");
    res.trace.push_back(obj);
    res.L_trace.push_back(L);
    res.iterations = k;
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
    best_hist.push_back(best_obj);

    if ((x - x_prev).norm() <= 1e-17 * (1.0 + x.norm())) {
      if (++tiny_steps >= 3) break;  // stationary
    } else {
      tiny_steps = 0;
    }

    // stop when the best objective stops moving over the stall window; the
    // window scales with k because the ripple period of the iterates grows
    const int window = std::max(config.stall_window, k / 3);
    if (k >= window) {
      const double past = best_hist[best_hist.size() - 1 - static_cast<size_t>(window)];
      if (past - best_obj <= config.rel_tol * (1.0 + std::abs(best_obj))) break;
    }
  }

  res.final_L = L;
  if (config.monotone_guard) {
    res.x = std::move(best_x);
    res.objective = best_obj;
  } else {
    res.x = std::move(x);
    res.objective = obj;
  }
  res.progress = res.objective < obj_start;
  return res;
}

}  // namespace sgfl
