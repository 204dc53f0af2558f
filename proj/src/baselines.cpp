#include "sgfl/baselines.hpp"

#include <chrono>
#include <cmath>

namespace sgfl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// (D beta)_t = beta_{t+1} - beta_t, t = 0..T-2
Mat apply_diff(const Mat& beta) {
  const int T = static_cast<int>(beta.cols());
  Mat q(beta.rows(), T - 1);
  for (int t = 0; t + 1 < T; ++t) q.col(t) = beta.col(t + 1) - beta.col(t);
  return q;
}

// adjoint: (D' v)_t = v_{t-1} - v_t with v_{-1} = v_{T-1} = 0
Mat apply_diff_adjoint(const Mat& v, int T) {
  Mat out = Mat::Zero(v.rows(), T);
  for (int t = 0; t < static_cast<int>(v.cols()); ++t) {
    out.col(t) -= v.col(t);
    out.col(t + 1) += v.col(t);
  }
  return out;
}

// gradient of the smooth loss (+ folded ridge) at dense beta
Mat loss_grad(const Dataset& data, const PenaltyConfig& pen, const Mat& beta) {
  Mat g(data.p, data.T);
  for (int t = 0; t < data.T; ++t)
    g.col(t) = data.gram_apply(t, beta.col(t)) - data.xty(t) + pen.ridge() * beta.col(t);
  return g;
}

double max_block_lipschitz(const Dataset& data) {
  double L = 0.0;
  for (int t = 0; t < data.T; ++t) {
    if (data.lifted)
      L = std::max(L, data.x_raw[static_cast<size_t>(t)].squaredNorm());
    else
      L = std::max(L, spectral_norm(data.gram(t)));
  }
  return L;
}

Mat soft_threshold_mat(const Mat& v, double lambda) {
  return v.unaryExpr([lambda](double x) { return soft_threshold(x, lambda); });
}

Vec block_soft(const Vec& a, double kappa) {
  const double n = a.norm();
  if (n <= kappa) return Vec::Zero(a.size());
  return (1.0 - kappa / n) * a;
}

struct TrackedRun {
  Mat best_beta;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<double> trace;

  void observe(const Dataset& data, const PenaltyConfig& pen, const Mat& beta) {
    const double f = evaluate_objective(data, pen, beta);
    trace.push_back(f);
    if (f < best_obj) {
      best_obj = f;
      best_beta = beta;
    }
  }
};

// ---- PD ----------------------------------------------------------------

// One Condat-Vu run at fixed (tau, sigma, rho); returns best-F iterate.
TrackedRun pd_run(const Dataset& data, const PenaltyConfig& pen, double tau, double sigma,
                  double rho, int iters, Mat* dual_out) {
  const int T = data.T;
  const int p = data.p;
  Mat beta = Mat::Zero(p, T);
  Mat v = Mat::Zero(p, std::max(T - 1, 0));
  TrackedRun run;
  run.observe(data, pen, beta);
  const double thr = tau * pen.l1_scale();

  for (int it = 0; it < iters; ++it) {
    const Mat grad = loss_grad(data, pen, beta) + apply_diff_adjoint(v, T);
    const Mat beta_half = soft_threshold_mat(beta - tau * grad, thr);
    Mat v_half = v + sigma * apply_diff(2.0 * beta_half - beta);
    for (int t = 0; t + 1 < T; ++t) {
      const double cap = pen.lambda2 * pen.weights[t];
      const double n = v_half.col(t).norm();
      if (n > cap) v_half.col(t) *= cap / n;
    }
    beta += rho * (beta_half - beta);
    v += rho * (v_half - v);
    run.observe(data, pen, beta);
  }
  if (dual_out) *dual_out = v;
  return run;
}

// ---- ADMM --------------------------------------------------------------

struct AdmmState {
  Mat beta, z, u;
};

// x-update: inner FISTA on the lasso-type subproblem, warm-started
int admm_x_update(const Dataset& data, const PenaltyConfig& pen, double rho, double L_inner,
                  AdmmState& st, const BaselineConfig& config) {
  const int T = data.T;
  Mat beta = st.beta;
  Mat beta_prev = beta;
  Mat yk = beta;
  double alpha = 1.0;
  const double thr = pen.l1_scale() / L_inner;
  double prev_obj = std::numeric_limits<double>::infinity();

  auto smooth_obj = [&](const Mat& b) {
    double val = 0.0;
    for (int t = 0; t < T; ++t)
      val += 0.5 * (data.y[static_cast<size_t>(t)] - data.apply(t, b.col(t))).squaredNorm() +
             0.5 * pen.ridge() * b.col(t).squaredNorm();
    val += 0.5 * rho * (apply_diff(b) - st.z + st.u).squaredNorm();
    return val;
  };

  int it = 1;
  for (; it <= config.admm_inner_max_iter; ++it) {
    const Mat grad =
        loss_grad(data, pen, yk) + rho * apply_diff_adjoint(apply_diff(yk) - st.z + st.u, T);
    Mat beta_new = soft_threshold_mat(yk - grad / L_inner, thr);
    const double a_next = fista_momentum_next(alpha);
    yk = beta_new + ((alpha - 1.0) / a_next) * (beta_new - beta);
    alpha = a_next;
    beta_prev = std::move(beta);
    beta = std::move(beta_new);

    const double obj = smooth_obj(beta) + pen.l1_scale() * beta.cwiseAbs().sum();
    if (std::abs(prev_obj - obj) <= config.admm_inner_tol * (1.0 + std::abs(obj))) break;
    prev_obj = obj;
  }
  st.beta = beta;
  return it;
}

TrackedRun admm_run(const Dataset& data, const PenaltyConfig& pen, double rho, int iters,
                    double L_loss, const BaselineConfig& config, bool linearized,
                    Mat* dual_out, std::vector<std::string>* flags) {
  const int T = data.T;
  const int p = data.p;
  AdmmState st{Mat::Zero(p, T), Mat::Zero(p, std::max(T - 1, 0)),
               Mat::Zero(p, std::max(T - 1, 0))};
  TrackedRun run;
  run.observe(data, pen, st.beta);
  const double L_inner = L_loss + pen.ridge() + 4.0 * rho;

  for (int it = 0; it < iters; ++it) {
    if (linearized) {
      const Mat grad = loss_grad(data, pen, st.beta) +
                       rho * apply_diff_adjoint(apply_diff(st.beta) - st.z + st.u, T);
      st.beta = soft_threshold_mat(st.beta - grad / L_inner, pen.l1_scale() / L_inner);
    } else {
      const int inner = admm_x_update(data, pen, rho, L_inner, st, config);
      if (inner >= config.admm_inner_max_iter && flags)
        flags->push_back("inner lasso hit iteration cap at outer iteration " + std::to_string(it));
    }
    const Mat q = apply_diff(st.beta);
    for (int t = 0; t + 1 < T; ++t)
      st.z.col(t) = block_soft(q.col(t) + st.u.col(t), pen.lambda2 * pen.weights[t] / rho);
    st.u += q - st.z;
    run.observe(data, pen, st.beta);
  }
  if (dual_out) *dual_out = st.u;
  return run;
}

// ---- tuning protocol ----------------------------------------------------

// Walk the grid in order, running trial_iters per candidate; stop once the
// best-of-trial score gets worse, and keep the best-scoring parameter.
template <typename RunTrial>
std::pair<double, bool> tune_parameter(const std::vector<double>& grid, RunTrial&& trial) {
  double best_param = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  double prev_score = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double candidate : grid) {
    const auto score = trial(candidate);
    if (!score) continue;  // infeasible candidate
    any = true;
    if (*score < best_score) {
      best_score = *score;
      best_param = candidate;
    }
    if (*score > prev_score) break;
    prev_score = *score;
  }
  return {best_param, any};
}

}  // namespace

// ---- public solvers ------------------------------------------------------

BaselineResult pd_solve(const Dataset& data, const PenaltyConfig& penalty,
                        const BaselineConfig& config) {
  data.validate();
  penalty.validate(data.T);
  BaselineResult res;
  const double maxL = max_block_lipschitz(data);
  auto sigma_rule = [&](double tau) { return 0.25 * (1.0 / tau - maxL); };

  const auto t0 = Clock::now();
  auto [tau, any] = tune_parameter(config.pd_tau_grid, [&](double cand) -> std::optional<double> {
    const double sigma = sigma_rule(cand);
    if (sigma <= 0) return std::nullopt;
    return pd_run(data, penalty, cand, sigma, config.pd_rho, config.trial_iters, nullptr).best_obj;
  });
  if (!any) throw std::runtime_error("pd_solve: no feasible tau in grid (1/tau must exceed max ||X'X||)");
  res.tuning_time_s = seconds_since(t0);

  const auto t1 = Clock::now();
  TrackedRun run =
      pd_run(data, penalty, tau, sigma_rule(tau), config.pd_rho, config.iterations, &res.dual);
  res.solve_time_s = seconds_since(t1);
  res.beta = std::move(run.best_beta);
  res.objective = run.best_obj;
  res.trace = std::move(run.trace);
  res.selected_param = tau;
  return res;
}

BaselineResult admm_solve(const Dataset& data, const PenaltyConfig& penalty,
                          const BaselineConfig& config) {
  data.validate();
  penalty.validate(data.T);
  BaselineResult res;
  const double L_loss = max_block_lipschitz(data);

  const auto t0 = Clock::now();
  auto [rho, any] = tune_parameter(config.admm_rho_grid, [&](double cand) -> std::optional<double> {
    return admm_run(data, penalty, cand, config.trial_iters, L_loss, config, false, nullptr, nullptr)
        .best_obj;
  });
  if (!any) throw std::runtime_error("admm_solve: empty rho grid");
  res.tuning_time_s = seconds_since(t0);

  const auto t1 = Clock::now();
  TrackedRun run = admm_run(data, penalty, rho, config.iterations, L_loss, config, false,
                            &res.dual, &res.flags);
  res.solve_time_s = seconds_since(t1);
  res.beta = std::move(run.best_beta);
  res.objective = run.best_obj;
  res.trace = std::move(run.trace);
  res.selected_param = rho;
  return res;
}

BaselineResult ladmm_solve(const Dataset& data, const PenaltyConfig& penalty,
                           const BaselineConfig& config) {
  data.validate();
  penalty.validate(data.T);
  BaselineResult res;
  const double L_loss = max_block_lipschitz(data);

  const auto t0 = Clock::now();
  auto [rho, any] = tune_parameter(config.admm_rho_grid, [&](double cand) -> std::optional<double> {
    return admm_run(data, penalty, cand, config.trial_iters, L_loss, config, true, nullptr, nullptr)
        .best_obj;
  });
  if (!any) throw std::runtime_error("ladmm_solve: empty rho grid");
  res.tuning_time_s = seconds_since(t0);

  const auto t1 = Clock::now();
  TrackedRun run = admm_run(data, penalty, rho, config.iterations, L_loss, config, true,
                            &res.dual, &res.flags);
  res.solve_time_s = seconds_since(t1);
  res.beta = std::move(run.best_beta);
  res.objective = run.best_obj;
  res.trace = std::move(run.trace);
  res.selected_param = rho;
  return res;
}

BaselineResult spg_solve(const Dataset& data, const PenaltyConfig& penalty,
                         const BaselineConfig& config) {
  data.validate();
  penalty.validate(data.T);
  BaselineResult res;
  const int T = data.T;
  const int p = data.p;
  const double maxL = max_block_lipschitz(data);
  const auto t0 = Clock::now();

  const double wmax = penalty.weights.size() > 0 ? penalty.weights.maxCoeff() : 0.0;
  double mu = config.spg_mu_start_factor * penalty.lambda2 * wmax;
  const bool smooth_tv = penalty.lambda2 > 0 && wmax > 0 && mu > 0;

  // dual-smoothed TV: max_{||a|| <= w} (a' q - mu ||a||^2); the maximizer is
  // the clipped dual and doubles as the gradient
  auto tv_dual = [&](const Vec& q, double w) -> Vec {
    Vec a = q / (2.0 * mu);
    const double n = a.norm();
    if (n > w) a *= w / n;
    return a;
  };

  Mat beta = Mat::Zero(p, T);
  TrackedRun run;
  run.observe(data, penalty, beta);

  if (!smooth_tv) {
    // lambda2 = 0: plain FISTA on the elastic net
    const double L = std::max(maxL + penalty.ridge(), 1e-12);
    Mat yk = beta, prev = beta;
    double alpha = 1.0;
    for (int it = 0; it < config.spg_iterations; ++it) {
      Mat next = soft_threshold_mat(yk - loss_grad(data, penalty, yk) / L, penalty.l1_scale() / L);
      const double a_next = fista_momentum_next(alpha);
      yk = next + ((alpha - 1.0) / a_next) * (next - beta);
      alpha = a_next;
      beta = std::move(next);
      run.observe(data, penalty, beta);
    }
  } else {
    double L = maxL + penalty.ridge() + penalty.lambda2 * 4.0 / (2.0 * mu);
    Mat yk = beta;
    double alpha = 1.0;
    int since_improve = 0;
    double best_seen = run.best_obj;
    for (int it = 0; it < config.spg_iterations; ++it) {
      Mat grad = loss_grad(data, penalty, yk);
      const Mat q = apply_diff(yk);
      Mat duals(p, T - 1);
      for (int t = 0; t + 1 < T; ++t) duals.col(t) = tv_dual(q.col(t), penalty.weights[t]);
      grad += penalty.lambda2 * apply_diff_adjoint(duals, T);
      Mat next = soft_threshold_mat(yk - grad / L, penalty.l1_scale() / L);
      const double a_next = fista_momentum_next(alpha);
      yk = next + ((alpha - 1.0) / a_next) * (next - beta);
      alpha = a_next;
      beta = std::move(next);
      run.observe(data, penalty, beta);

      if (run.best_obj < best_seen) {
        best_seen = run.best_obj;
        since_improve = 0;
      } else if (++since_improve >= config.spg_stall_window) {
        // restart on a smaller mu from the incumbent
        if (mu <= config.spg_mu_floor) {
          res.flags.push_back("mu schedule exhausted");
          break;
        }
        mu = std::max(mu * config.spg_mu_decrement, config.spg_mu_floor);
        L = maxL + penalty.ridge() + penalty.lambda2 * 4.0 / (2.0 * mu);
        beta = run.best_beta;
        yk = beta;
        alpha = 1.0;
        since_improve = 0;
      }
    }
  }

  res.solve_time_s = seconds_since(t0);
  res.beta = std::move(run.best_beta);
  res.objective = run.best_obj;
  res.trace = std::move(run.trace);
  res.selected_param = mu;
  return res;
}

std::pair<Solution, BaselineResult> two_step_solve(const Dataset& data,
                                                   const PenaltyConfig& penalty,
                                                   const HybridConfig& step1_config,
                                                   const BaselineConfig& config) {
  data.validate();
  penalty.validate(data.T);
  const auto t0 = Clock::now();

  // step 1: segment with the group-fused problem (lambda1 = 0)
  PenaltyConfig seg_pen = penalty;
  seg_pen.lambda1 = 0.0;
  auto [seg_sol, seg_report] = solve_sgfl(data, seg_pen, step1_config);

  // step 2: elastic net per chain, pooled over its time points
  BaselineResult res;
  Solution out;
  out.seg = seg_sol.seg;
  for (int k = 0; k < seg_sol.seg.num_chains(); ++k) {
    const int a = seg_sol.seg.begin(k);
    const int b = seg_sol.seg.end(k);
    const int n = b - a;
    Mat gram;
    Vec lin = Vec::Zero(data.p);
    if (data.lifted) {
      Mat xg = Mat::Zero(data.m, data.m);
      for (int t = a; t < b; ++t) {
        xg += data.x_raw[static_cast<size_t>(t)] * data.x_raw[static_cast<size_t>(t)].transpose();
        lin += data.xty(t);
      }
      gram = Mat::Zero(data.p, data.p);
      for (int i = 0; i < data.m; ++i)
        for (int j = 0; j < data.m; ++j)
          for (int r = 0; r < data.d; ++r) gram(i * data.d + r, j * data.d + r) = xg(i, j);
    } else {
      gram = Mat::Zero(data.p, data.p);
      for (int t = a; t < b; ++t) {
        gram.noalias() += data.X[static_cast<size_t>(t)].transpose() * data.X[static_cast<size_t>(t)];
        lin += data.xty(t);
      }
    }
    const double ridge = penalty.ridge() * n;
    const double l1s = penalty.l1_scale() * n;
    const double L = std::max(spectral_norm(gram) + ridge, 1e-12);

    FistaProblem prob;
    prob.f = [&](const Vec& v) {
      return 0.5 * v.dot(gram * v) - lin.dot(v) + 0.5 * ridge * v.squaredNorm();
    };
    prob.grad = [&](const Vec& v) -> Vec { return gram * v - lin + ridge * v; };
    prob.g = [&](const Vec& v) { return l1s * v.cwiseAbs().sum(); };
    prob.prox = [&](const Vec& v, double Lc) -> Vec { return soft_threshold(v, l1s / Lc); };

    FistaConfig fc;
    fc.lipschitz = L;
    fc.max_iter = std::max(config.iterations, 2000);
    fc.rel_tol = 1e-12;
    out.beta.push_back(fista(prob, seg_sol.beta[static_cast<size_t>(k)], fc).x);
  }
  out.canonicalize();
  out.objective = evaluate_objective(data, penalty, out);

  res.beta = out.dense();
  res.objective = out.objective;
  res.trace.push_back(out.objective);
  res.solve_time_s = seconds_since(t0);
  return {std::move(out), std::move(res)};
}

Segmentation extract_segmentation(const Mat& beta, double tol_scale) {
  const int T = static_cast<int>(beta.cols());
  double scale = 0.0;
  for (int t = 0; t < T; ++t) scale = std::max(scale, beta.col(t).norm());
  const double thr = tol_scale * (1.0 + scale);
  Segmentation seg;
  seg.T = T;
  seg.starts.push_back(0);
  for (int t = 1; t < T; ++t)
    if ((beta.col(t) - beta.col(t - 1)).norm() > thr) seg.starts.push_back(t);
  return seg;
}

}  // namespace sgfl
