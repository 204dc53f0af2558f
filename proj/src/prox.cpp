#include "sgfl/prox.hpp"

#include <cmath>
#include <functional>

namespace sgfl {

Vec soft_threshold(const Vec& x, double lambda) {
  if (lambda < 0) throw std::invalid_argument("soft_threshold: negative threshold");
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], lambda);
  return out;
}

Vec soft_threshold(const Vec& x, const Vec& lambda) {
  if (x.size() != lambda.size()) throw std::invalid_argument("soft_threshold: length mismatch");
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], lambda[i]);
  return out;
}

Vec phi(const Vec& x, const Vec& s, double lambda) {
  if (x.size() != s.size()) throw std::invalid_argument("phi: length mismatch");
  if (lambda < 0) throw std::invalid_argument("phi: negative threshold");
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (s[i] > 0)
      out[i] = x[i] + lambda;
    else if (s[i] < 0)
      out[i] = x[i] - lambda;
    else
      out[i] = soft_threshold(x[i], lambda);
  }
  return out;
}

namespace {

struct Anchors {
  // active anchors after dropping zero weights and merging equal ones
  const Vec* a = nullptr;
  const Vec* b = nullptr;
  double wa = 0.0;  // lambda2-scaled weights
  double wb = 0.0;
};

Anchors resolve_anchors(const ProxNeighborhood& n) {
  Anchors out;
  const bool has_l = n.lambda2 > 0 && n.w_left > 0;
  const bool has_r = n.lambda2 > 0 && n.w_right > 0;
  if (has_l && has_r && n.left == n.right) {
    // merged anchors act as one term with the summed weight
    out.a = &n.left;
    out.wa = n.lambda2 * (n.w_left + n.w_right);
  } else {
    if (has_l) {
      out.a = &n.left;
      out.wa = n.lambda2 * n.w_left;
    }
    if (has_r) {
      if (out.a) {
        out.b = &n.right;
        out.wb = n.lambda2 * n.w_right;
      } else {
        out.a = &n.right;
        out.wa = n.lambda2 * n.w_right;
      }
    }
  }
  return out;
}

// Simple-solution test for the anchored quadratic subproblem: does the
// anchor c solve it? pull is the gradient contribution of the other anchor.
bool anchor_solves(const Vec& c, const Vec& z, double L, double l1s, double ball,
                   const Vec& pull) {
  const Vec v = phi(L * (c - z) + pull, c, l1s);
  return v.norm() <= ball;
}

}  // namespace

double ist_objective(const Vec& b, const Vec& z, const ProxNeighborhood& n) {
  double val = n.l1_scale * b.cwiseAbs().sum() + 0.5 * n.L * (b - z).squaredNorm();
  if (n.lambda2 > 0 && n.w_left > 0) val += n.lambda2 * n.w_left * (b - n.left).norm();
  if (n.lambda2 > 0 && n.w_right > 0) val += n.lambda2 * n.w_right * (b - n.right).norm();
  return val;
}

Vec ist_operator(const Vec& b, const Vec& z, const ProxNeighborhood& n) {
  const Anchors an = resolve_anchors(n);
  Vec num = n.L * z;
  double den = n.L;
  if (an.a) {
    const double da = (b - *an.a).norm();
    num += (an.wa / da) * *an.a;
    den += an.wa / da;
  }
  if (an.b) {
    const double db = (b - *an.b).norm();
    num += (an.wb / db) * *an.b;
    den += an.wb / db;
  }
  return soft_threshold(num, n.l1_scale) / den;
}

ProxResult ist_prox(const Vec& z, const ProxNeighborhood& n, const Vec& start,
                    double tol, int max_iter, IstTrace* trace) {
  if (tol <= 0) throw std::invalid_argument("ist_prox: tol must be positive");
  if (n.L <= 0) throw std::invalid_argument("ist_prox: L must be positive");
  const Anchors an = resolve_anchors(n);
  ProxResult res;

  // No active anchor: separable lasso prox in closed form
  if (!an.a) {
    res.beta = soft_threshold(n.L * z, n.l1_scale) / n.L;
    if (trace) trace->objective.push_back(ist_objective(res.beta, z, n));
    return res;
  }

  // Anchor optimality checks (exact snaps, no iteration needed)
  if (an.b) {
    const Vec diff = *an.a - *an.b;
    const double dab = diff.norm();
    if (anchor_solves(*an.a, z, n.L, n.l1_scale, an.wa, (an.wb / dab) * diff)) {
      res.beta = *an.a;
      return res;
    }
    if (anchor_solves(*an.b, z, n.L, n.l1_scale, an.wb, (-an.wa / dab) * diff)) {
      res.beta = *an.b;
      return res;
    }
  } else if (anchor_solves(*an.a, z, n.L, n.l1_scale, an.wa, Vec::Zero(z.size()))) {
    res.beta = *an.a;
    return res;
  }

  auto collision = [&](const Vec& b, const Vec& a) {
    return (b - a).norm() < 1e-12 * (1.0 + a.norm());
  };
  auto perturbed_restart = [&](const Vec& a) {
    Vec dir = z - a;
    const double nd = dir.norm();
    if (nd > 0)
      dir /= nd;
    else
      dir = Vec::Ones(z.size()).normalized();
    return Vec(a + (1e-6 * (1.0 + z.norm())) * dir);
  };

  Vec cur = start;
  if (collision(cur, *an.a)) cur = perturbed_restart(*an.a);
  if (an.b && collision(cur, *an.b)) cur = perturbed_restart(*an.b);

  int restarts = 0;
  double last_step = std::numeric_limits<double>::infinity();
  if (trace) trace->objective.push_back(ist_objective(cur, z, n));

  const Eigen::Index p = z.size();
  const Vec Lz = n.L * z;
  Vec g0(p), next(p);
  for (int it = 1; it <= max_iter; ++it) {
    double da = (cur - *an.a).norm();
    double db = an.b ? (cur - *an.b).norm() : 1.0;
    // Near-collision guard: the anchor check above already failed, so the
    // anchor is not the prox; restart from a perturbed point.
    if (da < 1e-12 * (1.0 + an.a->norm()) || (an.b && db < 1e-12 * (1.0 + an.b->norm()))) {
      const Vec& a = da < 1e-12 * (1.0 + an.a->norm()) ? *an.a : *an.b;
      cur = perturbed_restart(a);
      last_step = std::numeric_limits<double>::infinity();
      res.restarted = true;
      if (++restarts > 8) {
        res.beta = cur;
        res.converged = false;
        res.iterations = it;
        return res;
      }
      da = (cur - *an.a).norm();
      db = an.b ? (cur - *an.b).norm() : 1.0;
    }

    const double pa = an.wa / da;
    const double pb = an.b ? an.wb / db : 0.0;
    res.iterations = it;

    // stop when the fixed-point step is small and the minimal-norm
    // subgradient of the anchored objective is small at cur
    if (last_step <= tol * (1.0 + cur.norm())) {
      g0 = n.L * (cur - z) + pa * (cur - *an.a);
      if (an.b) g0 += pb * (cur - *an.b);
      if (phi(g0, cur, n.l1_scale).norm() <= 10.0 * tol * n.L * (1.0 + cur.norm())) {
        res.beta = std::move(cur);
        return res;
      }
    }

    // fixed-point step, reusing the anchor distances
    const double den = an.b ? n.L + pa + pb : n.L + pa;
    next = Lz + pa * *an.a;
    if (an.b) next += pb * *an.b;
    double step_sq = 0.0;
    bool finite = true;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double v = soft_threshold(next[i], n.l1_scale) / den;
      finite = finite && std::isfinite(v);
      const double d = v - cur[i];
      step_sq += d * d;
      next[i] = v;
    }
    if (!finite) throw std::runtime_error("ist_prox: nonfinite iterate");
    if (trace) trace->objective.push_back(ist_objective(next, z, n));
    last_step = std::sqrt(step_sq);
    cur.swap(next);
  }

  res.beta = std::move(cur);
  res.converged = false;
  return res;
}

namespace {

// Shared body of the block/chain simple-solution conditions. grad0(c) is
// the gradient of the smooth part (loss + folded ridge) at candidate c.
std::optional<Vec> check_simple_impl(const Vec& left, const Vec& right,
                                     const std::function<Vec(const Vec&)>& grad0,
                                     const std::function<double(const Vec&)>& local_obj,
                                     double l1s, double lambda2, double w_left,
                                     double w_right) {
  const bool has_l = lambda2 > 0 && w_left > 0;
  const bool has_r = lambda2 > 0 && w_right > 0;
  if (!has_l && !has_r) return std::nullopt;

  if (has_l && has_r && left == right) {
    if (phi(grad0(left), left, l1s).norm() <= lambda2 * (w_left + w_right)) return left;
    return std::nullopt;
  }

  std::optional<Vec> cand_l, cand_r;
  if (has_l) {
    Vec g = grad0(left);
    if (has_r) {
      const Vec diff = left - right;
      g += (lambda2 * w_right / diff.norm()) * diff;
    }
    if (phi(g, left, l1s).norm() <= lambda2 * w_left) cand_l = left;
  }
  if (has_r) {
    Vec g = grad0(right);
    if (has_l) {
      const Vec diff = right - left;
      g += (lambda2 * w_left / diff.norm()) * diff;
    }
    if (phi(g, right, l1s).norm() <= lambda2 * w_right) cand_r = right;
  }

  if (cand_l && cand_r) {
    // degenerate double hit: prefer the lower objective, ties go left
    return local_obj(*cand_l) <= local_obj(*cand_r) ? cand_l : cand_r;
  }
  return cand_l ? cand_l : cand_r;
}

}  // namespace

std::optional<Vec> check_block_simple(const Vec& left, const Vec& right,
                                      const Mat& XtX, const Vec& Xty,
                                      const PenaltyConfig& penalty,
                                      double w_left, double w_right) {
  if (left.size() != right.size() || XtX.rows() != left.size() || Xty.size() != left.size())
    throw std::invalid_argument("check_block_simple: dimension mismatch");
  const double ridge = penalty.ridge();
  auto grad0 = [&](const Vec& c) -> Vec { return XtX * c - Xty + ridge * c; };
  auto local_obj = [&](const Vec& c) {
    double v = 0.5 * c.dot(XtX * c) - Xty.dot(c) + 0.5 * ridge * c.squaredNorm() +
               penalty.l1_scale() * c.cwiseAbs().sum();
    if (penalty.lambda2 > 0 && w_left > 0) v += penalty.lambda2 * w_left * (c - left).norm();
    if (penalty.lambda2 > 0 && w_right > 0) v += penalty.lambda2 * w_right * (c - right).norm();
    return v;
  };
  return check_simple_impl(left, right, grad0, local_obj, penalty.l1_scale(),
                           penalty.lambda2, w_left, w_right);
}

std::optional<Vec> check_chain_simple(const SegmentData& seg, const PenaltyConfig& penalty) {
  if (seg.left.size() != seg.right.size() || seg.gram.rows() != seg.left.size() ||
      seg.lin.size() != seg.left.size())
    throw std::invalid_argument("check_chain_simple: dimension mismatch");
  const double n_c = seg.len;
  const double ridge = penalty.ridge() * n_c;
  const double l1s = penalty.l1_scale() * n_c;
  auto grad0 = [&](const Vec& c) -> Vec { return seg.gram * c - seg.lin + ridge * c; };
  auto local_obj = [&](const Vec& c) {
    double v = 0.5 * c.dot(seg.gram * c) - seg.lin.dot(c) + 0.5 * ridge * c.squaredNorm() +
               l1s * c.cwiseAbs().sum();
    if (penalty.lambda2 > 0 && seg.w_left > 0)
      v += penalty.lambda2 * seg.w_left * (c - seg.left).norm();
    if (penalty.lambda2 > 0 && seg.w_right > 0)
      v += penalty.lambda2 * seg.w_right * (c - seg.right).norm();
    return v;
  };
  return check_simple_impl(seg.left, seg.right, grad0, local_obj, l1s, penalty.lambda2,
                           seg.w_left, seg.w_right);
}

}  // namespace sgfl
