#include "sgfl/objective.hpp"

#include <algorithm>

namespace sgfl {

void Dataset::validate() const {
  if (T < 1 || d < 1 || p < 1) throw std::invalid_argument("Dataset: T, d, p must be >= 1");
  if (static_cast<int>(y.size()) != T) throw std::invalid_argument("Dataset: y has wrong length");
  if (lifted) {
    if (m < 1 || p != d * m) throw std::invalid_argument("Dataset: lifted dims inconsistent");
    if (static_cast<int>(x_raw.size()) != T) throw std::invalid_argument("Dataset: x_raw has wrong length");
    for (const Vec& v : x_raw) {
      if (v.size() != m) throw std::invalid_argument("Dataset: x_t has wrong length");
      if (!all_finite(v)) throw std::invalid_argument("Dataset: nonfinite entry in x");
    }
  } else {
    if (static_cast<int>(X.size()) != T) throw std::invalid_argument("Dataset: X has wrong length");
    for (const Mat& Xt : X) {
      if (Xt.rows() != d || Xt.cols() != p) throw std::invalid_argument("Dataset: X_t has wrong shape");
      if (!all_finite(Xt)) throw std::invalid_argument("Dataset: nonfinite entry in X");
    }
  }
  for (const Vec& yt : y) {
    if (yt.size() != d) throw std::invalid_argument("Dataset: y_t has wrong length");
    if (!all_finite(yt)) throw std::invalid_argument("Dataset: nonfinite entry in y");
  }
}

Vec Dataset::apply(int t, const Vec& beta) const {
  if (beta.size() != p) throw std::invalid_argument("apply: beta has wrong length");
  if (!lifted) return X[static_cast<size_t>(t)] * beta;
  // beta = vec(A), column-major: X_t beta = A x_t
  Eigen::Map<const Mat> A(beta.data(), d, m);
  return A * x_raw[static_cast<size_t>(t)];
}

Vec Dataset::apply_t(int t, const Vec& r) const {
  if (r.size() != d) throw std::invalid_argument("apply_t: r has wrong length");
  if (!lifted) return X[static_cast<size_t>(t)].transpose() * r;
  // X_t' r = vec(r x_t')
  Vec out(p);
  Eigen::Map<Mat>(out.data(), d, m) = r * x_raw[static_cast<size_t>(t)].transpose();
  return out;
}

Vec Dataset::gram_apply(int t, const Vec& beta) const {
  if (!lifted) {
    const Mat& Xt = X[static_cast<size_t>(t)];
    return Xt.transpose() * (Xt * beta);
  }
  const Vec& xt = x_raw[static_cast<size_t>(t)];
  Eigen::Map<const Mat> A(beta.data(), d, m);
  Vec out(p);
  Eigen::Map<Mat>(out.data(), d, m) = (A * xt) * xt.transpose();
  return out;
}

Mat Dataset::gram(int t) const {
  if (!lifted) {
    const Mat& Xt = X[static_cast<size_t>(t)];
    return Xt.transpose() * Xt;
  }
  const Vec& xt = x_raw[static_cast<size_t>(t)];
  Mat G = Mat::Zero(p, p);
  // (x x') (x) I_d
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double v = xt[i] * xt[j];
      for (int r = 0; r < d; ++r) G(i * d + r, j * d + r) = v;
    }
  return G;
}

Vec Dataset::xty(int t) const { return apply_t(t, y[static_cast<size_t>(t)]); }

Mat Dataset::design(int t) const {
  if (!lifted) return X[static_cast<size_t>(t)];
  Mat Xt = Mat::Zero(d, p);
  const Vec& xt = x_raw[static_cast<size_t>(t)];
  for (int j = 0; j < m; ++j)
    for (int r = 0; r < d; ++r) Xt(r, j * d + r) = xt[j];
  return Xt;
}

void PenaltyConfig::validate(int T) const {
  if (lambda1 < 0 || lambda2 < 0) throw std::invalid_argument("PenaltyConfig: negative lambda");
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("PenaltyConfig: alpha outside [0,1]");
  if (weights.size() != std::max(T - 1, 0)) throw std::invalid_argument("PenaltyConfig: weights length must be T-1");
  if (weights.size() > 0 && weights.minCoeff() < 0) throw std::invalid_argument("PenaltyConfig: negative weight");
}

Segmentation Segmentation::all_blocks(int T) {
  Segmentation s;
  s.T = T;
  s.starts.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) s.starts[static_cast<size_t>(t)] = t;
  return s;
}

void Segmentation::validate() const {
  if (T < 1) throw std::invalid_argument("Segmentation: T must be >= 1");
  if (starts.empty() || starts.front() != 0) throw std::invalid_argument("Segmentation: starts[0] must be 0");
  for (size_t k = 1; k < starts.size(); ++k)
    if (starts[k] <= starts[k - 1]) throw std::invalid_argument("Segmentation: starts not increasing");
  if (starts.back() >= T) throw std::invalid_argument("Segmentation: start beyond T");
}

int Segmentation::chain_of(int t) const {
  auto it = std::upper_bound(starts.begin(), starts.end(), t);
  return static_cast<int>(it - starts.begin()) - 1;
}

Solution Solution::from_dense(const Mat& dense) {
  const int T = static_cast<int>(dense.cols());
  Solution s;
  s.seg.T = T;
  for (int t = 0; t < T; ++t) {
    if (t == 0 || dense.col(t) != dense.col(t - 1)) {
      s.seg.starts.push_back(t);
      s.beta.emplace_back(dense.col(t));
    }
  }
  return s;
}

Mat Solution::dense() const {
  const int p = static_cast<int>(beta.front().size());
  Mat out(p, seg.T);
  for (int k = 0; k < seg.num_chains(); ++k)
    for (int t = seg.begin(k); t < seg.end(k); ++t) out.col(t) = beta[static_cast<size_t>(k)];
  return out;
}

void Solution::canonicalize() {
  if (beta.size() < 2) return;
  std::vector<int> starts{seg.starts.front()};
  std::vector<Vec> reps{beta.front()};
  for (size_t k = 1; k < beta.size(); ++k) {
    if (beta[k] != reps.back()) {
      starts.push_back(seg.starts[k]);
      reps.push_back(beta[k]);
    }
  }
  seg.starts = std::move(starts);
  beta = std::move(reps);
}

void Solution::validate(int p) const {
  seg.validate();
  if (beta.size() != seg.starts.size()) throw std::invalid_argument("Solution: one representative per chain required");
  for (const Vec& b : beta)
    if (b.size() != p) throw std::invalid_argument("Solution: representative has wrong length");
}

double evaluate_objective(const Dataset& data, const PenaltyConfig& penalty,
                          const Mat& dense_beta) {
  if (dense_beta.rows() != data.p || dense_beta.cols() != data.T)
    throw std::invalid_argument("evaluate_objective: beta has wrong shape");
  if (!all_finite(dense_beta)) throw std::invalid_argument("evaluate_objective: nonfinite beta");
  penalty.validate(data.T);

  double loss = 0.0;
  for (int t = 0; t < data.T; ++t)
    loss += (data.y[static_cast<size_t>(t)] - data.apply(t, dense_beta.col(t))).squaredNorm();
  loss *= 0.5;

  double en = 0.0;
  if (penalty.lambda1 > 0) {
    const double l1 = dense_beta.cwiseAbs().sum();
    const double sq = dense_beta.squaredNorm();
    en = penalty.lambda1 * (penalty.alpha * l1 + 0.5 * (1.0 - penalty.alpha) * sq);
  }

  double tv = 0.0;
  if (penalty.lambda2 > 0) {
    for (int t = 0; t + 1 < data.T; ++t)
      tv += penalty.weights[t] * (dense_beta.col(t + 1) - dense_beta.col(t)).norm();
    tv *= penalty.lambda2;
  }

  return loss + en + tv;
}

double evaluate_objective(const Dataset& data, const PenaltyConfig& penalty,
                          const Solution& sol) {
  sol.validate(data.p);
  if (sol.seg.T != data.T) throw std::invalid_argument("evaluate_objective: segmentation length mismatch");
  penalty.validate(data.T);

  double loss = 0.0, l1 = 0.0, sq = 0.0, tv = 0.0;
  for (int k = 0; k < sol.seg.num_chains(); ++k) {
    const Vec& b = sol.beta[static_cast<size_t>(k)];
    if (!all_finite(b)) throw std::invalid_argument("evaluate_objective: nonfinite beta");
    const int n_k = sol.seg.length(k);
    for (int t = sol.seg.begin(k); t < sol.seg.end(k); ++t)
      loss += (data.y[static_cast<size_t>(t)] - data.apply(t, b)).squaredNorm();
    l1 += n_k * b.cwiseAbs().sum();
    sq += n_k * b.squaredNorm();
    if (k + 1 < sol.seg.num_chains())
      tv += penalty.weights[sol.seg.end(k) - 1] * (sol.beta[static_cast<size_t>(k) + 1] - b).norm();
  }
  return 0.5 * loss + penalty.lambda1 * (penalty.alpha * l1 + 0.5 * (1.0 - penalty.alpha) * sq) +
         penalty.lambda2 * tv;
}

Dataset kronecker_lift(const std::vector<Vec>& x, const std::vector<Vec>& y, int d) {
  if (x.empty() || y.empty()) throw std::invalid_argument("kronecker_lift: empty input");
  if (x.size() != y.size()) throw std::invalid_argument("kronecker_lift: x and y length mismatch");
  if (d < 1) throw std::invalid_argument("kronecker_lift: d must be >= 1");
  const int m = static_cast<int>(x.front().size());
  if (m < 1) throw std::invalid_argument("kronecker_lift: empty factor vector");
  Dataset data;
  data.T = static_cast<int>(x.size());
  data.d = d;
  data.m = m;
  data.p = d * m;
  data.lifted = true;
  data.x_raw = x;
  data.y = y;
  data.validate();
  return data;
}

double spectral_norm(const Mat& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("spectral_norm: non-square input");
  const int n = static_cast<int>(M.rows());
  if (n == 0) return 0.0;

  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / (2.0 * n);
  v.normalize();

  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Vec w = M * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double next = w.dot(M * w);
    if (std::abs(next - lambda) <= 1e-9 * (1.0 + std::abs(next))) return next;
    lambda = next;
    v = std::move(w);
  }
  return lambda;
}

}  // namespace sgfl
