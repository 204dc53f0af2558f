#include "sgfl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sgfl {

void SimSpec::validate() const {
  if (d < 1 || p < 1 || T < 1) throw std::invalid_argument("SimSpec: dimensions must be >= 1");
  if (sparsity < 0 || sparsity > 1) throw std::invalid_argument("SimSpec: sparsity outside [0,1]");
  if (sigma_eps < 0) throw std::invalid_argument("SimSpec: negative noise level");
  if (rho_x < 0 || rho_x >= 1) throw std::invalid_argument("SimSpec: rho_x outside [0,1)");
  int prev = 0;
  for (int cp : change_points) {
    if (cp <= prev || cp >= T) throw std::invalid_argument("SimSpec: invalid change point");
    prev = cp;
  }
}

SimTruth simulate(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SimTruth out;
  Dataset& data = out.data;
  data.T = spec.T;
  data.d = spec.d;
  data.p = spec.p;
  data.X.resize(static_cast<size_t>(spec.T));
  data.y.resize(static_cast<size_t>(spec.T));

  // one shared factor realizes the exchangeable correlation across all
  // (time, entry) pairs
  const double z0 = normal(rng);
  const double a = std::sqrt(spec.rho_x), b = std::sqrt(1.0 - spec.rho_x);
  for (int t = 0; t < spec.T; ++t) {
    Mat& Xt = data.X[static_cast<size_t>(t)];
    Xt.resize(spec.d, spec.p);
    for (int i = 0; i < spec.d; ++i)
      for (int j = 0; j < spec.p; ++j) Xt(i, j) = a * z0 + b * normal(rng);
  }

  Segmentation seg;
  seg.T = spec.T;
  seg.starts.push_back(0);
  for (int cp : spec.change_points) seg.starts.push_back(cp);

  const int zeros = static_cast<int>(std::lround(spec.sparsity * spec.p));
  std::vector<Vec> reps;
  for (int k = 0; k < seg.num_chains(); ++k) {
    Vec beta(spec.p);
    for (int j = 0; j < spec.p; ++j) beta[j] = normal(rng);
    std::vector<int> idx(static_cast<size_t>(spec.p));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int j = 0; j < zeros; ++j) beta[idx[static_cast<size_t>(j)]] = 0.0;
    reps.push_back(std::move(beta));
  }

  for (int t = 0; t < spec.T; ++t) {
    const Vec& bt = reps[static_cast<size_t>(seg.chain_of(t))];
    Vec yt = data.X[static_cast<size_t>(t)] * bt;
    if (spec.sigma_eps > 0)
      for (int i = 0; i < spec.d; ++i) yt[i] += spec.sigma_eps * normal(rng);
    data.y[static_cast<size_t>(t)] = std::move(yt);
  }

  out.truth.seg = seg;
  out.truth.beta = std::move(reps);
  out.truth.canonicalize();
  data.validate();
  return out;
}

double hausdorff_distance(const std::vector<int>& a, const std::vector<int>& b, int T_worst) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return static_cast<double>(T_worst);
  auto directed = [](const std::vector<int>& s, const std::vector<int>& t) {
    double worst = 0.0;
    for (int x : s) {
      double best = std::numeric_limits<double>::infinity();
      for (int yv : t) best = std::min(best, static_cast<double>(std::abs(x - yv)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

Metrics classification_metrics(const Mat& beta_hat, const Mat& beta_true, bool* ppv_degenerate) {
  if (beta_hat.rows() != beta_true.rows() || beta_hat.cols() != beta_true.cols())
    throw std::invalid_argument("classification_metrics: shape mismatch");
  long hits = 0, true_nz = 0, est_nz = 0;
  for (Eigen::Index j = 0; j < beta_hat.cols(); ++j)
    for (Eigen::Index i = 0; i < beta_hat.rows(); ++i) {
      const bool tn = beta_true(i, j) != 0.0;
      const bool en = beta_hat(i, j) != 0.0;
      true_nz += tn;
      est_nz += en;
      hits += tn && en;
    }

  Metrics m;
  const double total = static_cast<double>(beta_hat.size());
  m.sparsity = (total - static_cast<double>(est_nz)) / total;
  m.tpr = true_nz > 0 ? static_cast<double>(hits) / static_cast<double>(true_nz)
                      : (est_nz == 0 ? 1.0 : 0.0);
  if (est_nz > 0) {
    m.ppv = static_cast<double>(hits) / static_cast<double>(est_nz);
    if (ppv_degenerate) *ppv_degenerate = false;
  } else {
    // all-zero estimate: PPV undefined, declared 1 when the truth is also
    // all zero and 0 otherwise
    m.ppv = true_nz == 0 ? 1.0 : 0.0;
    if (ppv_degenerate) *ppv_degenerate = true;
  }
  return m;
}

double pseudo_r2(const Dataset& data, const Mat& beta_hat) {
  if (static_cast<long>(data.T) * data.d < 2) throw std::invalid_argument("pseudo_r2: need T*d >= 2");
  Vec ybar = Vec::Zero(data.d);
  for (int t = 0; t < data.T; ++t) ybar += data.y[static_cast<size_t>(t)];
  ybar /= data.T;
  double ssr = 0.0, sst = 0.0;
  for (int t = 0; t < data.T; ++t) {
    ssr += (data.y[static_cast<size_t>(t)] - data.apply(t, beta_hat.col(t))).squaredNorm();
    sst += (data.y[static_cast<size_t>(t)] - ybar).squaredNorm();
  }
  if (sst == 0.0) throw std::invalid_argument("pseudo_r2: zero total variance");
  return 1.0 - ssr / sst;
}

int free_parameters(const Solution& sol) {
  int df = 0;
  Vec prev = Vec::Zero(sol.beta.front().size());
  for (const Vec& rep : sol.beta) {
    for (Eigen::Index i = 0; i < rep.size(); ++i) df += rep[i] != prev[i];
    prev = rep;
  }
  return df;
}

double rss(const Dataset& data, const Solution& sol) {
  double ssr = 0.0;
  for (int t = 0; t < data.T; ++t)
    ssr += (data.y[static_cast<size_t>(t)] - data.apply(t, sol.block(t))).squaredNorm();
  return ssr;
}

double hbic(const Dataset& data, const Solution& sol, double gamma) {
  if (gamma < 1) throw std::invalid_argument("hbic: gamma must be >= 1");
  const double ssr = rss(data, sol);
  if (ssr <= 0.0) return -std::numeric_limits<double>::infinity();
  return data.d * data.T * std::log(ssr) +
         2.0 * gamma * std::log(static_cast<double>(data.p)) * free_parameters(sol);
}

double bic(const Dataset& data, const Solution& sol) {
  const double ssr = rss(data, sol);
  if (ssr <= 0.0) return -std::numeric_limits<double>::infinity();
  return data.d * data.T * std::log(ssr) +
         std::log(static_cast<double>(data.d) * data.T) * free_parameters(sol);
}

Solution sgfl_ols_refit(const Dataset& data, const Solution& sol, int min_segment_len,
                        std::vector<std::string>* flags) {
  if (min_segment_len < 1) throw std::invalid_argument("sgfl_ols_refit: min_segment_len must be >= 1");
  Solution cur = sol;
  cur.canonicalize();

  // fuse short segments with the neighbor whose representative is closer
  bool merged = true;
  while (merged && cur.seg.num_chains() > 1) {
    merged = false;
    for (int k = 0; k < cur.seg.num_chains(); ++k) {
      if (cur.seg.length(k) >= min_segment_len) continue;
      const bool has_l = k > 0;
      const bool has_r = k + 1 < cur.seg.num_chains();
      int into;
      if (has_l && has_r) {
        const double dl = (cur.beta[static_cast<size_t>(k)] - cur.beta[static_cast<size_t>(k) - 1]).norm();
        const double dr = (cur.beta[static_cast<size_t>(k)] - cur.beta[static_cast<size_t>(k) + 1]).norm();
        into = dl <= dr ? k - 1 : k + 1;
      } else {
        into = has_l ? k - 1 : k + 1;
      }
      if (into == k - 1) {
        cur.beta.erase(cur.beta.begin() + k);
        cur.seg.starts.erase(cur.seg.starts.begin() + k);
      } else {
        cur.seg.starts[static_cast<size_t>(k) + 1] = cur.seg.starts[static_cast<size_t>(k)];
        cur.beta.erase(cur.beta.begin() + k);
        cur.seg.starts.erase(cur.seg.starts.begin() + k);
      }
      merged = true;
      break;
    }
  }

  // per-segment least squares on the support columns
  for (int k = 0; k < cur.seg.num_chains(); ++k) {
    Vec& rep = cur.beta[static_cast<size_t>(k)];
    std::vector<int> support;
    for (Eigen::Index i = 0; i < rep.size(); ++i)
      if (rep[i] != 0.0) support.push_back(static_cast<int>(i));
    if (support.empty()) continue;

    const int ns = static_cast<int>(support.size());
    Mat gram = Mat::Zero(ns, ns);
    Vec lin = Vec::Zero(ns);
    for (int t = cur.seg.begin(k); t < cur.seg.end(k); ++t) {
      const Mat Xt = data.design(t);
      Mat Xs(data.d, ns);
      for (int j = 0; j < ns; ++j) Xs.col(j) = Xt.col(support[static_cast<size_t>(j)]);
      gram.noalias() += Xs.transpose() * Xs;
      lin.noalias() += Xs.transpose() * data.y[static_cast<size_t>(t)];
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(gram);
    if (cod.rank() < ns && flags)
      flags->push_back("rank-deficient support system in segment " + std::to_string(k) +
                       "; minimum-norm solution used");
    const Vec coef = cod.solve(lin);
    rep.setZero();
    for (int j = 0; j < ns; ++j) rep[support[static_cast<size_t>(j)]] = coef[j];
  }
  cur.canonicalize();
  return cur;
}

double lambda1_max(const Dataset& data) {
  Vec acc = Vec::Zero(data.p);
  for (int t = 0; t < data.T; ++t) acc += data.xty(t);
  return acc.cwiseAbs().maxCoeff() / data.T;
}

PenaltyGrid build_grid(const Dataset& data, int n1, int n2, GridScale scale, double floor_ratio) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("build_grid: counts must be >= 1");
  if (floor_ratio <= 0 || floor_ratio >= 1) throw std::invalid_argument("build_grid: floor_ratio outside (0,1)");

  const double l1max = lambda1_max(data);
  double l2max = 0.0;
  for (int t = 0; t < data.T; ++t) l2max = std::max(l2max, data.xty(t).norm());

  auto span = [&](double hi, int n) {
    std::vector<double> g;
    if (n == 1 || hi == 0.0) {
      g.assign(static_cast<size_t>(n), hi);
      return g;
    }
    const double lo = floor_ratio * hi;
    for (int i = 0; i < n; ++i) {
      const double f = static_cast<double>(i) / (n - 1);
      if (scale == GridScale::Linear)
        g.push_back(lo + f * (hi - lo));
      else
        g.push_back(lo * std::pow(hi / lo, f));
    }
    return g;
  };

  PenaltyGrid grid;
  grid.lambda1 = span(l1max, n1);
  grid.lambda2 = span(l2max, n2);
  return grid;
}

}  // namespace sgfl
