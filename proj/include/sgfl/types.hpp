#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgfl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Time-varying regression data {X_t, y_t}, t = 0..T-1 (d x p designs,
/// length-d responses). A dataset built from the multivariate-response
/// model y_t = A_t x_t carries the factor vectors x_t so that kernels can
/// work in O(d*m) per time step instead of materializing X_t = x_t' (x) I_d.
struct Dataset {
  int T = 0;
  int d = 0;
  int p = 0;
  std::vector<Mat> X;  // empty when lifted
  std::vector<Vec> y;

  bool lifted = false;
  int m = 0;               // factor dimension, p == d*m when lifted
  std::vector<Vec> x_raw;  // length-m factors when lifted

  void validate() const;

  // X_t * beta
  Vec apply(int t, const Vec& beta) const;
  // X_t' * r
  Vec apply_t(int t, const Vec& r) const;
  // X_t' X_t * beta
  Vec gram_apply(int t, const Vec& beta) const;
  // X_t' X_t, materialized (lifted datasets expand the Kronecker structure)
  Mat gram(int t) const;
  // X_t' y_t
  Vec xty(int t) const;
  // dense X_t even for lifted datasets
  Mat design(int t) const;
};

/// Penalty parameters of the objective
///   1/2 sum ||y_t - X_t b_t||^2
///   + lambda1 sum (alpha ||b_t||_1 + (1-alpha)/2 ||b_t||^2)
///   + lambda2 sum w_t ||b_{t+1} - b_t||_2.
/// weights has T-1 entries; the boundary convention w_0 = w_T = 0 and
/// beta_0 = beta_{T+1} = 0 is applied by consumers.
struct PenaltyConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double alpha = 1.0;
  Vec weights;  // size T-1, all ones by default

  static PenaltyConfig make(double l1, double l2, int T, double a = 1.0) {
    PenaltyConfig pc;
    pc.lambda1 = l1;
    pc.lambda2 = l2;
    pc.alpha = a;
    pc.weights = Vec::Ones(std::max(T - 1, 0));
    return pc;
  }

  void validate(int T) const;

  double l1_scale() const { return lambda1 * alpha; }        // l1 threshold
  double ridge() const { return lambda1 * (1.0 - alpha); }   // folded quadratic
};

/// Partition of {0,..,T-1} into fusion chains. starts is strictly
/// increasing with starts[0] == 0; chain k covers [starts[k], end(k)).
/// Indices are 0-based internally; serialization shifts to 1-based.
struct Segmentation {
  int T = 0;
  std::vector<int> starts;

  static Segmentation single_chain(int T) { return Segmentation{T, {0}}; }
  static Segmentation all_blocks(int T);

  void validate() const;

  int num_chains() const { return static_cast<int>(starts.size()); }
  int begin(int k) const { return starts[static_cast<size_t>(k)]; }
  int end(int k) const {
    return k + 1 < num_chains() ? starts[static_cast<size_t>(k) + 1] : T;
  }
  int length(int k) const { return end(k) - begin(k); }
  int chain_of(int t) const;

  // chain starts other than 0, i.e. the times t with beta_{t-1} != beta_t
  std::vector<int> change_points() const {
    return {starts.begin() + 1, starts.end()};
  }

  bool operator==(const Segmentation& o) const = default;
};

/// Chain-wise coefficients: one representative p-vector per fusion chain,
/// so within-chain equality is exact by construction.
struct Solution {
  Segmentation seg;
  std::vector<Vec> beta;  // one per chain
  double objective = std::numeric_limits<double>::quiet_NaN();

  static Solution zeros(int T, int p) {
    Solution s;
    s.seg = Segmentation::single_chain(T);
    s.beta = {Vec::Zero(p)};
    return s;
  }
  static Solution from_dense(const Mat& dense);

  const Vec& block(int t) const { return beta[static_cast<size_t>(seg.chain_of(t))]; }
  Mat dense() const;  // p x T expansion

  // Merge adjacent chains whose representatives are bitwise identical.
  // Fusions only ever arise from exact assignments, so this never compares
  // with a tolerance.
  void canonicalize();

  void validate(int p) const;
};

struct TraceEntry {
  int iteration = 0;
  std::string stage;
  double objective = 0.0;
};

struct SolverReport {
  std::vector<TraceEntry> trace;
  double certificate_norm = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  std::map<std::string, int> stage_counts;
  double wall_time_s = 0.0;
  std::vector<std::string> flags;

  void record(const std::string& stage, double objective) {
    trace.push_back({static_cast<int>(trace.size()), stage, objective});
    ++stage_counts[stage];
  }
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace sgfl
