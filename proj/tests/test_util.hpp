#pragma once

#include "sgfl/types.hpp"

#include <random>

namespace sgfl::testutil {

inline Mat random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

inline Vec random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// sparse vector with a few exact zeros, handy for sign-set cases
inline Vec random_sparse_vector(int n, double zero_frac, std::mt19937_64& rng) {
  Vec v = random_vector(n, rng);
  std::uniform_real_distribution<double> unif;
  for (int i = 0; i < n; ++i)
    if (unif(rng) < zero_frac) v[i] = 0.0;
  return v;
}

inline Dataset random_dataset(int T, int d, int p, std::mt19937_64& rng) {
  Dataset data;
  data.T = T;
  data.d = d;
  data.p = p;
  for (int t = 0; t < T; ++t) {
    data.X.push_back(random_matrix(d, p, rng));
    data.y.push_back(random_vector(d, rng));
  }
  return data;
}

// stack a dataset segment [a, b) into one tall regression problem
inline std::pair<Mat, Vec> stack_segment(const Dataset& data, int a, int b) {
  Mat A(static_cast<Eigen::Index>(b - a) * data.d, data.p);
  Vec y(static_cast<Eigen::Index>(b - a) * data.d);
  for (int t = a; t < b; ++t) {
    A.middleRows(static_cast<Eigen::Index>(t - a) * data.d, data.d) = data.design(t);
    y.segment(static_cast<Eigen::Index>(t - a) * data.d, data.d) = data.y[static_cast<size_t>(t)];
  }
  return {std::move(A), std::move(y)};
}

}  // namespace sgfl::testutil
