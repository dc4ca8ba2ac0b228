#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace coref {

// Row-major activations: one row per token, span or pair.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

inline void fill_uniform(Matrix& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
}

// Glorot/Xavier uniform for a fan_in x fan_out weight.
inline void fill_xavier(Matrix& m, std::mt19937_64& rng) {
  fill_uniform(m, std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols())), rng);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace coref
