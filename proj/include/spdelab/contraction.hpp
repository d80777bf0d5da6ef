#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "spdelab/tensor.hpp"

namespace spdelab {

/// sum_{b_1..b_n} C^{b_1..b_n} prod_j Q_j(alpha_j, b_j), where Q_j is the
/// symbol matrix evaluated at leg j's momentum.
template <typename T>
T contract_legs(const CumulantTensor& c,
                const std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>& legs,
                std::span<const int> components) {
  const int n = c.order();
  std::vector<int> beta(static_cast<std::size_t>(n));
  T total{};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double ci = c.at_flat(i);
    if (ci == 0.0) continue;
    c.unflatten(i, beta);
    T term = ci;
    for (int j = 0; j < n; ++j) {
      const auto js = static_cast<std::size_t>(j);
      term *= legs[js](components[js], beta[js]);
    }
    total += term;
  }
  return total;
}

/// sum_{b_1..b_n} C^{b_1..b_n} prod_j v_j(b_j).
template <typename T>
T contract_vectors(const CumulantTensor& c,
                   const std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>>& vectors) {
  const int n = c.order();
  std::vector<int> beta(static_cast<std::size_t>(n));
  T total{};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double ci = c.at_flat(i);
    if (ci == 0.0) continue;
    c.unflatten(i, beta);
    T term = ci;
    for (int j = 0; j < n; ++j) term *= vectors[static_cast<std::size_t>(j)](beta[static_cast<std::size_t>(j)]);
    total += term;
  }
  return total;
}

}  // namespace spdelab
