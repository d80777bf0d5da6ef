#pragma once

#include <Eigen/Dense>
#include <string>

#include "spdelab/rng.hpp"

namespace spdelab {

/// Haar-random element of SO(d).
Eigen::MatrixXd random_rotation(int d, Rng& rng);

/// A group element g in SO(d) together with its image tau(g) in O(L).
struct RotationPair {
  Eigen::MatrixXd g;
  Eigen::MatrixXd tau;
};

/// Draws (g, tau(g)) for the internal-symmetry representations we support:
/// the trivial one (tau = identity on R^L) and the defining one (L = d, tau = g).
class RotationSampler {
 public:
  enum class Kind { trivial, defining };

  RotationSampler(Kind kind, int d, int L);

  static RotationSampler from_name(const std::string& name, int d, int L);

  Kind kind() const noexcept { return kind_; }
  std::string name() const;
  int d() const noexcept { return d_; }
  int L() const noexcept { return L_; }

  RotationPair sample(Rng& rng) const;

 private:
  Kind kind_;
  int d_;
  int L_;
};

}  // namespace spdelab

namespace spdelab {

/// Outcome of a randomized symmetry check: the largest violation seen and the
/// group element / argument that produced it.
struct CovarianceReport {
  bool passed = true;
  double worst_violation = 0.0;
  double tolerance = 0.0;
  int n_samples = 0;
  Eigen::MatrixXd witness_g;
  Eigen::MatrixXd witness_tau;
  Eigen::VectorXd witness_argument;
};

}  // namespace spdelab
