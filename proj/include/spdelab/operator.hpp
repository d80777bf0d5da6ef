#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "spdelab/polynomial.hpp"
#include "spdelab/rotation.hpp"

namespace spdelab {

/// Covariant operator D given through its inverse symbol
///   D^-1(k) = Q_E(k) / prod_l (|k|^2 + m_l^2)^{nu_l}.
struct OperatorSpec {
  int d = 2;
  int L = 1;
  std::vector<double> masses_squared;
  std::vector<int> multiplicities;
  PolyMatrix<double> q_e;
  bool no_dipole = true;
  std::optional<RotationSampler> tau;

  /// Scalar field (L = 1, Q_E = 1) with simple poles at the given masses.
  static OperatorSpec scalar(int d, std::vector<double> masses_squared);
  /// Vector field with L = d and Q_E(k) = k k^T + c I.
  static OperatorSpec tensor(int d, std::vector<double> masses_squared, double c);

  void validate() const;

  int mass_count() const noexcept { return static_cast<int>(masses_squared.size()); }
  int total_multiplicity() const;
  /// Degree bound on Q_E: 2 (sum nu_l - 1).
  int kappa() const { return 2 * (total_multiplicity() - 1); }
  /// prod_l m_l^{2 nu_l}.
  double mass_normalization() const;
};

/// prod_l (|k|^2 + m_l^2)^{-nu_l} as a function of |k|^2.
double green_factor(const OperatorSpec& op, double k2);

Eigen::MatrixXd symbol_inverse(const OperatorSpec& op, std::span<const double> k);
Eigen::MatrixXd symbol_inverse(const OperatorSpec& op, const Eigen::VectorXd& k);

/// p(t) = prod (t + m_l^2)^{nu_l} / prod m_l^{2 nu_l} - 1, with p(0) = 0 exactly.
UniPoly p_polynomial(const OperatorSpec& op);

/// Residues b_l of 1/prod(t + m_l^2) = sum b_l/(t + m_l^2). Requires no dipoles.
/// Self-checks the identity at 100 pseudo-random t in [0, 100].
std::vector<double> partial_fractions(const OperatorSpec& op);

/// sum_l b_l / (t + m_l^2), the partial-fraction route to green_factor.
double green_factor_partial(const std::vector<double>& masses_squared,
                            const std::vector<double>& b, double t);

/// Verifies tau(g) Q_E(g^-1 k) tau(g)^-1 == Q_E(k) at random (g, k).
CovarianceReport check_Q_covariance(const OperatorSpec& op, int n_samples,
                                    std::uint64_t seed = 1, double tolerance = 1e-10);

}  // namespace spdelab
