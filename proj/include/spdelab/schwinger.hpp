#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "spdelab/lattice.hpp"
#include "spdelab/levy.hpp"
#include "spdelab/operator.hpp"

namespace spdelab {

/// Cumulant tensors keyed by order.
using CumulantSet = std::map<int, CumulantTensor>;

/// cumulant(levy, n) for n = 2..max_order.
CumulantSet cumulant_set(const LevySpec& levy, int max_order);

/// Arguments of a truncated Schwinger kernel in momentum space.
struct SchwingerKernelRequest {
  const OperatorSpec* op = nullptr;
  const CumulantSet* cumulants = nullptr;
  std::vector<Eigen::VectorXd> momenta;
  std::vector<int> components;
  /// Lattice callers decide conservation on integer modes and switch this off.
  bool enforce_conservation = true;

  int order() const { return static_cast<int>(components.size()); }
  void validate() const;
};

/// Density of the truncated n-point function with respect to
/// (2 pi)^d delta(sum k), in the convention A(k) = int A(x) e^{-ik.x} dx:
///   n = 2:  C^{b1 b2} Q_{a1 b1}(k1) Q_{a2 b2}(k2) G(k1) / prod m^{2 nu}
///   n >= 3: C^{b..} prod_j Q_{aj bj}(kj) G(kj)
/// with G(k) = prod_l (|k|^2 + m_l^2)^{-nu_l}.
std::complex<double> truncated_kernel_momentum(const SchwingerKernelRequest& req);

/// Same kernel with every G(k_j) expanded into partial fractions. The sum
/// over mass assignments (l_1..l_n) is factorized leg by leg. n >= 3, no
/// dipoles.
std::complex<double> truncated_kernel_partial_fractions(const SchwingerKernelRequest& req);

using TruncatedEvaluator =
    std::function<std::complex<double>(const std::vector<Eigen::VectorXd>&, const std::vector<int>&)>;

/// sum over set partitions of prod over blocks of truncated(block); blocks of
/// size one vanish (zero mean).
std::complex<double> moments_from_truncated(const TruncatedEvaluator& truncated, int n,
                                            const std::vector<Eigen::VectorXd>& momenta,
                                            const std::vector<int>& components,
                                            int max_order = 8);

/// Truncated kernel at grid modes, with momenta mapped through `symbol` and
/// the numerator taken from lattice_numerator.
std::complex<double> lattice_truncated_kernel(const OperatorSpec& op, const CumulantSet& cumulants,
                                              const LatticeSpec& lat,
                                              const std::vector<std::vector<int>>& modes,
                                              const std::vector<int>& components,
                                              SymbolMode symbol = SymbolMode::continuum);

/// Plain moment density E[prod A(k_j)] / V on the lattice: blocks whose modes
/// do not sum to zero modulo Npts vanish, and each extra block carries a
/// factor V.
std::complex<double> lattice_moment_density(const OperatorSpec& op, const CumulantSet& cumulants,
                                            const LatticeSpec& lat,
                                            const std::vector<std::vector<int>>& modes,
                                            const std::vector<int>& components,
                                            SymbolMode symbol = SymbolMode::continuum,
                                            int max_order = 8);

/// Periodic grid for position-space transforms. Zero means automatic: box
/// 32 / min(1, m_min), and the largest power of two with npts^d <= 2^20.
struct PositionGrid {
  double box_length = 0.0;
  int npts = 0;
};

/// Position-space two-point matrix S_2(x) from the n = 2 kernel: one inverse
/// FFT of the tabulated kernel, then tensor-product cubic interpolation
/// between grid sites. Requires even Q_E; x = 0 needs an integrable kernel.
std::vector<Eigen::MatrixXd> two_point_position(const OperatorSpec& op, const CumulantSet& cumulants,
                                                const std::vector<Eigen::VectorXd>& points,
                                                const PositionGrid& grid = {});

/// Green function of (-Laplacian + m^2) in R^d at distance r.
double scalar_green_position(int d, double mass, double r);

/// Exponential decay rate of |S_2| along the first axis between r_min and
/// r_max, after removing the r^{-(d-1)/2} prefactor of Yukawa-type decay.
double two_point_decay_rate(const OperatorSpec& op, const CumulantSet& cumulants, double r_min,
                            double r_max, const PositionGrid& grid = {});

}  // namespace spdelab
