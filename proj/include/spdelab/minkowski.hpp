#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/operator.hpp"
#include "spdelab/polynomial.hpp"
#include "spdelab/schwinger.hpp"

namespace spdelab {

using ComplexPolyMatrix = PolyMatrix<std::complex<double>>;

/// Q^M(k0, k) = Q_E(i k0, k): each coefficient times i^(power of k0).
ComplexPolyMatrix q_minkowski(const OperatorSpec& op);
/// The same substitution applied to an already complex matrix.
ComplexPolyMatrix q_minkowski(const ComplexPolyMatrix& q);

/// Minkowski square k0^2 - |k|^2 of (k0, k_1, .., k_{d-1}).
double minkowski_square(const Eigen::VectorXd& k);

/// Point on the mass shell: k0 = sign * sqrt(|k|^2 + m^2).
struct ShellPoint {
  double mass = 1.0;
  int sign = +1;
  Eigen::VectorXd spatial;

  ShellPoint() = default;
  ShellPoint(double mass, int sign, Eigen::VectorXd spatial);

  double energy() const;
  /// (k0, spatial) as a d-vector.
  Eigen::VectorXd momentum() const;
  /// |k^2 - m^2| relative to max(1, m^2).
  double shell_defect() const;
};

/// Boost along spatial axis `axis` with the given rapidity.
ShellPoint boost(const ShellPoint& p, double rapidity, int axis = 0);
Eigen::VectorXd boost(const Eigen::VectorXd& k, double rapidity, int axis = 0);

/// Gaussian packet f(k) = weights * exp(-|k - center|^2 / (2 width^2)) on R^d.
struct TestFunction {
  Eigen::VectorXd center;
  double width = 1.0;
  Eigen::VectorXcd weights;

  void validate(int d, int L) const;
  Eigen::VectorXcd operator()(const Eigen::VectorXd& k) const;
  /// Transform of the complex-conjugate function: k -> conj f(-k).
  TestFunction conjugate() const;
};

/// Smeared truncated two-point function
///   sum_l b_l / prod m^2  int dk / ((2 pi)^{d-1} 2 w_l)
///       f(-k)^T [Q^M(k) C Q^M(-k)^T] h(k),   k = (-w_l, k),
/// by adaptive Gauss-Kronrod quadrature to relative 1e-6 or better.
std::complex<double> wightman2_smear(const OperatorSpec& op, const CumulantSet& cumulants,
                                     const TestFunction& f, const TestFunction& h);

struct MonteCarloValue {
  std::complex<double> value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  std::int64_t n_samples = 0;
};

struct WightmanOptions {
  double regulator = 1e-6;
  std::int64_t n_samples = 20000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Smeared truncated n-point function, n >= 3: for every mass assignment and
/// every propagator leg j, legs i < j ride the negative-energy shell, legs
/// i > j the positive one, and k_j = -sum of the others enters through
/// -1/(k_j^2 - m^2 + i eps). Shell integrals are sampled from the packets.
MonteCarloValue wightman_n_smear(const OperatorSpec& op, const CumulantSet& cumulants,
                                 const std::vector<TestFunction>& fs, const WightmanOptions& options = {});

enum class LegLabel { in, loc, out };
LegLabel leg_label_from_name(const std::string& name);
std::string leg_label_name(LegLabel label);

struct KernelLeg {
  int component = 0;
  Eigen::VectorXd momentum;  ///< Minkowski d-vector
  LegLabel label = LegLabel::loc;
};

struct MinkowskiKernelRequest {
  const OperatorSpec* op = nullptr;
  const CumulantSet* cumulants = nullptr;
  std::vector<KernelLeg> legs;
  double regulator = 0.0;

  int order() const { return static_cast<int>(legs.size()); }
  void validate() const;
};

/// sum_b C^{b..} prod_j Q^M_{a_j b_j}(k_j).
std::complex<double> minkowski_contraction(const OperatorSpec& op, const CumulantSet& cumulants,
                                           const std::vector<KernelLeg>& legs);

/// Integrand of the term with propagator leg j, shell deltas stripped:
///   -Q^M_n sum_l prod b_l [prod_{i<j} on(-, m_{l_i})] / (k_j^2 - m_{l_j}^2 + i eps)
///   [prod_{i>j} on(+, m_{l_i})].
std::complex<double> wightman_term_kernel(const MinkowskiKernelRequest& req, int j);

/// Form-factor density: the sum over j of the term-j structure with leg j
/// replaced by -i pi (on+ - on-) for `in`, the propagator for `loc`, and
/// +i pi (on+ - on-) for `out`.
std::complex<double> form_factor_kernel(const MinkowskiKernelRequest& req);

/// Truncated S-matrix density: -2 pi i Q^M_n prod_j b_{l(j)}, where l(j) is
/// the mass of leg j. Incoming legs carry sign -, outgoing sign +.
std::complex<double> smatrix_kernel(const OperatorSpec& op, const CumulantSet& cumulants,
                                    const std::vector<ShellPoint>& incoming,
                                    const std::vector<ShellPoint>& outgoing,
                                    const std::vector<int>& components);

/// Elastic-type 2 -> 2 configuration: centre-of-mass energy `cm_energy`,
/// outgoing direction `direction` (unit spatial vector), then a boost of
/// rapidity `rapidity` along the first spatial axis.
struct TwoToTwo {
  std::vector<ShellPoint> incoming;
  std::vector<ShellPoint> outgoing;
};
TwoToTwo two_to_two(int d, const std::array<double, 2>& in_masses,
                    const std::array<double, 2>& out_masses, double cm_energy,
                    const Eigen::VectorXd& direction, double rapidity);

struct GramResult {
  Eigen::MatrixXcd matrix;
  Eigen::VectorXd eigenvalues;  ///< ascending
  double asymmetry = 0.0;       ///< max |G - G^H| / max |G|
};

/// G_ij = wightman2_smear(conj f_i, f_j), Hermitized.
GramResult gram_matrix(const OperatorSpec& op, const CumulantSet& cumulants,
                       const std::vector<TestFunction>& fs);

/// Two-point function at Euclidean x with x0 > 0 from the shell
/// representation: sum_l b_l / prod m^2 int dk/(2 pi)^{d-1} e^{i k.x}
/// e^{-w_l x0} / (2 w_l) [Q^M(w_l, k) C Q^M(-w_l, -k)^T].
Eigen::MatrixXcd two_point_from_shells(const OperatorSpec& op, const CumulantSet& cumulants,
                                       const Eigen::VectorXd& x);

}  // namespace spdelab
