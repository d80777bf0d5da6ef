#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "spdelab/rng.hpp"
#include "spdelab/rotation.hpp"
#include "spdelab/tensor.hpp"

namespace spdelab {

/// Jump measure lambda * (uniform probability on the radius-r sphere in R^L).
struct SphereComponent {
  double radius = 1.0;
  double weight = 1.0;
};

/// Jump measure (lambda/2) * (delta_s + delta_{-s}).
struct PairComponent {
  Eigen::VectorXd vector;
  double weight = 1.0;
};

using JumpComponent = std::variant<SphereComponent, PairComponent>;

/// Levy triplet of a zero-mean, symmetric infinitely divisible law on R^L.
struct LevySpec {
  int L = 1;
  Eigen::VectorXd drift;
  Eigen::MatrixXd gauss_sigma;
  std::vector<JumpComponent> jumps;

  /// Pure Gaussian spec with covariance sigma^2.
  static LevySpec gaussian(const Eigen::MatrixXd& sigma);

  /// Throws Error{validation|invariant} naming the broken condition.
  void validate() const;
  bool has_jumps() const noexcept { return !jumps.empty(); }
};

/// E[exp(i u s_1)] for s uniform on the unit sphere S^{L-1}; even in u.
double sphere_characteristic(int L, double u);

std::complex<double> evaluate_psi(const LevySpec& spec, std::span<const double> t);
std::complex<double> evaluate_psi(const LevySpec& spec, const Eigen::VectorXd& t);

/// (-i)^n d^n psi / dt_{b1}..dt_{bn} at t = 0, in closed form.
CumulantTensor cumulant(const LevySpec& spec, int n);

/// PSD square root of cumulant(spec, 2).
Eigen::MatrixXd sigma_bar(const LevySpec& spec);

/// Draws infinitely divisible vectors with characteristic function
/// exp(v psi(t)). Precomputes the per-volume rates once; cheap to copy.
class IncrementSampler {
 public:
  IncrementSampler(const LevySpec& spec, double cell_volume);

  void draw(Rng& rng, std::span<double> out) const;
  int dim() const noexcept { return L_; }

 private:
  int L_;
  Eigen::MatrixXd scaled_sigma_;
  bool gaussian_ = false;
  struct Jump {
    bool sphere;
    double radius;
    Eigen::VectorXd vector;
    double mean_count;
  };
  std::vector<Jump> jumps_;
};

Eigen::VectorXd sample_site_increment(const LevySpec& spec, double cell_volume, Rng& rng);

/// Checks |psi(tau(g) t) - psi(t)| <= tolerance at random (g, t).
CovarianceReport check_levy_invariance(const LevySpec& spec, const RotationSampler& repr,
                                       int n_samples, std::uint64_t seed = 1,
                                       double tolerance = 1e-10);

}  // namespace spdelab
