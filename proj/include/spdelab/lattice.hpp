#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spdelab/levy.hpp"
#include "spdelab/operator.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

/// Which |k|^2 the lattice symbol uses at grid momenta.
enum class SymbolMode {
  continuum,  ///< k_j = 2 pi n_j / (N eps)
  discrete,   ///< k_j replaced by (2/eps) sin(k_j eps / 2)
};

SymbolMode symbol_mode_from_name(const std::string& name);
std::string symbol_mode_name(SymbolMode mode);

/// Periodic hypercubic lattice with Npts sites of spacing eps per dimension.
struct LatticeSpec {
  int d = 2;
  int npts = 64;
  double spacing = 0.25;

  void validate() const;

  std::size_t sites() const;
  double cell_volume() const;
  double volume() const;
  double length() const { return npts * spacing; }

  /// Grid momentum for a signed mode number n (any integer; not reduced).
  double momentum(int n) const;
  /// Momentum vector of a signed mode vector, optionally mapped through the
  /// discrete-Laplacian symbol.
  Eigen::VectorXd momentum(std::span<const int> mode, SymbolMode symbol = SymbolMode::continuum) const;

  /// Flat storage index of a mode vector, reduced modulo Npts.
  std::size_t mode_index(std::span<const int> mode) const;
  /// Signed mode vector (entries in [-Npts/2, Npts/2 - 1]) of a flat index.
  std::vector<int> signed_mode(std::size_t index) const;
  /// Flat index of the mode -n.
  std::size_t partner_index(std::size_t index) const;
};

/// Q_E at the grid momentum of `mode`, averaged over the sign of every
/// coordinate sitting at the Nyquist mode Npts/2. Such a mode is its own
/// partner under k -> -k, so only the part of Q_E even in that coordinate
/// is compatible with a real field.
Eigen::MatrixXd lattice_numerator(const OperatorSpec& op, const LatticeSpec& lat, std::span<const int> mode,
                                  SymbolMode symbol = SymbolMode::continuum);
/// lattice_numerator times G(|k|^2): the inverse symbol used on the grid.
Eigen::MatrixXd lattice_symbol_inverse(const OperatorSpec& op, const LatticeSpec& lat, std::span<const int> mode,
                                       SymbolMode symbol = SymbolMode::continuum);

/// One lattice realization: L values per site (position space, real) or per
/// mode (momentum space, Hermitian). Storage is site-major, components
/// interleaved: values[site * L + alpha].
struct FieldSample {
  enum class Space { position, momentum };

  LatticeSpec lattice;
  int L = 1;
  Space space = Space::position;
  std::vector<std::complex<double>> values;

  FieldSample() = default;
  FieldSample(const LatticeSpec& lat, int L, Space space);

  std::complex<double>& at(std::size_t site, int alpha) {
    return values[site * static_cast<std::size_t>(L) + static_cast<std::size_t>(alpha)];
  }
  std::complex<double> at(std::size_t site, int alpha) const {
    return values[site * static_cast<std::size_t>(L) + static_cast<std::size_t>(alpha)];
  }

  /// Largest |Im| over sites (position space) relative to the largest |value|.
  double max_relative_imag() const;
  /// Largest |v(-k) - conj v(k)| relative to the largest |v| (momentum space).
  double max_relative_hermitian_defect() const;
};

/// Density-convention DFT on a lattice: A(k) = eps^d sum_x A_x e^{-i k.x},
/// inverse A_x = V^-1 sum_k A(k) e^{i k.x}. Thread-safe to execute.
class LatticeFft {
 public:
  LatticeFft(const LatticeSpec& lat, int L);
  ~LatticeFft();
  LatticeFft(const LatticeFft&) = delete;
  LatticeFft& operator=(const LatticeFft&) = delete;

  void forward(std::span<std::complex<double>> data) const;
  void backward(std::span<std::complex<double>> data) const;

 private:
  LatticeSpec lat_;
  int L_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

FieldSample to_momentum(const FieldSample& field);
FieldSample to_position(const FieldSample& field);

/// Forces exact Hermitian symmetry v(-k) = conj v(k) on a momentum field.
void hermitize(FieldSample& field);

FieldSample sample_noise_F(const LevySpec& levy, const LatticeSpec& lat, Rng& rng);
FieldSample sample_noise_Fg(const LevySpec& levy, const OperatorSpec& op, const LatticeSpec& lat,
                            Rng& rng, SymbolMode symbol = SymbolMode::continuum);

/// Solves D A = noise mode-wise; returns the position-space solution.
FieldSample solve_spde(const OperatorSpec& op, const FieldSample& noise,
                       SymbolMode symbol = SymbolMode::continuum);
/// Same, returning the (Hermitized) momentum-space solution.
FieldSample solve_spde_modes(const OperatorSpec& op, const FieldSample& noise,
                             SymbolMode symbol = SymbolMode::continuum);

/// One requested moment: signed grid mode vectors k_1..k_n and components.
struct MomentTuple {
  std::vector<std::vector<int>> modes;
  std::vector<int> components;

  int order() const { return static_cast<int>(components.size()); }
};

struct MomentEstimate {
  MomentTuple tuple;
  bool truncated = false;
  std::complex<double> value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  std::int64_t n_samples = 0;
};

struct EstimatorOptions {
  std::int64_t n_samples = 1000;
  std::uint64_t master_seed = 1;
  int workers = 1;
  SymbolMode symbol = SymbolMode::continuum;
  int max_order = 8;
  /// Internal test mode: accept tuples whose modes do not sum to zero.
  bool allow_nonconserving = false;
};

/// Monte-Carlo estimates of E[prod_j A_{alpha_j}(k_j)] / V (plain) and the
/// corresponding truncated parts, two entries per tuple (plain first).
/// Standard errors use the infinitesimal jackknife over samples. Results are
/// bit-identical for any worker count.
std::vector<MomentEstimate> estimate_moments(const OperatorSpec& op, const LevySpec& levy,
                                             const LatticeSpec& lat,
                                             const std::vector<MomentTuple>& tuples,
                                             const EstimatorOptions& options);

/// Streams n_samples solution fields to `sink` in sample order.
void sample_solutions(const OperatorSpec& op, const LevySpec& levy, const LatticeSpec& lat,
                      std::int64_t n_samples, std::uint64_t master_seed, SymbolMode symbol,
                      const std::function<void(std::int64_t, const FieldSample&)>& sink);

}  // namespace spdelab
