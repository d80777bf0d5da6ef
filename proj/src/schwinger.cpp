#include "spdelab/schwinger.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "spdelab/contraction.hpp"
#include "spdelab/error.hpp"
#include "spdelab/lattice.hpp"
#include "spdelab/partitions.hpp"

namespace spdelab {

namespace {

bool conserves(const std::vector<Eigen::VectorXd>& momenta, double tol = 1e-12) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(momenta.front().size());
  double scale = 1.0;
  for (const auto& k : momenta) {
    sum += k;
    scale = std::max(scale, k.cwiseAbs().maxCoeff());
  }
  return sum.cwiseAbs().maxCoeff() <= tol * scale;
}

const CumulantTensor& cumulant_of(const CumulantSet& set, int n, int L) {
  const auto it = set.find(n);
  require(it != set.end(), ErrorCode::validation,
          "no cumulant tensor of order " + std::to_string(n) + " supplied");
  require(it->second.order() == n && it->second.dim() == L, ErrorCode::validation,
          "cumulant tensor of order " + std::to_string(n) + " has the wrong shape");
  return it->second;
}

std::vector<Eigen::MatrixXd> leg_symbols(const OperatorSpec& op,
                                         const std::vector<Eigen::VectorXd>& momenta) {
  std::vector<Eigen::MatrixXd> legs;
  legs.reserve(momenta.size());
  for (const auto& k : momenta) legs.push_back(op.q_e.evaluate(k));
  return legs;
}

// Growth exponent of the two-point kernel at large |k|: K ~ |k|^{-decay}.
int two_point_decay(const OperatorSpec& op) {
  return 2 * op.total_multiplicity() - 2 * op.q_e.degree();
}

}  // namespace

CumulantSet cumulant_set(const LevySpec& levy, int max_order) {
  CumulantSet set;
  for (int n = 2; n <= max_order; ++n) set.emplace(n, cumulant(levy, n));
  return set;
}

void SchwingerKernelRequest::validate() const {
  require(op != nullptr && cumulants != nullptr, ErrorCode::validation,
          "kernel request needs an operator and cumulants");
  op->validate();
  const int n = order();
  require(n >= 2, ErrorCode::validation, "kernel order must be >= 2");
  require(momenta.size() == components.size(), ErrorCode::validation,
          "kernel request needs one momentum per component");
  for (const auto& k : momenta)
    require(k.size() == op->d, ErrorCode::validation, "kernel momenta must have d entries");
  for (int a : components)
    require(a >= 0 && a < op->L, ErrorCode::validation, "kernel component out of range");
  if (enforce_conservation)
    require(conserves(momenta), ErrorCode::validation, "kernel momenta must sum to zero");
  cumulant_of(*cumulants, n, op->L);
}

namespace {

// Kernel from per-leg numerator matrices and squared momenta.
double kernel_from_legs(const OperatorSpec& op, const CumulantTensor& c, const std::vector<Eigen::MatrixXd>& legs,
                        const std::vector<double>& k2, const std::vector<int>& components) {
  const double value = contract_legs<double>(c, legs, components);
  if (legs.size() == 2) return value * green_factor(op, k2[0]) / op.mass_normalization();
  double g = 1.0;
  for (double t : k2) g *= green_factor(op, t);
  return value * g;
}

}  // namespace

std::complex<double> truncated_kernel_momentum(const SchwingerKernelRequest& req) {
  req.validate();
  const OperatorSpec& op = *req.op;
  const CumulantTensor& c = cumulant_of(*req.cumulants, req.order(), op.L);
  std::vector<double> k2;
  for (const auto& k : req.momenta) k2.push_back(k.squaredNorm());
  return kernel_from_legs(op, c, leg_symbols(op, req.momenta), k2, req.components);
}

std::complex<double> truncated_kernel_partial_fractions(const SchwingerKernelRequest& req) {
  req.validate();
  require(req.order() >= 3, ErrorCode::validation, "partial-fraction route needs order >= 3");
  const OperatorSpec& op = *req.op;
  const std::vector<double> b = partial_fractions(op);
  const CumulantTensor& c = cumulant_of(*req.cumulants, req.order(), op.L);
  const double value = contract_legs<double>(c, leg_symbols(op, req.momenta), req.components);

  // The sum over mass assignments l_1..l_n factorizes leg by leg. Summing the
  // N^n products term by term loses up to (N |k|^2)^n digits to cancellation.
  double total = 1.0;
  for (const auto& k : req.momenta) total *= green_factor_partial(op.masses_squared, b, k.squaredNorm());
  return value * total;
}

std::complex<double> moments_from_truncated(const TruncatedEvaluator& truncated, int n,
                                            const std::vector<Eigen::VectorXd>& momenta,
                                            const std::vector<int>& components, int max_order) {
  require(n >= 1, ErrorCode::validation, "moment order must be >= 1");
  require(static_cast<int>(momenta.size()) == n && static_cast<int>(components.size()) == n,
          ErrorCode::validation, "moment needs n momenta and n components");
  return moments_from_truncated(
      n,
      [&](BlockMask block) -> std::complex<double> {
        std::vector<Eigen::VectorXd> ks;
        std::vector<int> as;
        for (int j = 0; j < n; ++j)
          if (block & (BlockMask{1} << j)) {
            ks.push_back(momenta[static_cast<std::size_t>(j)]);
            as.push_back(components[static_cast<std::size_t>(j)]);
          }
        if (ks.size() == 1) return 0.0;
        return truncated(ks, as);
      },
      max_order);
}

std::complex<double> lattice_truncated_kernel(const OperatorSpec& op, const CumulantSet& cumulants,
                                              const LatticeSpec& lat,
                                              const std::vector<std::vector<int>>& modes,
                                              const std::vector<int>& components, SymbolMode symbol) {
  SchwingerKernelRequest req{&op, &cumulants, {}, components, false};
  for (const auto& mode : modes) req.momenta.push_back(lat.momentum(mode, symbol));
  req.validate();
  std::vector<Eigen::MatrixXd> legs;
  std::vector<double> k2;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    legs.push_back(lattice_numerator(op, lat, modes[j], symbol));
    k2.push_back(req.momenta[j].squaredNorm());
  }
  return kernel_from_legs(op, cumulant_of(cumulants, req.order(), op.L), legs, k2, components);
}

std::complex<double> lattice_moment_density(const OperatorSpec& op, const CumulantSet& cumulants,
                                            const LatticeSpec& lat,
                                            const std::vector<std::vector<int>>& modes,
                                            const std::vector<int>& components, SymbolMode symbol,
                                            int max_order) {
  const int n = static_cast<int>(components.size());
  require(static_cast<int>(modes.size()) == n, ErrorCode::validation, "moment needs one mode per component");
  const double volume = lat.volume();
  const auto block_value = [&](BlockMask block) -> std::complex<double> {
    std::vector<std::vector<int>> ms;
    std::vector<int> as;
    std::vector<long> sum(static_cast<std::size_t>(lat.d), 0);
    for (int j = 0; j < n; ++j)
      if (block & (BlockMask{1} << j)) {
        const auto& mode = modes[static_cast<std::size_t>(j)];
        ms.push_back(mode);
        as.push_back(components[static_cast<std::size_t>(j)]);
        for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += mode[c];
      }
    if (ms.size() == 1) return 0.0;
    for (long s : sum)
      if (s % lat.npts != 0) return 0.0;
    return volume * lattice_truncated_kernel(op, cumulants, lat, ms, as, symbol);
  };
  return moments_from_truncated(n, block_value, max_order) / volume;
}

std::vector<Eigen::MatrixXd> two_point_position(const OperatorSpec& op, const CumulantSet& cumulants,
                                                const std::vector<Eigen::VectorXd>& points,
                                                const PositionGrid& grid) {
  op.validate();
  require(op.q_e.is_even(), ErrorCode::unsupported_operator,
          "position two-point needs an even Q_E (real, symmetric kernel)");
  const int decay = two_point_decay(op);
  for (const auto& x : points) {
    require(x.size() == op.d, ErrorCode::validation, "position must have d entries");
    require(decay > 0, ErrorCode::singular_configuration,
            "two-point kernel does not decay in momentum space; S_2(x) is not a function");
    require(!x.isZero(0.0) || decay > op.d, ErrorCode::singular_configuration,
            "two-point kernel is not integrable at x = 0 for this d and Q_E degree");
  }
  const CumulantTensor& c2 = cumulant_of(cumulants, 2, op.L);

  const double m_min = std::sqrt(*std::min_element(op.masses_squared.begin(), op.masses_squared.end()));
  LatticeSpec lat;
  lat.d = op.d;
  // About 2M grid points at most; d >= 3 trades box size for resolution.
  lat.npts = grid.npts > 0 ? grid.npts : 1 << std::min(12, 21 / op.d);
  const double box = grid.box_length > 0 ? grid.box_length : (op.d >= 3 ? 16.0 : 32.0) / std::min(1.0, m_min);
  lat.spacing = box / lat.npts;
  lat.validate();

  const std::size_t sites = lat.sites();
  const auto L = static_cast<std::size_t>(op.L);
  FieldSample table(lat, op.L * op.L, FieldSample::Space::momentum);
  const double norm = op.mass_normalization();
  for (std::size_t i = 0; i < sites; ++i) {
    const std::vector<int> mode = lat.signed_mode(i);
    const Eigen::VectorXd k = lat.momentum(mode);
    const Eigen::MatrixXd q = op.q_e.evaluate(k);
    const double g = green_factor(op, k.squaredNorm()) / norm;
    // Even Q_E: Q(-k) = Q(k), so the kernel matrix is Q C Q^T.
    for (std::size_t a1 = 0; a1 < L; ++a1)
      for (std::size_t a2 = 0; a2 < L; ++a2) {
        double s = 0.0;
        for (int b1 = 0; b1 < op.L; ++b1)
          for (int b2 = 0; b2 < op.L; ++b2)
            s += c2(std::array<int, 2>{b1, b2}) * q(static_cast<int>(a1), b1) * q(static_cast<int>(a2), b2);
        table.values[i * L * L + a1 * L + a2] = s * g;
      }
  }
  const FieldSample s2 = to_position(table);

  // Cubic Lagrange interpolation on the periodic grid, stencil i-1..i+2.
  std::vector<Eigen::MatrixXd> out;
  out.reserve(points.size());
  const auto d = static_cast<std::size_t>(op.d);
  const auto N = static_cast<std::size_t>(lat.npts);
  std::vector<std::array<double, 4>> weights(d);
  std::vector<long> base(d);
  for (const auto& x : points) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = x(static_cast<Eigen::Index>(j)) / lat.spacing;
      const double fl = std::floor(u);
      const double t = u - fl;
      base[j] = static_cast<long>(fl) - 1;
      weights[j] = {-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2,
                    -(t + 1) * t * (t - 2) / 2, (t + 1) * t * (t - 1) / 6};
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(op.L, op.L);
    const std::size_t stencil = std::size_t{1} << (2 * d);
    for (std::size_t s = 0; s < stencil; ++s) {
      double w = 1.0;
      std::size_t site = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t o = (s >> (2 * j)) & 3;
        w *= weights[j][o];
        const long idx = base[j] + static_cast<long>(o);
        const auto wrapped = static_cast<std::size_t>(((idx % static_cast<long>(N)) + static_cast<long>(N)) %
                                                      static_cast<long>(N));
        site = site * N + wrapped;
      }
      if (w == 0.0) continue;
      for (std::size_t a1 = 0; a1 < L; ++a1)
        for (std::size_t a2 = 0; a2 < L; ++a2)
          m(static_cast<Eigen::Index>(a1), static_cast<Eigen::Index>(a2)) +=
              w * s2.values[site * L * L + a1 * L + a2].real();
    }
    out.push_back(std::move(m));
  }
  return out;
}

double scalar_green_position(int d, double mass, double r) {
  require(d >= 1 && mass > 0 && r > 0, ErrorCode::validation,
          "Green function needs d >= 1, m > 0, r > 0");
  const double nu = 0.5 * d - 1.0;
  return std::pow(2 * std::numbers::pi, -0.5 * d) * std::pow(mass / r, nu) *
         std::cyl_bessel_k(std::abs(nu), mass * r);
}

double two_point_decay_rate(const OperatorSpec& op, const CumulantSet& cumulants, double r_min,
                            double r_max, const PositionGrid& grid) {
  require(0 < r_min && r_min < r_max, ErrorCode::validation, "decay window needs 0 < r_min < r_max");
  constexpr int samples = 31;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> radii;
  for (int i = 0; i < samples; ++i) {
    const double r = r_min + (r_max - r_min) * i / (samples - 1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(op.d);
    x(0) = r;
    points.push_back(x);
    radii.push_back(r);
  }
  const auto values = two_point_position(op, cumulants, points, grid);
  // Least-squares slope of log(|S| r^{(d-1)/2}) against r.
  double sr = 0, sy = 0, srr = 0, sry = 0;
  for (int i = 0; i < samples; ++i) {
    const double mag = values[static_cast<std::size_t>(i)].norm();
    require(mag > 0, ErrorCode::numeric, "two-point function vanishes inside the decay window");
    const double r = radii[static_cast<std::size_t>(i)];
    const double y = std::log(mag) + 0.5 * (op.d - 1) * std::log(r);
    sr += r;
    sy += y;
    srr += r * r;
    sry += r * y;
  }
  const double slope = (samples * sry - sr * sy) / (samples * srr - sr * sr);
  return -slope;
}

}  // namespace spdelab
