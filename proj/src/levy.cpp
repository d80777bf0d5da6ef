#include "spdelab/levy.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <array>
#include <map>
#include <numbers>
#include <sstream>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

std::string where(std::size_t i) {
  std::ostringstream os;
  os << "levy.jumps[" << i << "]";
  return os.str();
}

// Normalization of the polar-angle density sin^{L-2}(theta) on [0, pi].
double polar_norm(int L) {
  return std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (L - 1)) / std::tgamma(0.5 * L);
}

// E[s_{b1}..s_{b2m}] for s uniform on the unit sphere in R^L, as a function
// of the index multiset: 1/(L(L+2)..(L+2m-2)) times the number of perfect
// pairings compatible with the indices.
double sphere_moment(int L, std::span<const int> sorted) {
  const auto n = static_cast<int>(sorted.size());
  if (n % 2 != 0) return 0.0;
  double pairings = 1.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto count = static_cast<int>(j - i);
    if (count % 2 != 0) return 0.0;
    for (int k = count - 1; k > 1; k -= 2) pairings *= k;
    i = j;
  }
  double denom = 1.0;
  for (int k = 0; k < n / 2; ++k) denom *= L + 2 * k;
  return pairings / denom;
}

}  // namespace

LevySpec LevySpec::gaussian(const Eigen::MatrixXd& sigma) {
  LevySpec s;
  s.L = static_cast<int>(sigma.rows());
  s.drift = Eigen::VectorXd::Zero(s.L);
  s.gauss_sigma = sigma;
  return s;
}

void LevySpec::validate() const {
  require(L >= 1, ErrorCode::validation, "levy.L must be a positive integer");
  require(drift.size() == L, ErrorCode::validation, "levy.drift must have L entries");
  require(gauss_sigma.rows() == L && gauss_sigma.cols() == L, ErrorCode::validation,
          "levy.sigma must be an L x L matrix");
  require(drift.isZero(0.0), ErrorCode::invariant,
          "levy.drift must vanish (zero-mean condition)");
  require((gauss_sigma - gauss_sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          ErrorCode::invariant, "levy.sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gauss_sigma);
  require(es.eigenvalues().minCoeff() >= -1e-12, ErrorCode::invariant,
          "levy.sigma must be positive semi-definite");
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    if (const auto* sph = std::get_if<SphereComponent>(&jumps[i])) {
      require(sph->radius > 0, ErrorCode::invariant, where(i) + ".radius must be > 0");
      require(sph->weight > 0, ErrorCode::invariant, where(i) + ".weight must be > 0");
    } else {
      const auto& pair = std::get<PairComponent>(jumps[i]);
      require(pair.vector.size() == L, ErrorCode::validation, where(i) + ".vector must have L entries");
      require(pair.vector.norm() > 0, ErrorCode::invariant, where(i) + ".vector must be nonzero");
      require(pair.weight > 0, ErrorCode::invariant, where(i) + ".weight must be > 0");
    }
  }
}

double sphere_characteristic(int L, double u) {
  if (L == 1) return std::cos(u);
  if (u == 0.0) return 1.0;
  using boost::math::quadrature::gauss;
  // Composite 20-point Gauss-Legendre in the polar angle. Each panel spans
  // at most one period of the oscillation, which keeps the error near 1e-15
  // and the rule fixed for a given |u|.
  const int panels = 1 + static_cast<int>(std::abs(u) / 2.0);
  const double width = std::numbers::pi / panels;
  auto integrand = [&](double theta) {
    return std::cos(u * std::cos(theta)) * std::pow(std::sin(theta), L - 2);
  };
  double total = 0.0;
  for (int p = 0; p < panels; ++p)
    total += gauss<double, 20>::integrate(integrand, p * width, (p + 1) * width);
  return total / polar_norm(L);
}

std::complex<double> evaluate_psi(const LevySpec& spec, std::span<const double> t) {
  spec.validate();
  require(static_cast<int>(t.size()) == spec.L, ErrorCode::validation, "psi argument must have L entries");
  const Eigen::Map<const Eigen::VectorXd> tv(t.data(), spec.L);
  const Eigen::VectorXd st = spec.gauss_sigma * tv;
  double re = -0.5 * st.squaredNorm();
  const double im = spec.drift.dot(tv);
  for (const auto& jump : spec.jumps) {
    if (const auto* sph = std::get_if<SphereComponent>(&jump)) {
      re += sph->weight * (sphere_characteristic(spec.L, sph->radius * tv.norm()) - 1.0);
    } else {
      const auto& pair = std::get<PairComponent>(jump);
      re += pair.weight * (std::cos(tv.dot(pair.vector)) - 1.0);
    }
  }
  return {re, im};
}

std::complex<double> evaluate_psi(const LevySpec& spec, const Eigen::VectorXd& t) {
  return evaluate_psi(spec, std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
}

CumulantTensor cumulant(const LevySpec& spec, int n) {
  require(n >= 1, ErrorCode::validation, "cumulant order must be >= 1");
  spec.validate();
  if (n % 2 == 1) return CumulantTensor(n, spec.L);
  const Eigen::MatrixXd gauss2 = spec.gauss_sigma * spec.gauss_sigma;
  return CumulantTensor::from_multiset(n, spec.L, [&](std::span<const int> idx) {
    double value = n == 2 ? gauss2(idx[0], idx[1]) : 0.0;
    for (const auto& jump : spec.jumps) {
      if (const auto* sph = std::get_if<SphereComponent>(&jump)) {
        value += sph->weight * std::pow(sph->radius, n) * sphere_moment(spec.L, idx);
      } else {
        const auto& pair = std::get<PairComponent>(jump);
        double prod = pair.weight;
        for (int b : idx) prod *= pair.vector(b);
        value += prod;
      }
    }
    return value;
  });
}

Eigen::MatrixXd sigma_bar(const LevySpec& spec) {
  const CumulantTensor c2 = cumulant(spec, 2);
  Eigen::MatrixXd m(spec.L, spec.L);
  for (int i = 0; i < spec.L; ++i)
    for (int j = 0; j < spec.L; ++j) m(i, j) = c2(std::array<int, 2>{i, j});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
    fail(ErrorCode::internal, "second cumulant is not positive semi-definite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

IncrementSampler::IncrementSampler(const LevySpec& spec, double cell_volume) : L_(spec.L) {
  spec.validate();
  require(cell_volume > 0, ErrorCode::validation, "cell volume must be > 0");
  scaled_sigma_ = std::sqrt(cell_volume) * spec.gauss_sigma;
  gaussian_ = !spec.gauss_sigma.isZero(0.0);
  for (const auto& jump : spec.jumps) {
    if (const auto* sph = std::get_if<SphereComponent>(&jump)) {
      jumps_.push_back({true, sph->radius, {}, cell_volume * sph->weight});
    } else {
      const auto& pair = std::get<PairComponent>(jump);
      jumps_.push_back({false, 0.0, pair.vector, cell_volume * pair.weight});
    }
  }
}

void IncrementSampler::draw(Rng& rng, std::span<double> out) const {
  Eigen::Map<Eigen::VectorXd> x(out.data(), L_);
  x.setZero();
  std::normal_distribution<double> normal;
  if (gaussian_) {
    Eigen::VectorXd z(L_);
    for (int i = 0; i < L_; ++i) z(i) = normal(rng);
    x.noalias() = scaled_sigma_ * z;
  }
  std::uniform_int_distribution<int> coin(0, 1);
  for (const auto& jump : jumps_) {
    const int count = std::poisson_distribution<int>(jump.mean_count)(rng);
    for (int c = 0; c < count; ++c) {
      if (jump.sphere) {
        if (L_ == 1) {
          x(0) += coin(rng) ? jump.radius : -jump.radius;
          continue;
        }
        Eigen::VectorXd dir(L_);
        double norm = 0.0;
        while (norm == 0.0) {
          for (int i = 0; i < L_; ++i) dir(i) = normal(rng);
          norm = dir.norm();
        }
        x += (jump.radius / norm) * dir;
      } else {
        if (coin(rng)) x += jump.vector;
        else x -= jump.vector;
      }
    }
  }
}

Eigen::VectorXd sample_site_increment(const LevySpec& spec, double cell_volume, Rng& rng) {
  Eigen::VectorXd x(spec.L);
  IncrementSampler(spec, cell_volume).draw(rng, std::span<double>(x.data(), static_cast<std::size_t>(spec.L)));
  return x;
}

CovarianceReport check_levy_invariance(const LevySpec& spec, const RotationSampler& repr,
                                       int n_samples, std::uint64_t seed, double tolerance) {
  spec.validate();
  require(repr.L() == spec.L, ErrorCode::validation, "representation dimension must equal levy.L");
  CovarianceReport report;
  report.tolerance = tolerance;
  report.n_samples = n_samples;
  Rng rng = stream(seed, 0);
  std::normal_distribution<double> normal;
  for (int s = 0; s < n_samples; ++s) {
    const RotationPair rp = repr.sample(rng);
    Eigen::VectorXd t(spec.L);
    for (int i = 0; i < spec.L; ++i) t(i) = normal(rng);
    const Eigen::VectorXd rotated = rp.tau * t;
    const double violation = std::abs(evaluate_psi(spec, rotated) - evaluate_psi(spec, t));
    if (violation > report.worst_violation || s == 0) {
      report.worst_violation = violation;
      report.witness_g = rp.g;
      report.witness_tau = rp.tau;
      report.witness_argument = t;
    }
  }
  report.passed = report.worst_violation <= tolerance;
  return report;
}

}  // namespace spdelab
