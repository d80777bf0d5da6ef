#include "spdelab/operator.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

OperatorSpec OperatorSpec::scalar(int d, std::vector<double> masses_squared) {
  OperatorSpec op;
  op.d = d;
  op.L = 1;
  op.multiplicities.assign(masses_squared.size(), 1);
  op.masses_squared = std::move(masses_squared);
  op.q_e = PolyMatrix<double>::identity(d, 1);
  op.tau = RotationSampler(RotationSampler::Kind::trivial, d, 1);
  return op;
}

OperatorSpec OperatorSpec::tensor(int d, std::vector<double> masses_squared, double c) {
  OperatorSpec op;
  op.d = d;
  op.L = d;
  op.multiplicities.assign(masses_squared.size(), 1);
  op.masses_squared = std::move(masses_squared);
  op.q_e = PolyMatrix<double>(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      MultiIndex mi(static_cast<std::size_t>(d), 0);
      mi[static_cast<std::size_t>(a)] += 1;
      mi[static_cast<std::size_t>(b)] += 1;
      op.q_e(a, b).add_term(mi, 1.0);
    }
    op.q_e(a, a).add_term(MultiIndex(static_cast<std::size_t>(d), 0), c);
  }
  op.tau = RotationSampler(RotationSampler::Kind::defining, d, d);
  return op;
}

int OperatorSpec::total_multiplicity() const {
  return std::accumulate(multiplicities.begin(), multiplicities.end(), 0);
}

double OperatorSpec::mass_normalization() const {
  double n = 1.0;
  for (std::size_t l = 0; l < masses_squared.size(); ++l)
    n *= std::pow(masses_squared[l], multiplicities[l]);
  return n;
}

void OperatorSpec::validate() const {
  require(d >= 1, ErrorCode::validation, "operator.d must be >= 1");
  require(L >= 1, ErrorCode::validation, "operator.L must be >= 1");
  require(!masses_squared.empty(), ErrorCode::validation, "operator.masses_squared must be non-empty");
  require(multiplicities.size() == masses_squared.size(), ErrorCode::validation,
          "operator.multiplicities must match operator.masses_squared in length");
  for (double m2 : masses_squared)
    require(std::isfinite(m2) && m2 > 0, ErrorCode::invariant,
            "operator.masses_squared: masses must be strictly positive");
  for (std::size_t i = 0; i < masses_squared.size(); ++i)
    for (std::size_t j = i + 1; j < masses_squared.size(); ++j)
      require(masses_squared[i] != masses_squared[j], ErrorCode::invariant,
              "operator.masses_squared: masses pairwise distinct");
  for (int nu : multiplicities)
    require(nu >= 1, ErrorCode::invariant, "operator.multiplicities must be positive integers");
  if (no_dipole)
    for (int nu : multiplicities)
      require(nu == 1, ErrorCode::invariant,
              "operator.multiplicities must all be 1 under the no-dipole condition");
  require(q_e.d() == d && q_e.L() == L, ErrorCode::validation,
          "operator.Q_E must be an L x L matrix of polynomials in d variables");
  require(q_e.degree() <= kappa(), ErrorCode::invariant,
          "operator.Q_E degree " + std::to_string(q_e.degree()) + " exceeds kappa = " +
              std::to_string(kappa()));
  if (tau)
    require(tau->d() == d && tau->L() == L, ErrorCode::validation,
            "operator.tau must act on R^d and R^L of this operator");
}

double green_factor(const OperatorSpec& op, double k2) {
  double g = 1.0;
  for (std::size_t l = 0; l < op.masses_squared.size(); ++l)
    g /= std::pow(k2 + op.masses_squared[l], op.multiplicities[l]);
  return g;
}

Eigen::MatrixXd symbol_inverse(const OperatorSpec& op, std::span<const double> k) {
  require(static_cast<int>(k.size()) == op.d, ErrorCode::validation, "momentum must have d entries");
  double k2 = 0.0;
  for (double x : k) k2 += x * x;
  return op.q_e.evaluate(k) * green_factor(op, k2);
}

Eigen::MatrixXd symbol_inverse(const OperatorSpec& op, const Eigen::VectorXd& k) {
  return symbol_inverse(op, std::span<const double>(k.data(), static_cast<std::size_t>(k.size())));
}

UniPoly p_polynomial(const OperatorSpec& op) {
  op.validate();
  UniPoly prod{{1.0}};
  for (std::size_t l = 0; l < op.masses_squared.size(); ++l)
    for (int r = 0; r < op.multiplicities[l]; ++r) prod = prod * UniPoly{{op.masses_squared[l], 1.0}};
  const double norm = op.mass_normalization();
  for (double& c : prod.coeffs) c /= norm;
  // The constant term is prod m^2 / prod m^2; pin it so p(0) == 0 exactly.
  prod.coeffs[0] = 0.0;
  return prod;
}

double green_factor_partial(const std::vector<double>& masses_squared,
                            const std::vector<double>& b, double t) {
  double s = 0.0;
  for (std::size_t l = 0; l < b.size(); ++l) s += b[l] / (t + masses_squared[l]);
  return s;
}

std::vector<double> partial_fractions(const OperatorSpec& op) {
  op.validate();
  for (int nu : op.multiplicities)
    require(nu == 1, ErrorCode::unsupported_operator,
            "partial fractions require simple poles (no-dipole condition)");
  const auto& m2 = op.masses_squared;
  std::vector<double> b(m2.size(), 1.0);
  for (std::size_t l = 0; l < m2.size(); ++l)
    for (std::size_t j = 0; j < m2.size(); ++j)
      if (j != l) b[l] /= m2[j] - m2[l];

  Rng rng = stream(0x5eed, 0);
  std::uniform_real_distribution<double> uniform(0.0, 100.0);
  for (int i = 0; i < 100; ++i) {
    const double t = uniform(rng);
    const double residual = std::abs(green_factor(op, t) - green_factor_partial(m2, b, t));
    if (residual >= 1e-12)
      fail(ErrorCode::numeric, "partial-fraction identity residual " + std::to_string(residual) +
                                   " at t = " + std::to_string(t));
  }
  return b;
}

CovarianceReport check_Q_covariance(const OperatorSpec& op, int n_samples, std::uint64_t seed,
                                    double tolerance) {
  op.validate();
  require(op.tau.has_value(), ErrorCode::configuration,
          "check_Q_covariance needs a tau representation on the operator");
  CovarianceReport report;
  report.tolerance = tolerance;
  report.n_samples = n_samples;
  Rng rng = stream(seed, 1);
  std::normal_distribution<double> normal;
  for (int s = 0; s < n_samples; ++s) {
    const RotationPair rp = op.tau->sample(rng);
    Eigen::VectorXd k(op.d);
    for (int i = 0; i < op.d; ++i) k(i) = normal(rng);
    const Eigen::VectorXd rotated_k = rp.g.transpose() * k;  // g^-1 k
    const Eigen::MatrixXd lhs = rp.tau * op.q_e.evaluate(rotated_k) * rp.tau.transpose();
    const Eigen::MatrixXd rhs = op.q_e.evaluate(k);
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    const double violation = (lhs - rhs).cwiseAbs().maxCoeff() / scale;
    if (s == 0 || violation > report.worst_violation) {
      report.worst_violation = violation;
      report.witness_g = rp.g;
      report.witness_tau = rp.tau;
      report.witness_argument = k;
    }
  }
  report.passed = report.worst_violation <= tolerance;
  return report;
}

}  // namespace spdelab
