#include "spdelab/minkowski.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "spdelab/contraction.hpp"
#include "spdelab/error.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};
constexpr double kShellTolerance = 1e-9;
constexpr double kConservationTolerance = 1e-9;

const CumulantTensor& cumulant_of(const CumulantSet& set, int n, int L) {
  const auto it = set.find(n);
  require(it != set.end(), ErrorCode::validation,
          "no cumulant tensor of order " + std::to_string(n) + " supplied");
  require(it->second.order() == n && it->second.dim() == L, ErrorCode::validation,
          "cumulant tensor of order " + std::to_string(n) + " has the wrong shape");
  return it->second;
}

void require_no_dipole(const OperatorSpec& op) {
  op.validate();
  require(op.no_dipole, ErrorCode::unsupported_operator,
          "Minkowski kernels need the no-dipole condition");
}

bool on_shell(const Eigen::VectorXd& k, double m2, int sign) {
  if ((k(0) > 0 ? 1 : -1) != sign || k(0) == 0.0) return false;
  return std::abs(minkowski_square(k) - m2) <= kShellTolerance * std::max(1.0, m2);
}

void require_conservation(const std::vector<Eigen::VectorXd>& momenta) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(momenta.front().size());
  double scale = 1.0;
  for (const auto& k : momenta) {
    sum += k;
    scale = std::max(scale, k.cwiseAbs().maxCoeff());
  }
  require(sum.cwiseAbs().maxCoeff() <= kConservationTolerance * scale, ErrorCode::validation,
          "momenta must sum to zero (energy-momentum conservation)");
}

using MassAssignment = std::vector<std::size_t>;

// Calls f for every assignment of the n legs to the masses 0..masses-1.
void for_each_assignment(std::size_t n, std::size_t masses,
                         const std::function<void(const MassAssignment&)>& f) {
  MassAssignment assign(n, 0);
  while (true) {
    f(assign);
    std::size_t j = 0;
    while (j < n && ++assign[j] == masses) assign[j++] = 0;
    if (j == n) return;
  }
}

double energy(double m2, const Eigen::VectorXd& spatial) { return std::sqrt(spatial.squaredNorm() + m2); }

// Adaptive Gauss-Kronrod over a box, nested one axis at a time.
cplx integrate_box(const std::function<cplx(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, double tolerance, double* error_out) {
  using boost::math::quadrature::gauss_kronrod;
  const Eigen::Index dims = lower.size();
  Eigen::VectorXd point(dims);
  std::function<cplx(Eigen::Index)> level = [&](Eigen::Index axis) -> cplx {
    auto slice = [&](double t) {
      point(axis) = t;
      return axis + 1 == dims ? f(point) : level(axis + 1);
    };
    double err = 0.0;
    const cplx value = gauss_kronrod<double, 31>::integrate(slice, lower(axis), upper(axis), 15,
                                                            tolerance, &err);
    if (axis == 0 && error_out) *error_out = err;
    return value;
  };
  return level(0);
}

}  // namespace

ComplexPolyMatrix q_minkowski(const ComplexPolyMatrix& q) {
  ComplexPolyMatrix out(q.d(), q.L());
  for (int a = 0; a < q.L(); ++a)
    for (int b = 0; b < q.L(); ++b)
      for (const auto& [mi, c] : q(a, b).terms()) {
        cplx factor = 1.0;
        for (int p = 0; p < mi[0] % 4; ++p) factor *= I;
        out(a, b).add_term(mi, c * factor);
      }
  return out;
}

ComplexPolyMatrix q_minkowski(const OperatorSpec& op) {
  op.validate();
  ComplexPolyMatrix q(op.d, op.L);
  for (int a = 0; a < op.L; ++a)
    for (int b = 0; b < op.L; ++b)
      for (const auto& [mi, c] : op.q_e(a, b).terms()) q(a, b).add_term(mi, cplx(c, 0.0));
  return q_minkowski(q);
}

double minkowski_square(const Eigen::VectorXd& k) {
  return k(0) * k(0) - k.tail(k.size() - 1).squaredNorm();
}

ShellPoint::ShellPoint(double mass_, int sign_, Eigen::VectorXd spatial_)
    : mass(mass_), sign(sign_), spatial(std::move(spatial_)) {
  require(mass > 0, ErrorCode::validation, "shell point mass must be > 0");
  require(sign == 1 || sign == -1, ErrorCode::validation, "shell point sign must be +1 or -1");
}

double ShellPoint::energy() const { return sign * std::sqrt(spatial.squaredNorm() + mass * mass); }

Eigen::VectorXd ShellPoint::momentum() const {
  Eigen::VectorXd k(spatial.size() + 1);
  k(0) = energy();
  k.tail(spatial.size()) = spatial;
  return k;
}

double ShellPoint::shell_defect() const {
  return std::abs(minkowski_square(momentum()) - mass * mass) / std::max(1.0, mass * mass);
}

Eigen::VectorXd boost(const Eigen::VectorXd& k, double rapidity, int axis) {
  require(axis >= 0 && axis + 1 < k.size(), ErrorCode::validation, "boost axis out of range");
  Eigen::VectorXd out = k;
  const double ch = std::cosh(rapidity);
  const double sh = std::sinh(rapidity);
  out(0) = ch * k(0) - sh * k(axis + 1);
  out(axis + 1) = -sh * k(0) + ch * k(axis + 1);
  return out;
}

ShellPoint boost(const ShellPoint& p, double rapidity, int axis) {
  const Eigen::VectorXd k = boost(p.momentum(), rapidity, axis);
  return ShellPoint(p.mass, p.sign, k.tail(k.size() - 1));
}

void TestFunction::validate(int d, int L) const {
  require(center.size() == d, ErrorCode::validation, "test function center must have d entries");
  require(width > 0, ErrorCode::validation, "test function width must be > 0");
  require(weights.size() == L, ErrorCode::validation, "test function weights must have L entries");
  require(!weights.isZero(0.0), ErrorCode::validation, "test function weights must not all vanish");
}

Eigen::VectorXcd TestFunction::operator()(const Eigen::VectorXd& k) const {
  return weights * std::exp(-(k - center).squaredNorm() / (2 * width * width));
}

TestFunction TestFunction::conjugate() const { return {-center, width, weights.conjugate()}; }

std::complex<double> wightman2_smear(const OperatorSpec& op, const CumulantSet& cumulants,
                                     const TestFunction& f, const TestFunction& h) {
  require_no_dipole(op);
  const std::vector<double> b = partial_fractions(op);
  const CumulantTensor& c2 = cumulant_of(cumulants, 2, op.L);
  require(f.center.size() == op.d && h.center.size() == op.d, ErrorCode::validation,
          "test function center must have d entries");
  require(f.weights.size() == op.L && h.weights.size() == op.L, ErrorCode::validation,
          "test function weights must have L entries");
  require(f.width > 0 && h.width > 0, ErrorCode::validation, "test function width must be > 0");
  if (f.weights.isZero(0.0) || h.weights.isZero(0.0)) return 0.0;

  const ComplexPolyMatrix qm = q_minkowski(op);
  const int ds = op.d - 1;
  const double norm = op.mass_normalization() * std::pow(2 * std::numbers::pi, ds);

  // Window of the narrower packet in spatial momentum: f(-k) peaks at
  // k = -center_f, h(k) at k = center_h.
  const bool use_f = f.width < h.width;
  const double width = use_f ? f.width : h.width;
  const Eigen::VectorXd mid = use_f ? Eigen::VectorXd(-f.center.tail(ds)) : Eigen::VectorXd(h.center.tail(ds));
  const Eigen::VectorXd lower = mid.array() - 10 * width;
  const Eigen::VectorXd upper = mid.array() + 10 * width;

  cplx total = 0.0;
  for (std::size_t l = 0; l < b.size(); ++l) {
    const double m2 = op.masses_squared[l];
    auto integrand = [&](const Eigen::VectorXd& spatial) -> cplx {
      Eigen::VectorXd k(op.d);
      const double w = energy(m2, spatial);
      k(0) = -w;
      k.tail(ds) = spatial;
      const Eigen::VectorXd minus_k = -k;
      std::vector<Eigen::VectorXcd> v{qm.evaluate(k).transpose() * f(minus_k),
                                      qm.evaluate(minus_k).transpose() * h(k)};
      return contract_vectors<cplx>(c2, v) / (2 * w);
    };
    double err = 0.0;
    const cplx value = ds == 0 ? integrand(Eigen::VectorXd(0)) : integrate_box(integrand, lower, upper, 1e-10, &err);
    if (!(err <= std::max(1e-6 * std::abs(value), 1e-15)) || !std::isfinite(std::abs(value)))
      fail(ErrorCode::numeric, "two-point shell quadrature did not converge: value " +
                                   std::to_string(std::abs(value)) + ", error estimate " +
                                   std::to_string(err) + ", mass index " + std::to_string(l));
    total += b[l] * value;
  }
  return total / norm;
}

MonteCarloValue wightman_n_smear(const OperatorSpec& op, const CumulantSet& cumulants,
                                 const std::vector<TestFunction>& fs, const WightmanOptions& options) {
  require_no_dipole(op);
  const int n = static_cast<int>(fs.size());
  require(n >= 3, ErrorCode::validation, "wightman_n_smear needs n >= 3 test functions");
  require(options.n_samples >= 2, ErrorCode::validation, "wightman_n_smear needs >= 2 samples");
  require(options.workers >= 1, ErrorCode::validation, "workers must be >= 1");
  require(options.regulator >= 0, ErrorCode::validation, "regulator must be >= 0");
  for (const auto& f : fs) f.validate(op.d, op.L);
  const CumulantTensor& cn = cumulant_of(cumulants, n, op.L);
  MonteCarloValue result;
  result.n_samples = options.n_samples;
  if (cn.is_zero()) return result;

  const std::vector<double> b = partial_fractions(op);
  const ComplexPolyMatrix qm = q_minkowski(op);
  const int ds = op.d - 1;
  const auto un = static_cast<std::size_t>(n);
  const double shell_norm = 1.0 / std::pow(2 * std::numbers::pi, ds);

  struct Combo {
    std::size_t j;
    MassAssignment assign;
  };
  std::vector<Combo> combos;
  for (std::size_t j = 0; j < un; ++j)
    for_each_assignment(un, b.size(), [&](const MassAssignment& a) { combos.push_back({j, a}); });

  constexpr std::int64_t kBlock = 256;
  const std::int64_t blocks = (options.n_samples + kBlock - 1) / kBlock;
  struct Moments {
    cplx sum = 0.0;
    double sq_re = 0.0;
    double sq_im = 0.0;
    int crossings = 0;  // bit 0: below shell seen, bit 1: above shell seen
  };

  auto run_block = [&](const Combo& combo, std::size_t combo_index, std::int64_t block) {
    Moments m;
    Rng rng = stream(options.seed, (static_cast<std::uint64_t>(combo_index) << 32) |
                                       static_cast<std::uint64_t>(block));
    std::normal_distribution<double> normal;
    double bprod = 1.0;
    for (std::size_t l : combo.assign) bprod *= b[l];
    const double mj2 = op.masses_squared[combo.assign[combo.j]];
    const std::int64_t begin = block * kBlock;
    const std::int64_t end = std::min(options.n_samples, begin + kBlock);
    std::vector<Eigen::VectorXd> k(un, Eigen::VectorXd(op.d));
    std::vector<Eigen::VectorXcd> v(un);
    for (std::int64_t s = begin; s < end; ++s) {
      double weight = 1.0;
      Eigen::VectorXd total = Eigen::VectorXd::Zero(op.d);
      for (std::size_t i = 0; i < un; ++i) {
        if (i == combo.j) continue;
        const TestFunction& f = fs[i];
        const double sd = f.width;
        // f_i(-k_i) peaks at spatial k_i = -center.
        Eigen::VectorXd spatial(ds);
        double exponent = 0.0;
        for (int a = 0; a < ds; ++a) {
          const double z = normal(rng);
          spatial(a) = -f.center(a + 1) + sd * z;
          exponent += 0.5 * z * z;
        }
        const double density = std::exp(-exponent) / std::pow(2 * std::numbers::pi * sd * sd, 0.5 * ds);
        const double m2 = op.masses_squared[combo.assign[i]];
        const double w = energy(m2, spatial);
        k[i](0) = (i < combo.j ? -1.0 : 1.0) * w;
        k[i].tail(ds) = spatial;
        weight *= shell_norm / (2 * w * density);
        total += k[i];
      }
      k[combo.j] = -total;
      const double off_shell = minkowski_square(k[combo.j]) - mj2;
      m.crossings |= off_shell <= 0 ? 1 : 2;
      const cplx propagator = -1.0 / cplx(off_shell, options.regulator);
      for (std::size_t i = 0; i < un; ++i) v[i] = qm.evaluate(k[i]).transpose() * fs[i](Eigen::VectorXd(-k[i]));
      const cplx x = bprod * weight * propagator * contract_vectors<cplx>(cn, v);
      m.sum += x;
      m.sq_re += x.real() * x.real();
      m.sq_im += x.imag() * x.imag();
    }
    return m;
  };

  std::vector<std::vector<Moments>> per_block(combos.size(), std::vector<Moments>(static_cast<std::size_t>(blocks)));
  const std::size_t jobs = combos.size() * static_cast<std::size_t>(blocks);
  auto worker = [&](std::size_t first) {
    for (std::size_t job = first; job < jobs; job += static_cast<std::size_t>(options.workers)) {
      const std::size_t ci = job / static_cast<std::size_t>(blocks);
      const auto block = static_cast<std::int64_t>(job % static_cast<std::size_t>(blocks));
      per_block[ci][static_cast<std::size_t>(block)] = run_block(combos[ci], ci, block);
    }
  };
  if (options.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < options.workers; ++w) threads.emplace_back(worker, static_cast<std::size_t>(w));
    for (auto& t : threads) t.join();
  }

  const auto M = static_cast<double>(options.n_samples);
  double var_re = 0.0;
  double var_im = 0.0;
  for (std::size_t ci = 0; ci < combos.size(); ++ci) {
    Moments acc;
    for (const auto& m : per_block[ci]) {
      acc.sum += m.sum;
      acc.sq_re += m.sq_re;
      acc.sq_im += m.sq_im;
      acc.crossings |= m.crossings;
    }
    if (options.regulator == 0.0 && acc.crossings == 3)
      fail(ErrorCode::singular_configuration,
           "packets straddle the propagator mass shell of leg " + std::to_string(combos[ci].j) +
               "; use a nonzero regulator");
    const cplx mean = acc.sum / M;
    result.value += mean;
    var_re += std::max(0.0, acc.sq_re / M - mean.real() * mean.real()) / (M - 1);
    var_im += std::max(0.0, acc.sq_im / M - mean.imag() * mean.imag()) / (M - 1);
  }
  result.stderr_re = std::sqrt(var_re);
  result.stderr_im = std::sqrt(var_im);
  return result;
}

LegLabel leg_label_from_name(const std::string& name) {
  if (name == "in") return LegLabel::in;
  if (name == "loc") return LegLabel::loc;
  if (name == "out") return LegLabel::out;
  fail(ErrorCode::validation, "leg label must be in, loc or out (got '" + name + "')");
}

std::string leg_label_name(LegLabel label) {
  switch (label) {
    case LegLabel::in: return "in";
    case LegLabel::loc: return "loc";
    case LegLabel::out: return "out";
  }
  return "loc";
}

void MinkowskiKernelRequest::validate() const {
  require(op != nullptr && cumulants != nullptr, ErrorCode::validation,
          "kernel request needs an operator and cumulants");
  require_no_dipole(*op);
  require(order() >= 2, ErrorCode::validation, "kernel order must be >= 2");
  require(regulator >= 0, ErrorCode::validation, "regulator must be >= 0");
  std::vector<Eigen::VectorXd> momenta;
  for (const auto& leg : legs) {
    require(leg.momentum.size() == op->d, ErrorCode::validation, "leg momentum must have d entries");
    require(leg.component >= 0 && leg.component < op->L, ErrorCode::validation,
            "leg component out of range");
    momenta.push_back(leg.momentum);
  }
  require_conservation(momenta);
  cumulant_of(*cumulants, order(), op->L);
}

std::complex<double> minkowski_contraction(const OperatorSpec& op, const CumulantSet& cumulants,
                                           const std::vector<KernelLeg>& legs) {
  const CumulantTensor& c = cumulant_of(cumulants, static_cast<int>(legs.size()), op.L);
  const ComplexPolyMatrix qm = q_minkowski(op);
  std::vector<Eigen::MatrixXcd> q;
  std::vector<int> components;
  for (const auto& leg : legs) {
    q.push_back(qm.evaluate(leg.momentum));
    components.push_back(leg.component);
  }
  return contract_legs<cplx>(c, q, components);
}

namespace {

// Shared term structure; `leg_factor(j, l)` supplies the j-th leg's factor.
cplx term_sum(const MinkowskiKernelRequest& req, std::size_t j,
              const std::function<cplx(std::size_t)>& leg_factor) {
  const OperatorSpec& op = *req.op;
  const std::vector<double> b = partial_fractions(op);
  const std::size_t n = req.legs.size();
  cplx total = 0.0;
  for_each_assignment(n, b.size(), [&](const MassAssignment& assign) {
    double weight = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      weight *= b[assign[i]];
      if (i == j) continue;
      if (!on_shell(req.legs[i].momentum, op.masses_squared[assign[i]], i < j ? -1 : 1)) return;
    }
    total += weight * leg_factor(assign[j]);
  });
  return total;
}

cplx propagator_factor(const MinkowskiKernelRequest& req, std::size_t j, std::size_t l) {
  const double m2 = req.op->masses_squared[l];
  const double off = minkowski_square(req.legs[j].momentum) - m2;
  if (req.regulator == 0.0 && std::abs(off) <= 1e-12 * std::max(1.0, m2))
    fail(ErrorCode::singular_configuration,
         "local leg " + std::to_string(j) + " is on the mass shell; use a nonzero regulator");
  return 1.0 / cplx(off, req.regulator);
}

}  // namespace

std::complex<double> wightman_term_kernel(const MinkowskiKernelRequest& req, int j) {
  req.validate();
  require(j >= 0 && j < req.order(), ErrorCode::validation, "propagator leg index out of range");
  const auto uj = static_cast<std::size_t>(j);
  const cplx sum = term_sum(req, uj, [&](std::size_t l) { return propagator_factor(req, uj, l); });
  if (sum == 0.0) return 0.0;
  return -minkowski_contraction(*req.op, *req.cumulants, req.legs) * sum;
}

std::complex<double> form_factor_kernel(const MinkowskiKernelRequest& req) {
  req.validate();
  const OperatorSpec& op = *req.op;
  cplx total = 0.0;
  for (std::size_t j = 0; j < req.legs.size(); ++j) {
    const KernelLeg& leg = req.legs[j];
    total += term_sum(req, j, [&](std::size_t l) -> cplx {
      if (leg.label == LegLabel::loc) return propagator_factor(req, j, l);
      const double m2 = op.masses_squared[l];
      const double jump = (on_shell(leg.momentum, m2, 1) ? 1.0 : 0.0) - (on_shell(leg.momentum, m2, -1) ? 1.0 : 0.0);
      const double sign = leg.label == LegLabel::in ? -1.0 : 1.0;
      return sign * I * std::numbers::pi * jump;
    });
  }
  if (total == 0.0) return 0.0;
  return -minkowski_contraction(op, *req.cumulants, req.legs) * total;
}

std::complex<double> smatrix_kernel(const OperatorSpec& op, const CumulantSet& cumulants,
                                    const std::vector<ShellPoint>& incoming,
                                    const std::vector<ShellPoint>& outgoing,
                                    const std::vector<int>& components) {
  require_no_dipole(op);
  const std::vector<double> b = partial_fractions(op);
  const std::size_t n = incoming.size() + outgoing.size();
  require(n >= 3, ErrorCode::validation, "S-matrix kernel needs n >= 3 legs");
  require(components.size() == n, ErrorCode::validation, "S-matrix kernel needs one component per leg");
  std::vector<KernelLeg> legs;
  std::vector<Eigen::VectorXd> momenta;
  double bprod = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool in = i < incoming.size();
    const ShellPoint& p = in ? incoming[i] : outgoing[i - incoming.size()];
    require(p.sign == (in ? -1 : 1), ErrorCode::validation,
            in ? "incoming legs must carry sign -" : "outgoing legs must carry sign +");
    require(p.spatial.size() == op.d - 1, ErrorCode::validation, "shell point must have d-1 spatial entries");
    require(components[i] >= 0 && components[i] < op.L, ErrorCode::validation, "leg component out of range");
    const double m2 = p.mass * p.mass;
    std::size_t match = b.size();
    for (std::size_t l = 0; l < b.size(); ++l)
      if (std::abs(op.masses_squared[l] - m2) <= kShellTolerance * std::max(1.0, m2)) match = l;
    require(match < b.size(), ErrorCode::validation,
            "leg mass " + std::to_string(p.mass) + " is not in the operator's mass spectrum");
    bprod *= b[match];
    legs.push_back({components[i], p.momentum(), in ? LegLabel::in : LegLabel::out});
    momenta.push_back(legs.back().momentum);
  }
  require_conservation(momenta);
  const cplx q = minkowski_contraction(op, cumulants, legs);
  if (q == 0.0) return 0.0;
  return -2.0 * std::numbers::pi * I * q * bprod;
}

TwoToTwo two_to_two(int d, const std::array<double, 2>& in_masses,
                    const std::array<double, 2>& out_masses, double cm_energy,
                    const Eigen::VectorXd& direction, double rapidity) {
  require(d >= 2, ErrorCode::validation, "scattering kinematics need d >= 2");
  require(direction.size() == d - 1 && std::abs(direction.norm() - 1.0) < 1e-12, ErrorCode::validation,
          "scattering direction must be a unit (d-1)-vector");
  auto cm_momentum = [&](const std::array<double, 2>& m) {
    require(cm_energy > m[0] + m[1], ErrorCode::validation, "centre-of-mass energy below threshold");
    const double s = cm_energy * cm_energy;
    const double a = m[0] * m[0];
    const double c = m[1] * m[1];
    return std::sqrt(std::max(0.0, s * s + a * a + c * c - 2 * s * a - 2 * s * c - 2 * a * c)) /
           (2 * cm_energy);
  };
  const double p_in = cm_momentum(in_masses);
  const double p_out = cm_momentum(out_masses);
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(d - 1);
  axis(0) = 1.0;
  TwoToTwo out;
  // Incoming particles of momentum p enter as k = -p on the negative shell.
  out.incoming = {ShellPoint(in_masses[0], -1, -p_in * axis), ShellPoint(in_masses[1], -1, p_in * axis)};
  out.outgoing = {ShellPoint(out_masses[0], 1, p_out * direction), ShellPoint(out_masses[1], 1, -p_out * direction)};
  for (auto& p : out.incoming) p = boost(p, rapidity);
  for (auto& p : out.outgoing) p = boost(p, rapidity);
  return out;
}

GramResult gram_matrix(const OperatorSpec& op, const CumulantSet& cumulants,
                       const std::vector<TestFunction>& fs) {
  require_no_dipole(op);
  GramResult result;
  const auto n = static_cast<Eigen::Index>(fs.size());
  result.matrix = Eigen::MatrixXcd::Zero(n, n);
  result.eigenvalues = Eigen::VectorXd(0);
  if (n == 0) return result;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      result.matrix(i, j) = wightman2_smear(op, cumulants, fs[static_cast<std::size_t>(i)].conjugate(),
                                            fs[static_cast<std::size_t>(j)]);
  const double scale = result.matrix.cwiseAbs().maxCoeff();
  result.asymmetry = scale > 0 ? (result.matrix - result.matrix.adjoint()).cwiseAbs().maxCoeff() / scale : 0.0;
  require(result.asymmetry < 1e-6, ErrorCode::numeric,
          "Gram matrix is not Hermitian: relative asymmetry " + std::to_string(result.asymmetry));
  result.matrix = 0.5 * (result.matrix + result.matrix.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(result.matrix, Eigen::EigenvaluesOnly);
  result.eigenvalues = es.eigenvalues();
  return result;
}

Eigen::MatrixXcd two_point_from_shells(const OperatorSpec& op, const CumulantSet& cumulants,
                                       const Eigen::VectorXd& x) {
  require_no_dipole(op);
  require(x.size() == op.d, ErrorCode::validation, "position must have d entries");
  require(x(0) > 0, ErrorCode::validation, "shell representation needs Euclidean time x0 > 0");
  const std::vector<double> b = partial_fractions(op);
  const CumulantTensor& c2 = cumulant_of(cumulants, 2, op.L);
  const ComplexPolyMatrix qm = q_minkowski(op);
  const int ds = op.d - 1;
  const double norm = op.mass_normalization() * std::pow(2 * std::numbers::pi, ds);
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(ds, -inf);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(ds, inf);

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(op.L, op.L);
  for (int a1 = 0; a1 < op.L; ++a1)
    for (int a2 = 0; a2 < op.L; ++a2) {
      const std::vector<int> comps{a1, a2};
      for (std::size_t l = 0; l < b.size(); ++l) {
        const double m2 = op.masses_squared[l];
        auto integrand = [&](const Eigen::VectorXd& spatial) -> cplx {
          const double w = energy(m2, spatial);
          Eigen::VectorXd k(op.d);
          k(0) = w;
          k.tail(ds) = spatial;
          const std::vector<Eigen::MatrixXcd> q{qm.evaluate(k), qm.evaluate(Eigen::VectorXd(-k))};
          const cplx phase = std::exp(I * spatial.dot(x.tail(ds)) - w * x(0));
          return contract_legs<cplx>(c2, q, comps) * phase / (2 * w);
        };
        double err = 0.0;
        const cplx value = ds == 0 ? integrand(Eigen::VectorXd(0)) : integrate_box(integrand, lower, upper, 1e-10, &err);
        require(err <= std::max(1e-6 * std::abs(value), 1e-15) && std::isfinite(std::abs(value)),
                ErrorCode::numeric, "shell representation quadrature did not converge");
        out(a1, a2) += b[l] * value;
      }
    }
  return out / norm;
}

}  // namespace spdelab
