#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/minkowski.hpp"

using namespace spdelab;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

LevySpec scalar_noise(double sigma, double pair, double weight) {
  LevySpec s = LevySpec::gaussian(Eigen::MatrixXd::Constant(1, 1, sigma));
  if (weight > 0) s.jumps.push_back(PairComponent{Eigen::VectorXd::Constant(1, pair), weight});
  return s;
}

OperatorSpec no_dipole_scalar(int d, std::vector<double> m2) {
  OperatorSpec op = OperatorSpec::scalar(d, std::move(m2));
  op.no_dipole = true;
  return op;
}

OperatorSpec no_dipole_tensor(std::vector<double> m2) {
  OperatorSpec op = OperatorSpec::tensor(2, std::move(m2), 1.0);
  op.no_dipole = true;
  return op;
}

TestFunction packet(Eigen::VectorXd center, double width, Eigen::VectorXcd weights) {
  return TestFunction{std::move(center), width, std::move(weights)};
}

Eigen::VectorXcd scalar_weight(cplx w) { return Eigen::VectorXcd::Constant(1, w); }

// Shell energy sqrt(p^2 + m^2).
double omega(double m2, double p) { return std::sqrt(p * p + m2); }

// Weights b_l of sum_l b_l / (t + m_l^2) = prod_l 1 / (t + m_l^2).
std::vector<double> weights_b(const std::vector<double>& m2) {
  std::vector<double> b;
  for (std::size_t l = 0; l < m2.size(); ++l) {
    double v = 1.0;
    for (std::size_t j = 0; j < m2.size(); ++j)
      if (j != l) v /= m2[j] - m2[l];
    b.push_back(v);
  }
  return b;
}

double prod(const std::vector<double>& v) {
  double p = 1.0;
  for (double x : v) p *= x;
  return p;
}

// Packet value at a d = 2 point, written out directly.
cplx packet_at(const TestFunction& f, double k0, double k1) {
  const double e = (k0 - f.center(0)) * (k0 - f.center(0)) + (k1 - f.center(1)) * (k1 - f.center(1));
  return f.weights(0) * std::exp(-e / (2 * f.width * f.width));
}

// Scalar d = 2, Q = 1: sum_l b_l C / prod m^2 int dp / (2 pi 2 w) f(w, -p) h(-w, p),
// by a fine trapezoid rule.
cplx scalar_w2_oracle(const std::vector<double>& m2, double c2, const TestFunction& f, const TestFunction& h) {
  const auto b = weights_b(m2);
  cplx total = 0.0;
  for (std::size_t l = 0; l < m2.size(); ++l) {
    const int n = 20000;
    const double lo = -12, hi = 12, dp = (hi - lo) / n;
    cplx s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double p = lo + i * dp;
      const double w = omega(m2[l], p);
      const cplx v = packet_at(f, w, -p) * packet_at(h, -w, p) / (2 * w);
      s += (i == 0 || i == n ? 0.5 : 1.0) * v;
    }
    total += b[l] * s * dp / (2 * kPi);
  }
  return c2 * total / prod(m2);
}

}  // namespace

TEST_CASE("Minkowski continuation of Q") {
  CHECK(q_minkowski(no_dipole_scalar(2, {1.0}))(0, 0).terms() ==
        ComplexPolyMatrix::identity(2, 1)(0, 0).terms());

  ComplexPolyMatrix q(2, 1);
  q(0, 0).add_term({2, 0}, 1.0);
  CHECK(q_minkowski(q)(0, 0).terms().at({2, 0}) == cplx(-1.0));

  ComplexPolyMatrix mixed(2, 1);
  mixed(0, 0).add_term({1, 1}, 1.0);
  const auto once = q_minkowski(mixed);
  CHECK(once(0, 0).terms().at({1, 1}) == cplx(0.0, 1.0));
  CHECK(q_minkowski(once)(0, 0).terms().at({1, 1}) == cplx(-1.0));

  // Applying the continuation twice negates k0 in Q_E, coefficient by coefficient.
  OperatorSpec tensor = no_dipole_tensor({1.0, 2.0});
  tensor.q_e(0, 1).add_term({1, 1}, 0.5);
  tensor.q_e(1, 0).add_term({3, 1}, -0.25);
  tensor.masses_squared.push_back(3.0);
  tensor.multiplicities.push_back(1);
  const auto twice = q_minkowski(q_minkowski(tensor));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const auto& terms = tensor.q_e(a, b).terms();
      REQUIRE(twice(a, b).terms().size() == terms.size());
      for (const auto& [mi, c] : terms) CHECK(twice(a, b).terms().at(mi) == cplx(mi[0] % 2 ? -c : c));
    }

  // Q^M(k0, k) = Q_E(i k0, k) evaluated through complex arguments.
  const auto qm = q_minkowski(tensor);
  const std::vector<cplx> arg{cplx(0.0, 0.7), cplx(-1.3)};
  const Eigen::MatrixXcd direct = tensor.q_e.evaluate(std::span<const cplx>(arg));
  CHECK((qm.evaluate(vec({0.7, -1.3})) - direct).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("shell points and boosts") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const ShellPoint p(0.5 + std::abs(u(rng)), i % 2 ? 1 : -1, vec({u(rng), u(rng)}));
    CHECK(p.shell_defect() < 1e-12);
    CHECK(p.energy() * p.sign > 0);
    const double eta = u(rng) / 3;
    const ShellPoint q = boost(p, eta, i % 2);
    CHECK(q.shell_defect() < 1e-12);
    CHECK(minkowski_square(boost(p.momentum(), eta)) == doctest::Approx(p.mass * p.mass).epsilon(1e-12));
  }
  CHECK(code_of([] { (void)ShellPoint(1.0, 0, vec({0.0})); }) == ErrorCode::validation);
  CHECK(code_of([] { (void)ShellPoint(-1.0, 1, vec({0.0})); }) == ErrorCode::validation);

  const TwoToTwo t = two_to_two(3, {1.0, std::sqrt(2.0)}, {1.0, 1.0}, 4.0, vec({0.6, 0.8}), 0.7);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (const auto& p : t.incoming) {
    CHECK(p.sign == -1);
    CHECK(p.shell_defect() < 1e-12);
    sum += p.momentum();
  }
  for (const auto& p : t.outgoing) {
    CHECK(p.sign == 1);
    CHECK(p.shell_defect() < 1e-12);
    sum += p.momentum();
  }
  CHECK(sum.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("smeared two-point function") {
  const CumulantSet cum = cumulant_set(scalar_noise(1.0, 0, 0), 2);
  const OperatorSpec one = no_dipole_scalar(2, {1.0});
  // Packets matched to the shell: h at negative energy, f at positive.
  const TestFunction h = packet(vec({-omega(1, 0.4), 0.4}), 0.5, scalar_weight(1.0));
  const TestFunction f = h.conjugate();
  const cplx w = wightman2_smear(one, cum, f, h);
  CHECK(w.real() > 0);
  CHECK(std::abs(w.imag()) <= 1e-12 * w.real());
  CHECK(std::abs(w - scalar_w2_oracle({1.0}, 1.0, f, h)) < 1e-8 * std::abs(w));
  CHECK(wightman2_smear(one, cum, f, packet(vec({0, 0}), 1.0, scalar_weight(0.0))) == cplx(0.0));

  // Two masses: a packet sitting on the heavy shell sees b_2 = -1.
  const OperatorSpec two = no_dipole_scalar(2, {1.0, 2.0});
  const TestFunction heavy = packet(vec({-omega(2, 0.0), 0.0}), 0.1, scalar_weight(1.0));
  const cplx wh = wightman2_smear(two, cum, heavy.conjugate(), heavy);
  CHECK(wh.real() < 0);
  CHECK(std::abs(wh - scalar_w2_oracle({1.0, 2.0}, 1.0, heavy.conjugate(), heavy)) < 1e-8 * std::abs(wh));

  // Complex weights and a mismatched pair against the oracle.
  const TestFunction g = packet(vec({-0.9, -0.6}), 0.7, scalar_weight(cplx(0.3, -1.1)));
  const TestFunction k = packet(vec({1.7, 0.2}), 0.4, scalar_weight(cplx(-0.5, 0.2)));
  const cplx wg = wightman2_smear(two, cum, k, g);
  CHECK(std::abs(wg - scalar_w2_oracle({1.0, 2.0}, 1.0, k, g)) < 1e-8 * std::abs(wg));

  OperatorSpec dipole = OperatorSpec::scalar(2, {1.0});
  dipole.no_dipole = false;
  dipole.multiplicities = {2};
  CHECK(code_of([&] { (void)wightman2_smear(dipole, cum, f, h); }) == ErrorCode::unsupported_operator);
}

TEST_CASE("smeared two-point function is Hermitian for scalar models") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const CumulantSet cum = cumulant_set(scalar_noise(0.7, 1.2, 0.4), 2);
  for (const auto& m2 : std::vector<std::vector<double>>{{1.0}, {1.0, 2.0}, {0.5, 1.0, 3.5}}) {
    const OperatorSpec op = no_dipole_scalar(2, m2);
    for (int i = 0; i < 5; ++i) {
      const TestFunction f = packet(vec({u(rng), u(rng)}), 0.3 + std::abs(u(rng)) / 2, scalar_weight(cplx(u(rng), u(rng))));
      const cplx w = wightman2_smear(op, cum, f.conjugate(), f);
      CHECK(std::abs(w.imag()) <= 1e-8 * std::abs(w));
    }
  }
}

TEST_CASE("truncated n-point smearing") {
  const OperatorSpec op = no_dipole_scalar(2, {1.0});
  const std::vector<TestFunction> fs{packet(vec({0.0, 0.3}), 0.8, scalar_weight(1.0)),
                                     packet(vec({0.2, -0.5}), 0.8, scalar_weight(cplx(0.5, 0.5))),
                                     packet(vec({-0.3, 0.1}), 0.8, scalar_weight(1.0))};
  // Gaussian noise: every connected part beyond two legs vanishes.
  const CumulantSet gauss = cumulant_set(scalar_noise(1.0, 0, 0), 4);
  const auto zero = wightman_n_smear(op, gauss, fs);
  CHECK(zero.value == cplx(0.0));
  CHECK(zero.stderr_re == 0.0);

  // Symmetric noise has no third cumulant; a synthetic one exercises n = 3.
  CumulantSet c3 = gauss;
  const double c = 1.7;
  c3[3] = CumulantTensor::from_multiset(3, 1, [&](std::span<const int>) { return c; });
  WightmanOptions options;
  options.n_samples = 40000;
  options.seed = 99;
  options.regulator = 1e-3;
  const auto a = wightman_n_smear(op, c3, fs, options);
  options.regulator = 1e-4;
  const auto b = wightman_n_smear(op, c3, fs, options);
  CHECK(std::abs(a.value) > 0);
  CHECK(std::abs(a.value - b.value) <= 1e-3 * std::abs(a.value));

  // Deterministic oracle: for each propagator leg j, a 2D trapezoid over the
  // spatial momenta of the two shell legs.
  cplx oracle = 0.0;
  const int n = 400;
  const double lo = -6, hi = 6, h = (hi - lo) / n;
  for (int j = 0; j < 3; ++j) {
    std::vector<int> others;
    for (int i = 0; i < 3; ++i)
      if (i != j) others.push_back(i);
    for (int s = 0; s <= n; ++s)
      for (int t = 0; t <= n; ++t) {
        const double p[2] = {lo + s * h, lo + t * h};
        double k0[3] = {0, 0, 0}, k1[3] = {0, 0, 0};
        double jac = 1.0;
        for (int r = 0; r < 2; ++r) {
          const int i = others[static_cast<std::size_t>(r)];
          const double w = omega(1.0, p[r]);
          k0[i] = (i < j ? -1 : 1) * w;
          k1[i] = p[r];
          jac /= 2 * kPi * 2 * w;
        }
        k0[j] = -(k0[others[0]] + k0[others[1]]);
        k1[j] = -(k1[others[0]] + k1[others[1]]);
        const cplx prop = -1.0 / cplx(k0[j] * k0[j] - k1[j] * k1[j] - 1.0, 1e-4);
        cplx v = c * prop * jac;
        for (int i = 0; i < 3; ++i) v *= packet_at(fs[static_cast<std::size_t>(i)], -k0[i], -k1[i]);
        const double wt = (s == 0 || s == n ? 0.5 : 1.0) * (t == 0 || t == n ? 0.5 : 1.0);
        oracle += wt * v * h * h;
      }
  }
  CHECK(std::abs(b.value.real() - oracle.real()) <= 4 * b.stderr_re + 1e-6 * std::abs(oracle));
  CHECK(std::abs(b.value.imag() - oracle.imag()) <= 4 * b.stderr_im + 1e-6 * std::abs(oracle));

  // Same seed and worker count independence.
  options.workers = 3;
  const auto b3 = wightman_n_smear(op, c3, fs, options);
  CHECK(b3.value == b.value);
  CHECK(b3.stderr_re == b.stderr_re);
}

TEST_CASE("unregularized propagator across the shell is flagged") {
  const OperatorSpec op = no_dipole_scalar(2, {1.0});
  const CumulantSet cum = cumulant_set(scalar_noise(0.5, 1.0, 0.6), 4);
  std::vector<TestFunction> fs;
  for (double p : {-0.5, 0.2, 0.6, -0.1}) fs.push_back(packet(vec({0.0, p}), 1.5, scalar_weight(1.0)));
  WightmanOptions options;
  options.regulator = 0.0;
  options.n_samples = 2000;
  CHECK(code_of([&] { (void)wightman_n_smear(op, cum, fs, options); }) == ErrorCode::singular_configuration);
}

namespace {

// Independent form-factor evaluation: Q_E at (i k0, k), explicit j and
// assignment sums, on-shell indicators from the shell tolerance.
cplx brute_form_factor(const OperatorSpec& op, const CumulantTensor& cn, const std::vector<KernelLeg>& legs,
                       double regulator) {
  const auto n = legs.size();
  const auto b = weights_b(op.masses_squared);
  const auto N = b.size();
  auto on = [](const Eigen::VectorXd& k, double m2, int sign) {
    const double sq = k(0) * k(0) - k.tail(k.size() - 1).squaredNorm();
    return k(0) * sign > 0 && std::abs(sq - m2) <= 1e-9 * std::max(1.0, m2);
  };
  cplx bracket = 0.0;
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= N;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<std::size_t> l(n);
      std::size_t rest = code;
      for (auto& x : l) {
        x = rest % N;
        rest /= N;
      }
      cplx term = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        term *= b[l[i]];
        if (i != j && !on(legs[i].momentum, op.masses_squared[l[i]], i < j ? -1 : 1)) term = 0.0;
      }
      if (term == 0.0) continue;
      const Eigen::VectorXd& k = legs[j].momentum;
      const double m2 = op.masses_squared[l[j]];
      cplx delta;
      const double jump = (on(k, m2, 1) ? 1.0 : 0.0) - (on(k, m2, -1) ? 1.0 : 0.0);
      switch (legs[j].label) {
        case LegLabel::in: delta = cplx(0, -kPi) * jump; break;
        case LegLabel::out: delta = cplx(0, kPi) * jump; break;
        case LegLabel::loc: delta = 1.0 / cplx(k(0) * k(0) - k.tail(k.size() - 1).squaredNorm() - m2, regulator); break;
      }
      bracket += term * delta;
    }
  // Contraction sum_b C^{b1..bn} prod_j Q_E(i k0, k)_{a_j b_j}.
  std::vector<Eigen::MatrixXcd> q;
  for (const auto& leg : legs) {
    std::vector<cplx> arg(leg.momentum.data(), leg.momentum.data() + leg.momentum.size());
    arg[0] *= cplx(0, 1);
    q.push_back(op.q_e.evaluate(std::span<const cplx>(arg)));
  }
  cplx contraction = 0.0;
  const int L = op.L;
  int total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= L;
  for (int code = 0; code < total; ++code) {
    std::vector<int> idx(n);
    int rest = code;
    for (auto& x : idx) {
      x = rest % L;
      rest /= L;
    }
    cplx p = cn(std::span<const int>(idx));
    for (std::size_t i = 0; i < n; ++i) p *= q[i](legs[i].component, idx[i]);
    contraction += p;
  }
  return -contraction * bracket;
}

}  // namespace

TEST_CASE("form factors") {
  const OperatorSpec two = no_dipole_scalar(2, {1.0, 2.0});
  LevySpec noise = scalar_noise(0.5, 1.5, 0.8);
  const CumulantSet cum = cumulant_set(noise, 4);
  const TwoToTwo t = two_to_two(2, {1.0, std::sqrt(2.0)}, {1.0, std::sqrt(2.0)}, 3.5, vec({-1.0}), 0.3);
  std::vector<Eigen::VectorXd> ks;
  for (const auto& p : t.incoming) ks.push_back(p.momentum());
  for (const auto& p : t.outgoing) ks.push_back(p.momentum());

  auto request = [&](const OperatorSpec& op, const CumulantSet& c, std::vector<LegLabel> labels, double reg,
                     std::vector<int> comps = {0, 0, 0, 0}) {
    MinkowskiKernelRequest req{&op, &c, {}, reg};
    for (std::size_t i = 0; i < 4; ++i) req.legs.push_back({comps[i], ks[i], labels[i]});
    return req;
  };
  using enum LegLabel;

  // In and out labels on the incoming and outgoing legs reproduce the S-matrix density.
  const auto io = request(two, cum, {in, in, out, out}, 0.0);
  const cplx ff = form_factor_kernel(io);
  const cplx s = smatrix_kernel(two, cum, t.incoming, t.outgoing, {0, 0, 0, 0});
  CHECK(std::abs(ff - s) <= 1e-13 * std::abs(s));
  CHECK(std::abs(form_factor_kernel(request(two, cum, {out, out, in, in}, 0.0)) + ff) <= 1e-13 * std::abs(ff));
  CHECK(std::abs(ff - brute_form_factor(two, cum.at(4), io.legs, 0.0)) <= 1e-13 * std::abs(ff));

  // A local leg sitting on one of the shells needs the regulator.
  CHECK(code_of([&] { (void)form_factor_kernel(request(two, cum, {in, loc, out, out}, 0.0)); }) ==
        ErrorCode::singular_configuration);
  const auto mixed = request(two, cum, {in, loc, out, out}, 1e-2);
  const cplx fm = form_factor_kernel(mixed);
  CHECK(std::abs(fm) > 0);
  CHECK(std::abs(fm - brute_form_factor(two, cum.at(4), mixed.legs, 1e-2)) <= 1e-12 * std::abs(fm));

  // Tensor model, N = 1, mixed labels and components.
  OperatorSpec tensor = no_dipole_tensor({1.0});
  tensor.q_e = PolyMatrix<double>::identity(2, 2);
  LevySpec vnoise = LevySpec::gaussian(0.6 * Eigen::MatrixXd::Identity(2, 2));
  vnoise.jumps.push_back(SphereComponent{1.3, 0.5});
  const CumulantSet vcum = cumulant_set(vnoise, 4);
  const TwoToTwo t1 = two_to_two(2, {1.0, 1.0}, {1.0, 1.0}, 2.9, vec({1.0}), -0.4);
  ks.clear();
  for (const auto& p : t1.incoming) ks.push_back(p.momentum());
  for (const auto& p : t1.outgoing) ks.push_back(p.momentum());
  for (const auto& labels : std::vector<std::vector<LegLabel>>{{in, in, out, out}, {out, in, in, out}, {in, loc, loc, out}}) {
    const auto req = request(tensor, vcum, labels, 1e-3, {0, 1, 1, 0});
    const cplx v = form_factor_kernel(req);
    CHECK(std::abs(v - brute_form_factor(tensor, vcum.at(4), req.legs, 1e-3)) <= 1e-12 * std::max(1e-300, std::abs(v)));
  }

  // All-local labels with one generic off-shell leg reduce to that leg's Wightman term.
  ks = {ShellPoint(1.0, -1, vec({0.3})).momentum(), Eigen::VectorXd(), ShellPoint(std::sqrt(2.0), 1, vec({-0.8})).momentum(),
        ShellPoint(1.0, 1, vec({1.1})).momentum()};
  ks[1] = -(ks[0] + ks[2] + ks[3]);
  for (double reg : {0.0, 1e-3}) {
    const auto req = request(two, cum, {loc, loc, loc, loc}, reg);
    const cplx v = form_factor_kernel(req);
    CHECK(std::abs(v) > 0);
    CHECK(std::abs(v - wightman_term_kernel(req, 1)) <= 1e-14 * std::abs(v));
    CHECK(wightman_term_kernel(req, 0) == cplx(0.0));
    CHECK(std::abs(v - brute_form_factor(two, cum.at(4), req.legs, reg)) <= 1e-12 * std::abs(v));
  }

  ks[1](0) += 0.1;
  CHECK(code_of([&] { (void)form_factor_kernel(request(two, cum, {loc, loc, loc, loc}, 0.0)); }) ==
        ErrorCode::validation);
  CHECK(code_of([] { (void)leg_label_from_name("sideways"); }) == ErrorCode::validation);
  CHECK(leg_label_name(leg_label_from_name("out")) == "out");
}

TEST_CASE("S-matrix densities") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  const OperatorSpec one = no_dipole_scalar(2, {1.0});
  const CumulantSet gauss = cumulant_set(scalar_noise(1.0, 0, 0), 4);
  const double c4 = 0.8 * std::pow(1.5, 4);
  const CumulantSet poisson = cumulant_set(scalar_noise(0.5, 1.5, 0.8), 4);
  const cplx anchor = cplx(0, -2 * kPi) * c4;
  for (int i = 0; i < 20; ++i) {
    const double theta = 2 * kPi * u(rng);
    const TwoToTwo t = two_to_two(2, {1.0, 1.0}, {1.0, 1.0}, 2.05 + 3 * u(rng), vec({std::cos(theta) > 0 ? 1.0 : -1.0}),
                                  2 * u(rng) - 1);
    CHECK(smatrix_kernel(one, gauss, t.incoming, t.outgoing, {0, 0, 0, 0}) == cplx(0.0));
    const cplx v = smatrix_kernel(one, poisson, t.incoming, t.outgoing, {0, 0, 0, 0});
    CHECK(std::abs(v - anchor) <= 1e-13 * std::abs(anchor));
  }

  // Heavy leg carries b_2 = -1.
  const OperatorSpec two = no_dipole_scalar(2, {1.0, 2.0});
  const TwoToTwo light = two_to_two(2, {1.0, 1.0}, {1.0, 1.0}, 3.0, vec({1.0}), 0.2);
  const TwoToTwo heavy = two_to_two(2, {1.0, 1.0}, {1.0, std::sqrt(2.0)}, 3.0, vec({1.0}), 0.2);
  const cplx sl = smatrix_kernel(two, poisson, light.incoming, light.outgoing, {0, 0, 0, 0});
  const cplx sh = smatrix_kernel(two, poisson, heavy.incoming, heavy.outgoing, {0, 0, 0, 0});
  CHECK(std::abs(sh / sl + 1.0) < 1e-14);

  // Momentum-dependent scalar numerator 3 + |k|^2 continues to 3 - k^2.
  OperatorSpec curved = two;
  curved.q_e(0, 0).add_term({0, 0}, 2.0);
  curved.q_e(0, 0).add_term({2, 0}, 1.0);
  curved.q_e(0, 0).add_term({0, 2}, 1.0);
  for (int i = 0; i < 10; ++i) {
    const TwoToTwo t = two_to_two(2, {1.0, std::sqrt(2.0)}, {std::sqrt(2.0), std::sqrt(2.0)}, 3.0 + 2 * u(rng),
                                  vec({u(rng) > 0.5 ? 1.0 : -1.0}), 0.0);
    const cplx base = smatrix_kernel(curved, poisson, t.incoming, t.outgoing, {0, 0, 0, 0});
    CHECK(std::abs(base) > 1e-8);
    for (double eta : {-1.0, 0.37, 1.0}) {
      std::vector<ShellPoint> in, out;
      for (const auto& p : t.incoming) in.push_back(boost(p, eta));
      for (const auto& p : t.outgoing) out.push_back(boost(p, eta));
      CHECK(std::abs(smatrix_kernel(curved, poisson, in, out, {0, 0, 0, 0}) - base) <= 1e-8 * std::abs(base));
    }
  }

  const TwoToTwo t = two_to_two(2, {1.0, 1.0}, {1.0, 1.0}, 3.0, vec({1.0}), 0.0);
  CHECK(code_of([&] { (void)smatrix_kernel(one, poisson, t.outgoing, t.incoming, {0, 0, 0, 0}); }) ==
        ErrorCode::validation);
  const TwoToTwo faster = two_to_two(2, {1.0, 1.0}, {1.0, 1.0}, 3.5, vec({1.0}), 0.2);
  CHECK(code_of([&] { (void)smatrix_kernel(two, poisson, faster.incoming, light.outgoing, {0, 0, 0, 0}); }) ==
        ErrorCode::validation);
  CHECK(code_of([&] { (void)smatrix_kernel(one, poisson, heavy.incoming, heavy.outgoing, {0, 0, 0, 0}); }) ==
        ErrorCode::validation);
  CHECK(code_of([&] { (void)smatrix_kernel(one, poisson, t.incoming, {t.outgoing[0]}, {0, 0, 0}); }) ==
        ErrorCode::validation);
}

TEST_CASE("Gram matrices") {
  const CumulantSet cum = cumulant_set(scalar_noise(0.5, 2.0, 0.5), 2);
  std::vector<TestFunction> fs;
  for (double m2 : {1.0, 2.0})
    for (double p : {-0.5, 0.0, 0.5}) fs.push_back(packet(vec({-omega(m2, p), p}), 0.15, scalar_weight(1.0)));

  const GramResult g1 = gram_matrix(no_dipole_scalar(2, {1.0}), cum, fs);
  const double norm1 = g1.matrix.operatorNorm();
  CHECK(g1.eigenvalues.minCoeff() >= -1e-8 * norm1);
  CHECK(g1.asymmetry < 1e-10);

  const GramResult g2 = gram_matrix(no_dipole_scalar(2, {1.0, 2.0}), cum, fs);
  CHECK(g2.eigenvalues.minCoeff() < -1e-3 * g2.matrix.operatorNorm());
  CHECK(g2.eigenvalues.maxCoeff() > 0);
  for (Eigen::Index i = 0; i + 1 < g2.eigenvalues.size(); ++i) CHECK(g2.eigenvalues(i) <= g2.eigenvalues(i + 1));
  const cplx direct = wightman2_smear(no_dipole_scalar(2, {1.0, 2.0}), cum, fs[1].conjugate(), fs[4]);
  CHECK(std::abs(g2.matrix(1, 4) - direct) <= 1e-6 * std::abs(direct) + 1e-15);

  const GramResult empty = gram_matrix(no_dipole_scalar(2, {1.0}), cum, {});
  CHECK(empty.matrix.size() == 0);
  CHECK(empty.eigenvalues.size() == 0);
}

TEST_CASE("shell representation matches the Euclidean two-point function") {
  const CumulantSet cum = cumulant_set(scalar_noise(1.0, 0, 0), 2);
  const OperatorSpec op = no_dipole_scalar(2, {1.0});
  std::vector<Eigen::VectorXd> xs;
  for (double x0 = 0.5; x0 <= 3.0001; x0 += 0.25) xs.push_back(vec({x0, 0.3}));
  const auto grid = two_point_position(op, cum, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const cplx shell = two_point_from_shells(op, cum, xs[i])(0, 0);
    CHECK(std::abs(shell.imag()) < 1e-10 * std::abs(shell));
    CHECK(std::abs(shell.real() / grid[i](0, 0) - 1) < 0.01);
    CHECK(shell.real() == doctest::Approx(std::cyl_bessel_k(0.0, xs[i].norm()) / (2 * kPi)).epsilon(1e-6));
  }
  CHECK(code_of([&] { (void)two_point_from_shells(op, cum, vec({0.0, 1.0})); }) == ErrorCode::validation);
}
