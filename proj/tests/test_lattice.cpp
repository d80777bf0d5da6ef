#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "spdelab/error.hpp"
#include "spdelab/lattice.hpp"
#include "spdelab/schwinger.hpp"

using namespace spdelab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

LatticeSpec small_lattice(int d = 2, int npts = 16, double spacing = 0.25) { return {d, npts, spacing}; }

std::vector<MomentTuple> two_point_tuples(const LatticeSpec& lat, int L) {
  std::vector<MomentTuple> out;
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    const auto k = lat.signed_mode(i);
    std::vector<int> minus(k.size());
    for (std::size_t c = 0; c < k.size(); ++c) minus[c] = -k[c];
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) out.push_back({{k, minus}, {a, b}});
  }
  return out;
}

}  // namespace

TEST_CASE("lattice validation") {
  CHECK(code_of([] { LatticeSpec{2, 15, 0.25}.validate(); }) == ErrorCode::invariant);
  CHECK(code_of([] { LatticeSpec{2, 16, 0.0}.validate(); }) == ErrorCode::invariant);
  CHECK_NOTHROW(small_lattice().validate());
}

TEST_CASE("mode bookkeeping") {
  const LatticeSpec lat = small_lattice(3, 8);
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    const auto k = lat.signed_mode(i);
    for (int v : k) CHECK((v >= -4 && v <= 3));
    CHECK(lat.mode_index(k) == i);
    const std::size_t p = lat.partner_index(i);
    const auto kp = lat.signed_mode(p);
    for (std::size_t c = 0; c < 3; ++c) CHECK((k[c] + kp[c]) % 8 == 0);
  }
  CHECK(lat.momentum(1) == doctest::Approx(2 * std::numbers::pi / (8 * 0.25)));
  const std::vector<int> nyq{4, 0, 0};
  const std::vector<int> neg{-4, 0, 0};
  CHECK(lat.mode_index(nyq) == lat.mode_index(neg));
  const Eigen::VectorXd disc = lat.momentum(std::vector<int>{1, 0, 0}, SymbolMode::discrete);
  CHECK(disc(0) == doctest::Approx(2 / 0.25 * std::sin(lat.momentum(1) * 0.25 / 2)));
}

TEST_CASE("transform conventions") {
  const LatticeSpec lat = small_lattice(2, 8, 0.5);
  FieldSample delta(lat, 1, FieldSample::Space::position);
  delta.at(0, 0) = 1.0;
  const FieldSample hat = to_momentum(delta);
  for (const auto& v : hat.values) CHECK(std::abs(v - 0.25) < 1e-15);  // eps^d
  const FieldSample back = to_position(hat);
  for (std::size_t i = 0; i < lat.sites(); ++i) CHECK(std::abs(back.at(i, 0) - delta.at(i, 0)) < 1e-15);

  // A plane wave lands on its mode with weight V.
  FieldSample wave(lat, 1, FieldSample::Space::position);
  const std::vector<int> mode{1, 2};
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    const std::size_t ix = i / 8, iy = i % 8;  // first axis slowest
    const double phase = lat.momentum(1) * ix * 0.5 + lat.momentum(2) * iy * 0.5;
    wave.at(i, 0) = std::polar(1.0, phase);
  }
  const FieldSample wave_hat = to_momentum(wave);
  CHECK(std::abs(wave_hat.at(lat.mode_index(mode), 0) - lat.volume()) < 1e-12);
}

TEST_CASE("solutions are real and Hermitian") {
  const OperatorSpec op = OperatorSpec::tensor(2, {1.0, 2.0}, 1.0);
  LevySpec levy = LevySpec::gaussian(0.8 * Eigen::MatrixXd::Identity(2, 2));
  levy.jumps.push_back(SphereComponent{1.5, 0.4});
  const LatticeSpec lat = small_lattice();
  Rng rng = stream(3, 0);
  const FieldSample noise = sample_noise_F(levy, lat, rng);
  const FieldSample modes = solve_spde_modes(op, noise);
  CHECK(modes.max_relative_hermitian_defect() == 0.0);
  const FieldSample field = solve_spde(op, noise);
  CHECK(field.max_relative_imag() < 1e-14);
}

TEST_CASE("odd Q_E is rejected by the lattice solver") {
  OperatorSpec op = OperatorSpec::scalar(2, {1.0, 2.0});
  op.q_e(0, 0).add_term({1, 0}, 1.0);
  const LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Identity(1, 1));
  const LatticeSpec lat = small_lattice();
  Rng rng = stream(1, 0);
  const FieldSample noise = sample_noise_F(levy, lat, rng);
  CHECK(code_of([&] { (void)solve_spde(op, noise); }) == ErrorCode::unsupported_operator);
}

TEST_CASE("moment tuples must conserve momentum") {
  const OperatorSpec op = OperatorSpec::scalar(2, {1.0});
  const LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Identity(1, 1));
  const LatticeSpec lat = small_lattice();
  const std::vector<MomentTuple> bad{{{{1, 0}, {0, 0}}, {0, 0}}};
  EstimatorOptions opt;
  opt.n_samples = 500;
  CHECK(code_of([&] { (void)estimate_moments(op, levy, lat, bad, opt); }) == ErrorCode::momentum_conservation);
  opt.allow_nonconserving = true;
  const auto est = estimate_moments(op, levy, lat, bad, opt);
  REQUIRE(est.size() == 2);
  CHECK(std::abs(est[0].value.real()) <= 4.5 * est[0].stderr_re);
}

TEST_CASE("estimates are bit-identical across worker counts") {
  const OperatorSpec op = OperatorSpec::scalar(2, {1.0, 2.0});
  LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Constant(1, 1, 0.5));
  levy.jumps.push_back(PairComponent{Eigen::VectorXd::Constant(1, 2.0), 0.5});
  const LatticeSpec lat = small_lattice(2, 8);
  std::vector<MomentTuple> tuples = two_point_tuples(lat, 1);
  tuples.push_back({{{1, 0}, {-1, 0}, {2, 1}, {-2, -1}}, {0, 0, 0, 0}});
  EstimatorOptions opt;
  opt.n_samples = 700;
  opt.master_seed = 17;
  const auto one = estimate_moments(op, levy, lat, tuples, opt);
  opt.workers = 3;
  const auto three = estimate_moments(op, levy, lat, tuples, opt);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].value == three[i].value);
    CHECK(one[i].stderr_re == three[i].stderr_re);
  }
}

TEST_CASE("free-field two-point function on a small lattice") {
  const OperatorSpec op = OperatorSpec::scalar(2, {1.0});
  const LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Identity(1, 1));
  const LatticeSpec lat = small_lattice();
  EstimatorOptions opt;
  opt.n_samples = 4000;
  opt.master_seed = 271828;
  const auto est = estimate_moments(op, levy, lat, two_point_tuples(lat, 1), opt);
  const CumulantSet cum = cumulant_set(levy, 2);
  std::vector<double> rel;
  double worst = 0.0;
  for (const auto& e : est) {
    if (!e.truncated) continue;
    // Independent oracle: 1 / (|k|^2 + 1) at the grid momentum.
    const Eigen::VectorXd k = lat.momentum(e.tuple.modes[0]);
    const double exact = 1.0 / (k.squaredNorm() + 1.0);
    CHECK(lattice_truncated_kernel(op, cum, lat, e.tuple.modes, e.tuple.components).real() ==
          doctest::Approx(exact).epsilon(1e-14));
    rel.push_back(std::abs(e.value.real() / exact - 1));
    worst = std::max(worst, std::abs(e.value.real() - exact) / e.stderr_re);
  }
  CHECK(oracle::median(rel) < 0.05);
  CHECK(worst < 4.5);
}

TEST_CASE("Nyquist modes keep only the even part of the numerator") {
  const OperatorSpec op = OperatorSpec::tensor(2, {1.0, 2.0}, 1.0);
  const LatticeSpec lat = small_lattice(2, 8, 0.5);
  const double kn = lat.momentum(4);
  const double k1 = lat.momentum(1);
  // Q = k k^T + I; the k0 k1 entries vanish once k1 sits at Nyquist.
  const std::vector<int> edge{1, -4};
  const Eigen::MatrixXd q = lattice_numerator(op, lat, edge);
  CHECK(q(0, 0) == doctest::Approx(k1 * k1 + 1));
  CHECK(q(1, 1) == doctest::Approx(kn * kn + 1));
  CHECK(q(0, 1) == 0.0);
  CHECK(q(1, 0) == 0.0);
  const std::vector<int> inner{1, 3};
  CHECK(lattice_numerator(op, lat, inner)(0, 1) == doctest::Approx(k1 * lat.momentum(3)));

  // The solver and the kernel agree at every mode, Nyquist rows included.
  LevySpec levy = LevySpec::gaussian(0.8 * Eigen::MatrixXd::Identity(2, 2));
  EstimatorOptions opt;
  opt.n_samples = 4000;
  opt.master_seed = 271828;
  const auto est = estimate_moments(op, levy, lat, two_point_tuples(lat, 2), opt);
  const CumulantSet cum = cumulant_set(levy, 2);
  double worst = 0.0;
  for (const auto& e : est) {
    if (!e.truncated) continue;
    const double k = lattice_truncated_kernel(op, cum, lat, e.tuple.modes, e.tuple.components).real();
    worst = std::max(worst, std::abs(e.value.real() - k) / std::max(e.stderr_re, 1e-12 * std::abs(k)));
  }
  CHECK(worst < 4.5);
}

TEST_CASE("discrete symbol switches both sides consistently") {
  const OperatorSpec op = OperatorSpec::scalar(2, {1.0});
  const LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Identity(1, 1));
  const LatticeSpec lat = small_lattice(2, 8, 0.5);
  EstimatorOptions opt;
  opt.n_samples = 4000;
  opt.symbol = SymbolMode::discrete;
  const std::vector<MomentTuple> tuples{{{{3, 0}, {-3, 0}}, {0, 0}}, {{{4, 4}, {-4, -4}}, {0, 0}}};
  const auto est = estimate_moments(op, levy, lat, tuples, opt);
  for (const auto& e : est) {
    const Eigen::VectorXd k = lat.momentum(e.tuple.modes[0]);
    double k2 = 0;
    for (int c = 0; c < 2; ++c) k2 += std::pow(2 / 0.5 * std::sin(k(c) * 0.5 / 2), 2);
    const double exact = 1.0 / (k2 + 1.0);
    CHECK(std::abs(e.value.real() - exact) <= 4 * e.stderr_re);
  }
}

TEST_CASE("plain four-point moments match the partition sum") {
  const OperatorSpec op = OperatorSpec::scalar(2, {1.0, 2.0});
  LevySpec levy = LevySpec::gaussian(Eigen::MatrixXd::Constant(1, 1, 0.5));
  levy.jumps.push_back(PairComponent{Eigen::VectorXd::Constant(1, 2.0), 0.5});
  const LatticeSpec lat = small_lattice(2, 8, 0.5);
  const std::vector<MomentTuple> tuples{{{{1, 0}, {-1, 0}, {1, 0}, {-1, 0}}, {0, 0, 0, 0}},
                                        {{{1, 1}, {0, -1}, {-1, 0}, {0, 0}}, {0, 0, 0, 0}}};
  EstimatorOptions opt;
  opt.n_samples = 20000;
  const auto est = estimate_moments(op, levy, lat, tuples, opt);
  const CumulantSet cum = cumulant_set(levy, 4);
  for (const auto& e : est) {
    const auto analytic = e.truncated ? lattice_truncated_kernel(op, cum, lat, e.tuple.modes, e.tuple.components)
                                      : lattice_moment_density(op, cum, lat, e.tuple.modes, e.tuple.components);
    CHECK(std::abs(e.value.real() - analytic.real()) <= 4 * e.stderr_re);
  }
}
