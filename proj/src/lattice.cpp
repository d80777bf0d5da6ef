#include "spdelab/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include "spdelab/error.hpp"
#include "spdelab/partitions.hpp"

namespace spdelab {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::int64_t kBlockSize = 64;

}  // namespace

SymbolMode symbol_mode_from_name(const std::string& name) {
  if (name == "continuum") return SymbolMode::continuum;
  if (name == "discrete") return SymbolMode::discrete;
  fail(ErrorCode::schema, "run.symbol must be continuum|discrete, got '" + name + "'");
}

std::string symbol_mode_name(SymbolMode mode) {
  return mode == SymbolMode::continuum ? "continuum" : "discrete";
}

// ---------------------------------------------------------------------------
// LatticeSpec

void LatticeSpec::validate() const {
  require(d >= 1, ErrorCode::validation, "lattice.d must be >= 1");
  require(npts >= 4 && npts % 2 == 0, ErrorCode::invariant, "lattice.npts must be even and >= 4");
  require(std::isfinite(spacing) && spacing > 0, ErrorCode::invariant, "lattice.spacing must be > 0");
  double sites_d = std::pow(static_cast<double>(npts), d);
  require(sites_d <= double(1 << 26), ErrorCode::resource, "lattice has more than 2^26 sites");
}

std::size_t LatticeSpec::sites() const {
  std::size_t s = 1;
  for (int j = 0; j < d; ++j) s *= static_cast<std::size_t>(npts);
  return s;
}

double LatticeSpec::cell_volume() const { return std::pow(spacing, d); }
double LatticeSpec::volume() const { return std::pow(length(), d); }

double LatticeSpec::momentum(int n) const {
  return 2.0 * std::numbers::pi * n / length();
}

Eigen::VectorXd LatticeSpec::momentum(std::span<const int> mode, SymbolMode symbol) const {
  Eigen::VectorXd k(d);
  for (int j = 0; j < d; ++j) {
    const double kj = momentum(mode[static_cast<std::size_t>(j)]);
    k(j) = symbol == SymbolMode::continuum ? kj : (2.0 / spacing) * std::sin(0.5 * kj * spacing);
  }
  return k;
}

Eigen::MatrixXd lattice_numerator(const OperatorSpec& op, const LatticeSpec& lat, std::span<const int> mode,
                                  SymbolMode symbol) {
  const Eigen::VectorXd k = lat.momentum(mode, symbol);
  std::vector<int> nyquist;
  if (lat.npts % 2 == 0)
    for (int j = 0; j < lat.d; ++j)
      if (((mode[static_cast<std::size_t>(j)] % lat.npts) + lat.npts) % lat.npts == lat.npts / 2) nyquist.push_back(j);
  if (nyquist.empty()) return op.q_e.evaluate(k);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(op.L, op.L);
  const int patterns = 1 << nyquist.size();
  for (int s = 0; s < patterns; ++s) {
    Eigen::VectorXd flipped = k;
    for (std::size_t b = 0; b < nyquist.size(); ++b)
      if (s & (1 << b)) flipped(nyquist[b]) = -flipped(nyquist[b]);
    sum += op.q_e.evaluate(flipped);
  }
  return sum / patterns;
}

Eigen::MatrixXd lattice_symbol_inverse(const OperatorSpec& op, const LatticeSpec& lat, std::span<const int> mode,
                                       SymbolMode symbol) {
  return lattice_numerator(op, lat, mode, symbol) * green_factor(op, lat.momentum(mode, symbol).squaredNorm());
}

std::size_t LatticeSpec::mode_index(std::span<const int> mode) const {
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) {
    const int c = ((mode[static_cast<std::size_t>(j)] % npts) + npts) % npts;
    idx = idx * static_cast<std::size_t>(npts) + static_cast<std::size_t>(c);
  }
  return idx;
}

std::vector<int> LatticeSpec::signed_mode(std::size_t index) const {
  std::vector<int> mode(static_cast<std::size_t>(d));
  for (int j = d - 1; j >= 0; --j) {
    const int c = static_cast<int>(index % static_cast<std::size_t>(npts));
    index /= static_cast<std::size_t>(npts);
    mode[static_cast<std::size_t>(j)] = c >= npts / 2 ? c - npts : c;
  }
  return mode;
}

std::size_t LatticeSpec::partner_index(std::size_t index) const {
  std::size_t out = 0;
  std::size_t stride = 1;
  for (int j = 0; j < d; ++j) {
    const std::size_t c = index % static_cast<std::size_t>(npts);
    index /= static_cast<std::size_t>(npts);
    out += ((static_cast<std::size_t>(npts) - c) % static_cast<std::size_t>(npts)) * stride;
    stride *= static_cast<std::size_t>(npts);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FieldSample

FieldSample::FieldSample(const LatticeSpec& lat, int L_, Space space_)
    : lattice(lat), L(L_), space(space_), values(lat.sites() * static_cast<std::size_t>(L_)) {}

double FieldSample::max_relative_imag() const {
  double scale = 0.0, imag = 0.0;
  for (const auto& v : values) {
    scale = std::max(scale, std::abs(v));
    imag = std::max(imag, std::abs(v.imag()));
  }
  return scale > 0 ? imag / scale : 0.0;
}

double FieldSample::max_relative_hermitian_defect() const {
  double scale = 0.0, defect = 0.0;
  const std::size_t n = lattice.sites();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = lattice.partner_index(i);
    for (int a = 0; a < L; ++a) {
      scale = std::max(scale, std::abs(at(i, a)));
      defect = std::max(defect, std::abs(at(p, a) - std::conj(at(i, a))));
    }
  }
  return scale > 0 ? defect / scale : 0.0;
}

// ---------------------------------------------------------------------------
// LatticeFft

LatticeFft::LatticeFft(const LatticeSpec& lat, int L) : lat_(lat), L_(L) {
  lat.validate();
  std::vector<int> dims(static_cast<std::size_t>(lat.d), lat.npts);
  std::vector<std::complex<double>> scratch(lat.sites() * static_cast<std::size_t>(L));
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_many_dft(lat.d, dims.data(), L, buf, nullptr, L, 1, buf, nullptr, L, 1,
                                     FFTW_FORWARD, flags);
  backward_plan_ = fftw_plan_many_dft(lat.d, dims.data(), L, buf, nullptr, L, 1, buf, nullptr, L, 1,
                                      FFTW_BACKWARD, flags);
  if (!forward_plan_ || !backward_plan_) fail(ErrorCode::internal, "FFTW planning failed");
}

LatticeFft::~LatticeFft() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void LatticeFft::forward(std::span<std::complex<double>> data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), buf, buf);
  const double scale = lat_.cell_volume();
  for (auto& v : data) v *= scale;
}

void LatticeFft::backward(std::span<std::complex<double>> data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), buf, buf);
  const double scale = 1.0 / lat_.volume();
  for (auto& v : data) v *= scale;
}

FieldSample to_momentum(const FieldSample& field) {
  require(field.space == FieldSample::Space::position, ErrorCode::validation,
          "to_momentum expects a position-space field");
  FieldSample out = field;
  out.space = FieldSample::Space::momentum;
  LatticeFft(field.lattice, field.L).forward(out.values);
  return out;
}

FieldSample to_position(const FieldSample& field) {
  require(field.space == FieldSample::Space::momentum, ErrorCode::validation,
          "to_position expects a momentum-space field");
  FieldSample out = field;
  out.space = FieldSample::Space::position;
  LatticeFft(field.lattice, field.L).backward(out.values);
  return out;
}

void hermitize(FieldSample& field) {
  const std::size_t n = field.lattice.sites();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = field.lattice.partner_index(i);
    if (p < i) continue;
    for (int a = 0; a < field.L; ++a) {
      if (p == i) {
        field.at(i, a) = field.at(i, a).real();
      } else {
        const std::complex<double> avg = 0.5 * (field.at(i, a) + std::conj(field.at(p, a)));
        field.at(i, a) = avg;
        field.at(p, a) = std::conj(avg);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Noise and solver

namespace {

void check_compatible(const LevySpec& levy, const OperatorSpec& op, const LatticeSpec& lat) {
  levy.validate();
  op.validate();
  lat.validate();
  require(levy.L == op.L, ErrorCode::cross_field, "levy.L must equal operator.L");
  require(lat.d == op.d, ErrorCode::cross_field, "lattice.d must equal operator.d");
}

void require_even_symbol(const OperatorSpec& op) {
  require(op.q_e.is_even(), ErrorCode::unsupported_operator,
          "lattice solver needs Q_E with only even-degree monomials (real solutions)");
}

// Per-mode multipliers shared by all samples of one run.
class SpdeModel {
 public:
  SpdeModel(const LevySpec& levy, const OperatorSpec& op, const LatticeSpec& lat, SymbolMode symbol)
      : lat_(lat),
        L_(levy.L),
        increments_(levy, lat.cell_volume()),
        fft_(lat, levy.L) {
    check_compatible(levy, op, lat);
    require_even_symbol(op);
    const Eigen::MatrixXd sbar = sigma_bar(levy);
    const UniPoly p = p_polynomial(op);
    const std::size_t n = lat.sites();
    const auto LL = static_cast<std::size_t>(L_ * L_);
    gauss_multiplier_.resize(n * LL);
    symbol_.resize(n * LL);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<int> mode = lat.signed_mode(i);
      const Eigen::VectorXd k = lat.momentum(mode, symbol);
      const double pk = p(k.squaredNorm());
      if (pk < 0) fail(ErrorCode::internal, "p(|k|^2) < 0 at a grid momentum");
      const Eigen::MatrixXd g = sbar * std::sqrt(pk);
      const Eigen::MatrixXd s = lattice_symbol_inverse(op, lat, mode, symbol);
      for (int a = 0; a < L_; ++a)
        for (int b = 0; b < L_; ++b) {
          gauss_multiplier_[i * LL + static_cast<std::size_t>(a * L_ + b)] = g(a, b);
          symbol_[i * LL + static_cast<std::size_t>(a * L_ + b)] = s(a, b);
        }
    }
  }

  const LatticeSpec& lattice() const { return lat_; }
  int L() const { return L_; }
  const LatticeFft& fft() const { return fft_; }

  /// Position-space site densities F_x = X_x / eps^d.
  void draw_levy_noise(Rng& rng, FieldSample& out) const {
    const double inv_cell = 1.0 / lat_.cell_volume();
    std::vector<double> x(static_cast<std::size_t>(L_));
    for (std::size_t s = 0; s < lat_.sites(); ++s) {
      increments_.draw(rng, x);
      for (int a = 0; a < L_; ++a) out.at(s, a) = x[static_cast<std::size_t>(a)] * inv_cell;
    }
  }

  /// Unit-density white noise xi, already transformed to momentum space and
  /// multiplied by sigma_bar sqrt(p(|k|^2)); Hermitized.
  void draw_gauss_noise_modes(Rng& rng, FieldSample& out) const {
    const double amp = 1.0 / std::sqrt(lat_.cell_volume());
    std::normal_distribution<double> normal;
    for (auto& v : out.values) v = amp * normal(rng);
    fft_.forward(out.values);
    apply(gauss_multiplier_, out);
    hermitize(out);
  }

  /// out <- symbol(k) * modes(k), Hermitized.
  void apply_symbol(FieldSample& modes) const {
    apply(symbol_, modes);
    hermitize(modes);
  }

  /// Momentum-space solution for one sample.
  void solution_modes(Rng& rng, FieldSample& noise, FieldSample& gauss) const {
    draw_levy_noise(rng, noise);
    draw_gauss_noise_modes(rng, gauss);
    fft_.forward(noise.values);
    for (std::size_t i = 0; i < noise.values.size(); ++i) noise.values[i] += gauss.values[i];
    apply_symbol(noise);
  }

 private:
  void apply(const std::vector<double>& mult, FieldSample& f) const {
    const auto LL = static_cast<std::size_t>(L_ * L_);
    std::vector<std::complex<double>> tmp(static_cast<std::size_t>(L_));
    for (std::size_t i = 0; i < lat_.sites(); ++i) {
      const double* m = &mult[i * LL];
      for (int a = 0; a < L_; ++a) {
        std::complex<double> acc = 0.0;
        for (int b = 0; b < L_; ++b) acc += m[a * L_ + b] * f.at(i, b);
        tmp[static_cast<std::size_t>(a)] = acc;
      }
      for (int a = 0; a < L_; ++a) f.at(i, a) = tmp[static_cast<std::size_t>(a)];
    }
  }

  LatticeSpec lat_;
  int L_;
  IncrementSampler increments_;
  LatticeFft fft_;
  std::vector<double> gauss_multiplier_;
  std::vector<double> symbol_;
};

void zero_imag(FieldSample& f) {
  for (auto& v : f.values) v = v.real();
}

}  // namespace

FieldSample sample_noise_F(const LevySpec& levy, const LatticeSpec& lat, Rng& rng) {
  levy.validate();
  lat.validate();
  FieldSample f(lat, levy.L, FieldSample::Space::position);
  const IncrementSampler inc(levy, lat.cell_volume());
  const double inv_cell = 1.0 / lat.cell_volume();
  std::vector<double> x(static_cast<std::size_t>(levy.L));
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    inc.draw(rng, x);
    for (int a = 0; a < levy.L; ++a) f.at(s, a) = x[static_cast<std::size_t>(a)] * inv_cell;
  }
  return f;
}

FieldSample sample_noise_Fg(const LevySpec& levy, const OperatorSpec& op, const LatticeSpec& lat,
                            Rng& rng, SymbolMode symbol) {
  check_compatible(levy, op, lat);
  const Eigen::MatrixXd sbar = sigma_bar(levy);
  const UniPoly p = p_polynomial(op);
  FieldSample f(lat, levy.L, FieldSample::Space::position);
  const double amp = 1.0 / std::sqrt(lat.cell_volume());
  std::normal_distribution<double> normal;
  for (auto& v : f.values) v = amp * normal(rng);
  const LatticeFft fft(lat, levy.L);
  fft.forward(f.values);
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    const Eigen::VectorXd k = lat.momentum(lat.signed_mode(i), symbol);
    const double pk = p(k.squaredNorm());
    if (pk < 0) fail(ErrorCode::internal, "p(|k|^2) < 0 at a grid momentum");
    Eigen::VectorXcd v(levy.L);
    for (int a = 0; a < levy.L; ++a) v(a) = f.at(i, a);
    v = (sbar * std::sqrt(pk)).cast<std::complex<double>>() * v;
    for (int a = 0; a < levy.L; ++a) f.at(i, a) = v(a);
  }
  f.space = FieldSample::Space::momentum;
  hermitize(f);
  fft.backward(f.values);
  f.space = FieldSample::Space::position;
  zero_imag(f);
  return f;
}

FieldSample solve_spde_modes(const OperatorSpec& op, const FieldSample& noise, SymbolMode symbol) {
  op.validate();
  require_even_symbol(op);
  require(noise.space == FieldSample::Space::position, ErrorCode::validation,
          "solve_spde expects a position-space noise field");
  require(noise.L == op.L, ErrorCode::cross_field, "noise components must equal operator.L");
  require(noise.lattice.d == op.d, ErrorCode::cross_field, "lattice.d must equal operator.d");
  FieldSample modes = to_momentum(noise);
  const auto& lat = noise.lattice;
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    const Eigen::MatrixXd s = lattice_symbol_inverse(op, lat, lat.signed_mode(i), symbol);
    Eigen::VectorXcd v(op.L);
    for (int a = 0; a < op.L; ++a) v(a) = modes.at(i, a);
    v = s.cast<std::complex<double>>() * v;
    for (int a = 0; a < op.L; ++a) modes.at(i, a) = v(a);
  }
  hermitize(modes);
  return modes;
}

FieldSample solve_spde(const OperatorSpec& op, const FieldSample& noise, SymbolMode symbol) {
  FieldSample out = to_position(solve_spde_modes(op, noise, symbol));
  zero_imag(out);
  return out;
}

void sample_solutions(const OperatorSpec& op, const LevySpec& levy, const LatticeSpec& lat,
                      std::int64_t n_samples, std::uint64_t master_seed, SymbolMode symbol,
                      const std::function<void(std::int64_t, const FieldSample&)>& sink) {
  const SpdeModel model(levy, op, lat, symbol);
  FieldSample noise(lat, levy.L, FieldSample::Space::position);
  FieldSample gauss(lat, levy.L, FieldSample::Space::position);
  for (std::int64_t s = 0; s < n_samples; ++s) {
    Rng rng = stream(master_seed, static_cast<std::uint64_t>(s));
    noise.space = FieldSample::Space::position;
    model.solution_modes(rng, noise, gauss);
    model.fft().backward(noise.values);
    noise.space = FieldSample::Space::position;
    zero_imag(noise);
    sink(s, noise);
  }
}

// ---------------------------------------------------------------------------
// Moment estimation

namespace {

struct TupleLayout {
  int order;
  std::size_t subsets;  // 2^n - 1 nonempty masks
  std::size_t vars;     // 2 * subsets real variables
  std::size_t offset;   // into the accumulator
  std::vector<std::size_t> mode_index;
  std::vector<int> components;
};

std::size_t accumulator_size(std::size_t vars) { return vars + vars * (vars + 1) / 2; }

void accumulate_sample(const std::vector<TupleLayout>& layouts, const FieldSample& modes,
                       std::vector<double>& acc) {
  std::vector<std::complex<double>> prod;
  std::vector<double> x;
  for (const auto& t : layouts) {
    prod.assign(t.subsets + 1, 1.0);
    for (std::size_t mask = 1; mask <= t.subsets; ++mask) {
      const int low = std::countr_zero(mask);
      const auto j = static_cast<std::size_t>(low);
      prod[mask] = prod[mask & (mask - 1)] * modes.at(t.mode_index[j], t.components[j]);
    }
    x.resize(t.vars);
    for (std::size_t m = 1; m <= t.subsets; ++m) {
      x[2 * (m - 1)] = prod[m].real();
      x[2 * (m - 1) + 1] = prod[m].imag();
    }
    double* sums = &acc[t.offset];
    double* cross = sums + t.vars;
    std::size_t c = 0;
    for (std::size_t i = 0; i < t.vars; ++i) {
      sums[i] += x[i];
      for (std::size_t k = i; k < t.vars; ++k) cross[c++] += x[i] * x[k];
    }
  }
}

struct Finalized {
  std::complex<double> value;
  double se_re;
  double se_im;
};

// Value and infinitesimal-jackknife standard errors of a polynomial
// statistic sum_pi w_pi prod_{B in pi} mean_B of the subset means.
Finalized finalize(const TupleLayout& t, const double* acc, std::int64_t n_samples,
                   const std::vector<Partition>& partitions, bool truncated) {
  const auto n = static_cast<double>(n_samples);
  const double* sums = acc;
  const double* cross = acc + t.vars;
  std::vector<std::complex<double>> mean(t.subsets + 1);
  for (std::size_t m = 1; m <= t.subsets; ++m)
    mean[m] = {sums[2 * (m - 1)] / n, sums[2 * (m - 1) + 1] / n};

  std::complex<double> value = 0.0;
  std::vector<std::complex<double>> grad(t.subsets + 1, 0.0);
  for (const auto& p : partitions) {
    if (!truncated && p.size() != 1) continue;
    const double w = truncated ? moebius_weight(p.size()) : 1.0;
    std::complex<double> all = w;
    for (BlockMask b : p) all *= mean[b];
    value += all;
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::complex<double> others = w;
      for (std::size_t j = 0; j < p.size(); ++j)
        if (j != i) others *= mean[p[j]];
      grad[p[i]] += others;
    }
  }

  std::vector<double> g_re(t.vars), g_im(t.vars);
  for (std::size_t m = 1; m <= t.subsets; ++m) {
    g_re[2 * (m - 1)] = grad[m].real();
    g_re[2 * (m - 1) + 1] = -grad[m].imag();
    g_im[2 * (m - 1)] = grad[m].imag();
    g_im[2 * (m - 1) + 1] = grad[m].real();
  }
  double var_re = 0.0, var_im = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < t.vars; ++i) {
    for (std::size_t k = i; k < t.vars; ++k) {
      const double cov = (cross[c++] - n * (sums[i] / n) * (sums[k] / n)) / (n - 1.0);
      const double f = i == k ? 1.0 : 2.0;
      var_re += f * g_re[i] * cov * g_re[k];
      var_im += f * g_im[i] * cov * g_im[k];
    }
  }
  return {value, std::sqrt(std::max(var_re, 0.0) / n), std::sqrt(std::max(var_im, 0.0) / n)};
}

}  // namespace

std::vector<MomentEstimate> estimate_moments(const OperatorSpec& op, const LevySpec& levy,
                                             const LatticeSpec& lat,
                                             const std::vector<MomentTuple>& tuples,
                                             const EstimatorOptions& options) {
  check_compatible(levy, op, lat);
  require(options.n_samples >= 2, ErrorCode::validation, "n_samples must be >= 2");
  require(options.workers >= 1, ErrorCode::validation, "workers must be >= 1");

  std::vector<TupleLayout> layouts;
  std::size_t total = 0;
  for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
    const auto& tup = tuples[ti];
    const int n = tup.order();
    const std::string where = "moment tuple " + std::to_string(ti);
    require(n >= 1, ErrorCode::validation, where + ": order must be >= 1");
    if (n > options.max_order)
      fail(ErrorCode::resource, where + ": order exceeds the cap " + std::to_string(options.max_order));
    require(tup.modes.size() == tup.components.size(), ErrorCode::validation,
            where + ": momenta and components must have equal length");
    std::vector<long> sum(static_cast<std::size_t>(lat.d), 0);
    TupleLayout t;
    t.order = n;
    t.subsets = (std::size_t{1} << n) - 1;
    t.vars = 2 * t.subsets;
    t.offset = total;
    for (int j = 0; j < n; ++j) {
      const auto& mode = tup.modes[static_cast<std::size_t>(j)];
      require(static_cast<int>(mode.size()) == lat.d, ErrorCode::validation,
              where + ": each mode vector must have d entries");
      for (int c = 0; c < lat.d; ++c) {
        const int v = mode[static_cast<std::size_t>(c)];
        require(v >= -lat.npts / 2 && v <= lat.npts / 2, ErrorCode::validation,
                where + ": mode entries must lie in [-npts/2, npts/2]");
        sum[static_cast<std::size_t>(c)] += v;
      }
      const int comp = tup.components[static_cast<std::size_t>(j)];
      require(comp >= 0 && comp < op.L, ErrorCode::validation, where + ": component out of range");
      t.mode_index.push_back(lat.mode_index(mode));
      t.components.push_back(comp);
    }
    if (!options.allow_nonconserving)
      for (long s : sum)
        require(s == 0, ErrorCode::momentum_conservation,
                where + ": momenta must sum to zero on the grid");
    total += accumulator_size(t.vars);
    layouts.push_back(std::move(t));
  }

  const SpdeModel model(levy, op, lat, options.symbol);
  const std::int64_t n_blocks = (options.n_samples + kBlockSize - 1) / kBlockSize;
  std::vector<double> merged(total, 0.0);

  auto run_block = [&](std::int64_t block, std::vector<double>& acc) {
    acc.assign(total, 0.0);
    FieldSample noise(lat, levy.L, FieldSample::Space::position);
    FieldSample gauss(lat, levy.L, FieldSample::Space::position);
    const std::int64_t begin = block * kBlockSize;
    const std::int64_t end = std::min(options.n_samples, begin + kBlockSize);
    for (std::int64_t s = begin; s < end; ++s) {
      Rng rng = stream(options.master_seed, static_cast<std::uint64_t>(s));
      model.solution_modes(rng, noise, gauss);
      accumulate_sample(layouts, noise, acc);
    }
  };

  // Blocks are processed in rounds of `workers` and always merged in block
  // order, so the floating-point reduction is independent of the worker count.
  const auto workers = static_cast<std::int64_t>(options.workers);
  std::vector<std::vector<double>> round_acc(static_cast<std::size_t>(workers));
  for (std::int64_t first = 0; first < n_blocks; first += workers) {
    const std::int64_t count = std::min(workers, n_blocks - first);
    if (count == 1) {
      run_block(first, round_acc[0]);
    } else {
      std::vector<std::thread> pool;
      for (std::int64_t w = 0; w < count; ++w)
        pool.emplace_back(run_block, first + w, std::ref(round_acc[static_cast<std::size_t>(w)]));
      for (auto& th : pool) th.join();
    }
    for (std::int64_t w = 0; w < count; ++w) {
      const auto& acc = round_acc[static_cast<std::size_t>(w)];
      for (std::size_t i = 0; i < total; ++i) merged[i] += acc[i];
    }
  }

  const double inv_volume = 1.0 / lat.volume();
  std::vector<MomentEstimate> out;
  for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
    const auto& t = layouts[ti];
    const auto partitions = set_partitions(t.order, options.max_order);
    for (bool truncated : {false, true}) {
      const Finalized f = finalize(t, &merged[t.offset], options.n_samples, partitions, truncated);
      MomentEstimate e;
      e.tuple = tuples[ti];
      e.truncated = truncated;
      e.value = f.value * inv_volume;
      e.stderr_re = f.se_re * inv_volume;
      e.stderr_im = f.se_im * inv_volume;
      e.n_samples = options.n_samples;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace spdelab
