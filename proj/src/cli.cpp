#include "spdelab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "spdelab/error.hpp"
#include "spdelab/schwinger.hpp"

namespace spdelab {

namespace {

using nlohmann::json;

constexpr double kZThreshold = 4.0;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_modes(const std::vector<std::vector<int>>& modes) {
  std::string s;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    if (j) s += ';';
    for (std::size_t c = 0; c < modes[j].size(); ++c) {
      if (c) s += ' ';
      s += std::to_string(modes[j][c]);
    }
  }
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) s += ';';
    s += std::to_string(v[j]);
  }
  return s;
}

const char* kCsvHeader = "source,momenta,components,order,kind,re,im,stderr,n_samples,seed,config_hash";

std::string csv_row(const MomentEstimate& e, const ModelConfig& config, const std::string& hash) {
  return "mc," + join_modes(e.tuple.modes) + "," + join_ints(e.tuple.components) + "," +
         std::to_string(e.tuple.order()) + "," + (e.truncated ? "truncated" : "plain") + "," +
         num(e.value.real()) + "," + num(e.value.imag()) + "," + num(e.stderr_re) + "," +
         std::to_string(e.n_samples) + "," + std::to_string(config.run.seed) + "," + hash;
}

const LatticeSpec& need_lattice(const ModelConfig& config) {
  require(config.lattice.has_value(), ErrorCode::configuration, "this subcommand needs a lattice section");
  return *config.lattice;
}

std::vector<MomentEstimate> run_estimates(const ModelConfig& config) {
  const std::vector<MomentTuple> tuples = requested_tuples(config);
  require(!tuples.empty(), ErrorCode::configuration,
          "no moment tuples requested (set moments.tuples or moments.all_two_point)");
  EstimatorOptions options;
  options.n_samples = config.run.n_samples;
  options.master_seed = config.run.seed;
  options.workers = config.run.workers;
  options.symbol = config.run.symbol;
  options.max_order = config.moments.max_order;
  return estimate_moments(config.op, config.levy, need_lattice(config), tuples, options);
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json packet_json(const TestFunction& f) {
  json weights = json::array();
  for (Eigen::Index a = 0; a < f.weights.size(); ++a) weights.push_back(complex_json(f.weights(a)));
  std::vector<double> center(f.center.data(), f.center.data() + f.center.size());
  return {{"center", center}, {"width", f.width}, {"weights", weights}};
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json record(const std::string& kind, const ModelConfig& config, const std::string& hash) {
  return {{"kind", kind}, {"seed", config.run.seed}, {"config_hash", hash}, {"regulator", config.run.regulator}};
}

int cmd_validate(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  json r = record("validate", config, hash);
  bool ok = true;
  if (config.op.tau) {
    const CovarianceReport q = check_Q_covariance(config.op, 100, config.run.seed, 1e-10);
    const CovarianceReport l = check_levy_invariance(config.levy, *config.op.tau, 100, config.run.seed, 1e-10);
    r["q_covariance"] = {{"passed", q.passed}, {"worst_violation", q.worst_violation}};
    r["levy_invariance"] = {{"passed", l.passed}, {"worst_violation", l.worst_violation}};
    ok = q.passed && l.passed;
  }
  if (config.op.no_dipole) r["partial_fractions"] = partial_fractions(config.op);
  r["passed"] = ok;
  out << r.dump() << '\n';
  return ok ? kExitOk : kExitFail;
}

int cmd_sample(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  const LatticeSpec& lat = need_lattice(config);
  sample_solutions(config.op, config.levy, lat, config.run.n_samples, config.run.seed, config.run.symbol,
                   [&](std::int64_t index, const FieldSample& field) {
                     json r = record("field", config, hash);
                     r.erase("regulator");
                     std::vector<double> values;
                     values.reserve(field.values.size());
                     for (const auto& v : field.values) values.push_back(v.real());
                     r["sample"] = index;
                     r["lattice"] = {{"d", lat.d}, {"npts", lat.npts}, {"spacing", lat.spacing}};
                     r["L"] = field.L;
                     r["values"] = std::move(values);
                     out << r.dump() << '\n';
                   });
  return kExitOk;
}

int cmd_moments(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  const auto estimates = run_estimates(config);
  out << kCsvHeader << '\n';
  for (const auto& e : estimates) out << csv_row(e, config, hash) << '\n';
  return kExitOk;
}

int cmd_compare(const ModelConfig& config, std::ostream& out, std::ostream& log, const std::string& hash) {
  const LatticeSpec& lat = need_lattice(config);
  const auto estimates = run_estimates(config);
  const CumulantSet cumulants = cumulant_set(config.levy, config.moments.max_order);
  out << kCsvHeader << ",analytic_re,analytic_im,z,pass\n";
  double worst = 0.0;
  std::size_t failures = 0;
  for (const auto& e : estimates) {
    const std::complex<double> analytic =
        e.truncated ? lattice_truncated_kernel(config.op, cumulants, lat, e.tuple.modes, e.tuple.components,
                                               config.run.symbol)
                    : lattice_moment_density(config.op, cumulants, lat, e.tuple.modes, e.tuple.components,
                                             config.run.symbol, config.moments.max_order);
    const double diff = e.value.real() - analytic.real();
    const double z = diff == 0.0 ? 0.0 : diff / e.stderr_re;
    const bool pass = std::abs(z) <= kZThreshold;
    worst = std::max(worst, std::abs(z));
    if (!pass) ++failures;
    out << csv_row(e, config, hash) << ',' << num(analytic.real()) << ',' << num(analytic.imag()) << ','
        << num(z) << ',' << (pass ? "true" : "false") << '\n';
  }
  log << "compare: " << estimates.size() << " rows, max |z| = " << num(worst) << ", " << failures
      << " above " << kZThreshold << ": " << (failures == 0 ? "PASS" : "FAIL") << '\n';
  return failures == 0 ? kExitOk : kExitFail;
}

int cmd_wightman(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  const auto& mk = config.minkowski;
  require(!mk.wightman.empty(), ErrorCode::configuration, "minkowski.wightman lists no packet tuples");
  int max_order = 2;
  for (const auto& list : mk.wightman) max_order = std::max(max_order, static_cast<int>(list.size()));
  const CumulantSet cumulants = cumulant_set(config.levy, max_order);
  for (const auto& list : mk.wightman) {
    std::vector<TestFunction> fs;
    json packets = json::array();
    for (int p : list) {
      fs.push_back(mk.packets[static_cast<std::size_t>(p)]);
      packets.push_back(packet_json(fs.back()));
    }
    json r = record("wightman", config, hash);
    r["packets"] = list;
    r["inputs"] = packets;
    r["n"] = list.size();
    if (fs.size() == 2) {
      r["value"] = complex_json(wightman2_smear(config.op, cumulants, fs[0], fs[1]));
      r["stderr"] = json::array({0.0, 0.0});
    } else {
      WightmanOptions options;
      options.regulator = config.run.regulator;
      options.n_samples = config.run.n_samples;
      options.seed = config.run.seed;
      options.workers = config.run.workers;
      const MonteCarloValue v = wightman_n_smear(config.op, cumulants, fs, options);
      r["value"] = complex_json(v.value);
      r["stderr"] = json::array({v.stderr_re, v.stderr_im});
      r["n_samples"] = v.n_samples;
    }
    out << r.dump() << '\n';
  }
  return kExitOk;
}

double resolve_mass(const OperatorSpec& op, double requested) {
  if (requested > 0) return requested;
  return std::sqrt(*std::min_element(op.masses_squared.begin(), op.masses_squared.end()));
}

int cmd_smatrix(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  const auto& s = config.minkowski.smatrix;
  const OperatorSpec& op = config.op;
  require(op.d >= 2, ErrorCode::configuration, "smatrix needs d >= 2");
  const CumulantSet cumulants = cumulant_set(config.levy, 4);
  const std::array<double, 2> in{resolve_mass(op, s.in_masses[0]), resolve_mass(op, s.in_masses[1])};
  const std::array<double, 2> outm{resolve_mass(op, s.out_masses[0]), resolve_mass(op, s.out_masses[1])};
  const double threshold = std::max(in[0] + in[1], outm[0] + outm[1]);
  for (int i = 0; i < s.configurations; ++i) {
    Rng rng = stream(config.run.seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    const double energy = threshold * (1.1 + 1.9 * unit(rng));
    Eigen::VectorXd direction(op.d - 1);
    do {
      for (int a = 0; a < op.d - 1; ++a) direction(a) = normal(rng);
    } while (direction.norm() == 0.0);
    direction.normalize();
    const double rapidity = s.max_rapidity * (2 * unit(rng) - 1);
    const TwoToTwo kin = two_to_two(op.d, in, outm, energy, direction, rapidity);

    json legs = json::array();
    std::vector<KernelLeg> kernel_legs;
    std::size_t idx = 0;
    for (const auto* group : {&kin.incoming, &kin.outgoing})
      for (const ShellPoint& p : *group) {
        legs.push_back({{"mass", p.mass}, {"sign", p.sign}, {"momentum", vector_json(p.momentum())},
                        {"component", s.components[idx]}});
        kernel_legs.push_back({s.components[idx], p.momentum(), p.sign < 0 ? LegLabel::in : LegLabel::out});
        ++idx;
      }
    json r = record("smatrix", config, hash);
    r["configuration"] = i;
    r["legs"] = legs;
    r["value"] = complex_json(smatrix_kernel(op, cumulants, kin.incoming, kin.outgoing, s.components));
    r["stderr"] = json::array({0.0, 0.0});
    out << r.dump() << '\n';

    json f = record("formfactor", config, hash);
    f["configuration"] = i;
    f["legs"] = legs;
    f["labels"] = json::array({"in", "in", "out", "out"});
    f["value"] = complex_json(form_factor_kernel({&op, &cumulants, kernel_legs, config.run.regulator}));
    f["stderr"] = json::array({0.0, 0.0});
    out << f.dump() << '\n';
  }
  return kExitOk;
}

int cmd_gram(const ModelConfig& config, std::ostream& out, const std::string& hash) {
  const CumulantSet cumulants = cumulant_set(config.levy, 2);
  const GramResult g = gram_matrix(config.op, cumulants, config.minkowski.packets);
  json r = record("gram", config, hash);
  json packets = json::array();
  for (const auto& f : config.minkowski.packets) packets.push_back(packet_json(f));
  json matrix = json::array();
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < g.matrix.cols(); ++j) row.push_back(complex_json(g.matrix(i, j)));
    matrix.push_back(row);
  }
  int negative = 0;
  const double norm = g.matrix.size() ? g.matrix.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < g.eigenvalues.size(); ++i)
    if (g.eigenvalues(i) < -1e-8 * norm) ++negative;
  r["inputs"] = packets;
  r["value"] = matrix;
  r["eigenvalues"] = vector_json(g.eigenvalues);
  r["negative_eigenvalues"] = negative;
  r["asymmetry"] = g.asymmetry;
  r["stderr"] = 0.0;
  out << r.dump() << '\n';
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::parse:
    case ErrorCode::schema:
    case ErrorCode::invariant:
    case ErrorCode::cross_field:
    case ErrorCode::momentum_conservation:
    case ErrorCode::unsupported_operator:
    case ErrorCode::configuration:
      return kExitUsage;
    case ErrorCode::singular_configuration:
    case ErrorCode::numeric:
    case ErrorCode::resource:
    case ErrorCode::internal:
      return kExitFail;
  }
  return kExitFail;
}

int run_command(const ModelConfig& config, const std::string& subcommand, std::ostream& out,
                std::ostream& log) {
  const std::string hash = config_hash(config);
  if (subcommand == "validate") return cmd_validate(config, out, hash);
  if (subcommand == "sample") return cmd_sample(config, out, hash);
  if (subcommand == "moments") return cmd_moments(config, out, hash);
  if (subcommand == "compare") return cmd_compare(config, out, log, hash);
  if (subcommand == "wightman") return cmd_wightman(config, out, hash);
  if (subcommand == "smatrix") return cmd_smatrix(config, out, hash);
  if (subcommand == "gram") return cmd_gram(config, out, hash);
  fail(ErrorCode::configuration, "unknown subcommand '" + subcommand + "'");
}

}  // namespace spdelab
