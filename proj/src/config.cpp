#include "spdelab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

using nlohmann::json;

// A JSON node together with its key path, for error messages.
struct Node {
  const json& value;
  std::string path;

  [[noreturn]] void bad(const std::string& expected) const {
    fail(ErrorCode::schema, path + ": expected " + expected);
  }

  bool has(const std::string& key) const { return value.contains(key); }

  Node at(const std::string& key) const {
    if (!value.contains(key)) fail(ErrorCode::schema, path + "." + key + ": missing required key");
    return {value.at(key), path + "." + key};
  }

  Node at(std::size_t i) const { return {value.at(i), path + "[" + std::to_string(i) + "]"}; }

  void only_keys(std::initializer_list<const char*> allowed) const {
    if (!value.is_object()) bad("an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, v] : value.items())
      if (!ok.count(key)) fail(ErrorCode::schema, path + "." + key + ": unknown key");
  }

  std::size_t array_size() const {
    if (!value.is_array()) bad("an array");
    return value.size();
  }

  double number() const {
    if (!value.is_number()) bad("a number");
    return value.get<double>();
  }

  long long integer() const {
    if (!value.is_number_integer()) bad("an integer");
    return value.get<long long>();
  }

  std::uint64_t unsigned_integer() const {
    if (value.is_number_unsigned()) return value.get<std::uint64_t>();
    if (value.is_number_integer() && value.get<long long>() >= 0) return static_cast<std::uint64_t>(value.get<long long>());
    bad("a non-negative integer");
  }

  int small_int() const {
    const long long v = integer();
    if (v < -(1LL << 30) || v > (1LL << 30)) bad("an integer of moderate size");
    return static_cast<int>(v);
  }

  bool boolean() const {
    if (!value.is_boolean()) bad("true or false");
    return value.get<bool>();
  }

  std::string string() const {
    if (!value.is_string()) bad("a string");
    return value.get<std::string>();
  }

  std::vector<double> numbers(std::optional<std::size_t> length = std::nullopt) const {
    const std::size_t n = array_size();
    if (length && n != *length) bad("an array of " + std::to_string(*length) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(i).number());
    return out;
  }

  std::vector<int> ints(std::optional<std::size_t> length = std::nullopt) const {
    const std::size_t n = array_size();
    if (length && n != *length) bad("an array of " + std::to_string(*length) + " integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(i).small_int());
    return out;
  }

  Eigen::VectorXd vector(std::size_t length) const {
    const auto v = numbers(length);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Eigen::MatrixXd matrix(std::size_t rows, std::size_t cols) const {
    if (array_size() != rows) bad("an array of " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = at(i).numbers(cols);
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return m;
  }

  std::complex<double> complex_number() const {
    if (value.is_number()) return number();
    const auto pair = numbers(2);
    return {pair[0], pair[1]};
  }
};

LevySpec parse_levy(const Node& node) {
  node.only_keys({"L", "sigma", "drift", "jumps"});
  LevySpec levy;
  levy.L = node.at("L").small_int();
  require(levy.L >= 1, ErrorCode::invariant, "levy.L must be >= 1");
  const auto L = static_cast<std::size_t>(levy.L);
  levy.gauss_sigma = node.has("sigma") ? node.at("sigma").matrix(L, L) : Eigen::MatrixXd::Zero(levy.L, levy.L);
  levy.drift = node.has("drift") ? node.at("drift").vector(L) : Eigen::VectorXd::Zero(levy.L);
  if (node.has("jumps")) {
    const Node jumps = node.at("jumps");
    for (std::size_t i = 0; i < jumps.array_size(); ++i) {
      const Node j = jumps.at(i);
      const std::string type = j.at("type").string();
      if (type == "sphere") {
        j.only_keys({"type", "radius", "weight"});
        levy.jumps.push_back(SphereComponent{j.at("radius").number(), j.at("weight").number()});
      } else if (type == "pair") {
        j.only_keys({"type", "vector", "weight"});
        levy.jumps.push_back(PairComponent{j.at("vector").vector(L), j.at("weight").number()});
      } else {
        fail(ErrorCode::schema, j.path + ".type: expected \"sphere\" or \"pair\"");
      }
    }
  }
  levy.validate();
  return levy;
}

OperatorSpec parse_operator(const Node& node) {
  node.only_keys({"d", "L", "masses_squared", "multiplicities", "Q_E", "no_dipole", "tau"});
  OperatorSpec op;
  op.d = node.at("d").small_int();
  op.L = node.at("L").small_int();
  require(op.d >= 1, ErrorCode::invariant, "operator.d must be >= 1");
  require(op.L >= 1, ErrorCode::invariant, "operator.L must be >= 1");
  op.masses_squared = node.at("masses_squared").numbers();
  op.multiplicities = node.has("multiplicities") ? node.at("multiplicities").ints(op.masses_squared.size())
                                                 : std::vector<int>(op.masses_squared.size(), 1);
  if (node.has("no_dipole")) op.no_dipole = node.at("no_dipole").boolean();
  if (node.has("Q_E")) {
    const Node q = node.at("Q_E");
    const auto L = static_cast<std::size_t>(op.L);
    if (q.array_size() != L) q.bad("an L x L array of polynomials");
    op.q_e = PolyMatrix<double>(op.d, op.L);
    for (std::size_t a = 0; a < L; ++a) {
      const Node row = q.at(a);
      if (row.array_size() != L) row.bad("a row of L polynomials");
      for (std::size_t b = 0; b < L; ++b) {
        const Node entry = row.at(b);
        entry.only_keys({"coeffs"});
        const Node coeffs = entry.at("coeffs");
        if (!coeffs.value.is_object()) coeffs.bad("an object of multi-index: coefficient");
        for (const auto& [key, v] : coeffs.value.items()) {
          const Node c{v, coeffs.path + "." + key};
          MultiIndex mi;
          try {
            mi = parse_multi_index(key, op.d);
          } catch (const Error& e) {
            fail(ErrorCode::schema, coeffs.path + ": " + e.what());
          }
          op.q_e(static_cast<int>(a), static_cast<int>(b)).add_term(mi, c.number());
        }
      }
    }
  } else {
    op.q_e = PolyMatrix<double>::identity(op.d, op.L);
  }
  const std::string tau = node.has("tau") ? node.at("tau").string() : "trivial";
  if (tau == "defining")
    require(op.L == op.d, ErrorCode::invariant, "operator.tau: the defining representation needs L = d");
  else if (tau != "trivial")
    fail(ErrorCode::schema, "operator.tau: expected \"trivial\" or \"defining\"");
  op.tau = RotationSampler::from_name(tau, op.d, op.L);
  op.validate();
  return op;
}

LatticeSpec parse_lattice(const Node& node) {
  node.only_keys({"d", "npts", "spacing"});
  LatticeSpec lat;
  lat.d = node.at("d").small_int();
  lat.npts = node.at("npts").small_int();
  lat.spacing = node.at("spacing").number();
  lat.validate();
  return lat;
}

RunSettings parse_run(const Node& node) {
  node.only_keys({"seed", "n_samples", "workers", "output", "symbol", "regulator"});
  RunSettings run;
  if (node.has("seed")) run.seed = node.at("seed").unsigned_integer();
  if (node.has("n_samples")) run.n_samples = node.at("n_samples").integer();
  if (node.has("workers")) run.workers = node.at("workers").small_int();
  if (node.has("output")) run.output = node.at("output").string();
  if (node.has("symbol")) run.symbol = symbol_mode_from_name(node.at("symbol").string());
  if (node.has("regulator")) run.regulator = node.at("regulator").number();
  require(run.n_samples >= 2, ErrorCode::invariant, "run.n_samples must be >= 2");
  require(run.workers >= 1, ErrorCode::invariant, "run.workers must be >= 1");
  require(run.regulator >= 0, ErrorCode::invariant, "run.regulator must be >= 0");
  return run;
}

MomentSettings parse_moments(const Node& node, const ModelConfig& config) {
  node.only_keys({"tuples", "all_two_point", "max_order"});
  MomentSettings m;
  if (node.has("max_order")) m.max_order = node.at("max_order").small_int();
  require(m.max_order >= 1 && m.max_order <= 16, ErrorCode::invariant, "moments.max_order must lie in 1..16");
  if (node.has("all_two_point")) m.all_two_point = node.at("all_two_point").boolean();
  require(config.lattice.has_value(), ErrorCode::cross_field, "moments: needs a lattice section");
  const LatticeSpec& lat = *config.lattice;
  if (!node.has("tuples")) return m;
  const Node tuples = node.at("tuples");
  for (std::size_t t = 0; t < tuples.array_size(); ++t) {
    const Node tn = tuples.at(t);
    tn.only_keys({"modes", "components"});
    MomentTuple tuple;
    const Node modes = tn.at("modes");
    const std::size_t n = modes.array_size();
    require(n >= 1, ErrorCode::invariant, modes.path + ": needs at least one mode");
    if (n > static_cast<std::size_t>(m.max_order))
      fail(ErrorCode::resource, modes.path + ": order exceeds moments.max_order");
    std::vector<long> sum(static_cast<std::size_t>(lat.d), 0);
    for (std::size_t j = 0; j < n; ++j) {
      const Node mode = modes.at(j);
      tuple.modes.push_back(mode.ints(static_cast<std::size_t>(lat.d)));
      for (std::size_t c = 0; c < tuple.modes.back().size(); ++c) {
        const int v = tuple.modes.back()[c];
        require(v >= -lat.npts / 2 && v <= lat.npts / 2, ErrorCode::invariant,
                mode.path + ": mode entries must lie in [-npts/2, npts/2]");
        sum[c] += v;
      }
    }
    tuple.components = tn.at("components").ints(n);
    for (int a : tuple.components)
      require(a >= 0 && a < config.op.L, ErrorCode::invariant, tn.path + ".components: out of range 0..L-1");
    for (long s : sum)
      require(s == 0, ErrorCode::momentum_conservation, tn.path + ".modes: momenta must sum to zero");
    m.tuples.push_back(std::move(tuple));
  }
  return m;
}

TestFunction parse_packet(const Node& node, const OperatorSpec& op) {
  node.only_keys({"center", "width", "weights"});
  TestFunction f;
  f.center = node.at("center").vector(static_cast<std::size_t>(op.d));
  f.width = node.at("width").number();
  const Node w = node.at("weights");
  if (w.array_size() != static_cast<std::size_t>(op.L)) w.bad("an array of L weights");
  f.weights.resize(op.L);
  for (int a = 0; a < op.L; ++a) f.weights(a) = w.at(static_cast<std::size_t>(a)).complex_number();
  require(f.width > 0, ErrorCode::invariant, node.path + ".width: must be > 0");
  require(!f.weights.isZero(0.0), ErrorCode::invariant, node.path + ".weights: must not all vanish");
  return f;
}

MinkowskiSettings parse_minkowski(const Node& node, const OperatorSpec& op) {
  node.only_keys({"packets", "wightman", "smatrix"});
  MinkowskiSettings m;
  if (node.has("packets")) {
    const Node packets = node.at("packets");
    for (std::size_t i = 0; i < packets.array_size(); ++i) m.packets.push_back(parse_packet(packets.at(i), op));
  }
  if (node.has("wightman")) {
    const Node lists = node.at("wightman");
    for (std::size_t i = 0; i < lists.array_size(); ++i) {
      const Node list = lists.at(i);
      const auto idx = list.ints();
      require(idx.size() >= 2, ErrorCode::invariant, list.path + ": needs at least two packets");
      for (int p : idx)
        require(p >= 0 && p < static_cast<int>(m.packets.size()), ErrorCode::invariant,
                list.path + ": packet index out of range");
      m.wightman.push_back(idx);
    }
  }
  m.smatrix.components.assign(4, 0);
  if (node.has("smatrix")) {
    const Node s = node.at("smatrix");
    s.only_keys({"configurations", "in_masses", "out_masses", "components", "max_rapidity"});
    if (s.has("configurations")) m.smatrix.configurations = s.at("configurations").small_int();
    require(m.smatrix.configurations >= 0, ErrorCode::invariant, s.path + ".configurations: must be >= 0");
    auto masses = [&](const char* key, std::array<double, 2>& out) {
      if (!s.has(key)) return;
      const auto v = s.at(key).numbers(2);
      out = {v[0], v[1]};
    };
    masses("in_masses", m.smatrix.in_masses);
    masses("out_masses", m.smatrix.out_masses);
    if (s.has("components")) m.smatrix.components = s.at("components").ints(4);
    for (int a : m.smatrix.components)
      require(a >= 0 && a < op.L, ErrorCode::invariant, s.path + ".components: out of range 0..L-1");
    if (s.has("max_rapidity")) m.smatrix.max_rapidity = s.at("max_rapidity").number();
    require(m.smatrix.max_rapidity >= 0, ErrorCode::invariant, s.path + ".max_rapidity: must be >= 0");
  }
  return m;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ModelConfig parse_config(const nlohmann::json& document) {
  const Node root{document, "config"};
  root.only_keys({"levy", "operator", "lattice", "run", "moments", "minkowski"});
  ModelConfig config;
  config.document = document;
  config.levy = parse_levy({root.at("levy").value, "levy"});
  config.op = parse_operator({root.at("operator").value, "operator"});
  require(config.levy.L == config.op.L, ErrorCode::cross_field,
          "levy.L (" + std::to_string(config.levy.L) + ") must equal operator.L (" + std::to_string(config.op.L) + ")");
  if (document.contains("lattice")) {
    config.lattice = parse_lattice({document.at("lattice"), "lattice"});
    require(config.lattice->d == config.op.d, ErrorCode::cross_field,
            "lattice.d (" + std::to_string(config.lattice->d) + ") must equal operator.d (" +
                std::to_string(config.op.d) + ")");
  }
  if (document.contains("run")) config.run = parse_run({document.at("run"), "run"});
  if (document.contains("moments")) config.moments = parse_moments({document.at("moments"), "moments"}, config);
  if (document.contains("minkowski"))
    config.minkowski = parse_minkowski({document.at("minkowski"), "minkowski"}, config.op);
  else
    config.minkowski.smatrix.components.assign(4, 0);
  return config;
}

ModelConfig parse_config_text(const std::string& text) {
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(document);
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::configuration, "cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void apply_overrides(ModelConfig& config, std::optional<std::int64_t> samples,
                     std::optional<std::uint64_t> seed, std::optional<int> workers,
                     std::optional<std::string> output) {
  if (samples) {
    require(*samples >= 2, ErrorCode::invariant, "--samples must be >= 2");
    config.run.n_samples = *samples;
    config.document["run"]["n_samples"] = *samples;
  }
  if (seed) {
    config.run.seed = *seed;
    config.document["run"]["seed"] = *seed;
  }
  if (workers) {
    require(*workers >= 1, ErrorCode::invariant, "--workers must be >= 1");
    config.run.workers = *workers;
  }
  if (output) config.run.output = *output;
}

std::string config_hash(const ModelConfig& config) {
  nlohmann::json doc = config.document;
  if (doc.contains("run")) {
    doc["run"].erase("workers");
    doc["run"].erase("output");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

std::vector<MomentTuple> requested_tuples(const ModelConfig& config) {
  std::vector<MomentTuple> tuples;
  if (config.moments.all_two_point && config.lattice) {
    const LatticeSpec& lat = *config.lattice;
    for (std::size_t i = 0; i < lat.sites(); ++i) {
      const std::vector<int> k = lat.signed_mode(i);
      std::vector<int> minus(k.size());
      for (std::size_t c = 0; c < k.size(); ++c) minus[c] = -k[c];
      for (int a = 0; a < config.op.L; ++a)
        for (int b = 0; b < config.op.L; ++b) tuples.push_back({{k, minus}, {a, b}});
    }
  }
  tuples.insert(tuples.end(), config.moments.tuples.begin(), config.moments.tuples.end());
  return tuples;
}

}  // namespace spdelab
