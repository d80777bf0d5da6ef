#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdelab/lattice.hpp"
#include "spdelab/levy.hpp"
#include "spdelab/minkowski.hpp"
#include "spdelab/operator.hpp"

namespace spdelab {

struct RunSettings {
  std::uint64_t seed = 271828;
  std::int64_t n_samples = 1000;
  int workers = 1;
  std::string output;
  SymbolMode symbol = SymbolMode::continuum;
  double regulator = 1e-6;
};

struct MomentSettings {
  std::vector<MomentTuple> tuples;
  /// Adds (k, -k) for every grid mode and every component pair.
  bool all_two_point = false;
  int max_order = 8;
};

struct SmatrixSettings {
  int configurations = 20;
  std::array<double, 2> in_masses{0.0, 0.0};   ///< 0: lightest mass
  std::array<double, 2> out_masses{0.0, 0.0};
  std::vector<int> components;                  ///< defaults to all zeros
  double max_rapidity = 1.0;
};

struct MinkowskiSettings {
  std::vector<TestFunction> packets;
  /// Packet index lists; two entries give the two-point function.
  std::vector<std::vector<int>> wightman;
  SmatrixSettings smatrix;
};

struct ModelConfig {
  LevySpec levy;
  OperatorSpec op;
  std::optional<LatticeSpec> lattice;
  RunSettings run;
  MomentSettings moments;
  MinkowskiSettings minkowski;
  /// Parsed document, kept for hashing and echoing.
  nlohmann::json document;
};

ModelConfig parse_config(const nlohmann::json& document);
ModelConfig parse_config_text(const std::string& text);
ModelConfig load_config(const std::string& path);

/// Applies command-line overrides and keeps the hashed document in sync.
void apply_overrides(ModelConfig& config, std::optional<std::int64_t> samples,
                     std::optional<std::uint64_t> seed, std::optional<int> workers,
                     std::optional<std::string> output);

/// FNV-1a over the canonical dump of the document, without run.workers and
/// run.output (they never change results). 16 hex digits.
std::string config_hash(const ModelConfig& config);

/// Moment tuples the config asks for, with all_two_point expanded.
std::vector<MomentTuple> requested_tuples(const ModelConfig& config);

}  // namespace spdelab
