#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "spdelab/cli.hpp"
#include "spdelab/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lattice SPDE laboratory: sample Levy-driven fields, compare moments with\n"
               "closed-form kernels, and evaluate Minkowski-side amplitudes."};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_path;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"validate", "Check the config and the symmetry invariants"},
      {"sample", "Write solution field snapshots as JSON lines"},
      {"moments", "Monte-Carlo moment estimates as CSV"},
      {"compare", "Moment estimates joined with analytic kernels and z-scores"},
      {"wightman", "Smeared truncated Wightman functions as JSON lines"},
      {"smatrix", "Truncated S-matrix and form-factor records for random 2->2 kinematics"},
      {"gram", "Gram matrix of the two-point form over the configured packets"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Model config (JSON)")->required();
    sub->add_option("--samples", samples, "Override run.n_samples");
    sub->add_option("--seed", seed, "Override run.seed");
    sub->add_option("--workers", workers, "Override run.workers");
    sub->add_option("--out", out_path, "Output path (default: run.output, else stdout)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? spdelab::kExitOk : spdelab::kExitUsage;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    spdelab::ModelConfig config = spdelab::load_config(config_path);
    spdelab::apply_overrides(config, samples, seed, workers, out_path);
    if (config.run.output.empty() || config.run.output == "-")
      return spdelab::run_command(config, subcommand, std::cout, std::cerr);
    std::ofstream file(config.run.output, std::ios::binary);
    if (!file) {
      std::cerr << "error [configuration]: cannot write '" << config.run.output << "'\n";
      return spdelab::kExitUsage;
    }
    return spdelab::run_command(config, subcommand, file, std::cerr);
  } catch (const spdelab::Error& e) {
    std::cerr << "error [" << spdelab::reason(e.code()) << "]: " << e.what() << '\n';
    return spdelab::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return spdelab::kExitFail;
  }
}
