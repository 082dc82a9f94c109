// Command-line front end: `stefan <command> --config <path> [--seed U64] [--out DIR]`.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "stefan/error.hpp"
#include "stefan/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stefan::ConfigInvalid("--config", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace stefan::runner;

  CLI::App app{"Solvers for the supercooled Stefan problem in McKean-Vlasov form"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const char* name : {"solve-donsker", "solve-particle", "convergence", "jump-study", "iteration-table"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "overrides the seed of the configuration");
    sub->add_option("--out", out_dir, "overrides the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  const Command command = *parse_command(app.get_subcommands().front()->get_name());
  RunConfig config;
  std::string hashed;
  try {
    const std::string text = read_file(config_path);
    config = parse_config(command, text);
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    hashed = text + "\nseed=" + std::to_string(config.seed);
  } catch (const stefan::ConfigInvalid& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  }

  try {
    run(config, hashed);
  } catch (const stefan::OutputUnwritable& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolverError;
  }
  std::cout << "wrote " << config.out_dir.string() << '\n';
  return kOk;
}
