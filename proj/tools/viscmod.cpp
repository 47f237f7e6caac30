#include "cli/commands.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace vc = viscmod::cli;

int main(int argc, char** argv) {
  CLI::App app{"viscmod: viscosity-solution modulus-of-continuity laboratory"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> input_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out", out_dir, "output directory (default: output.dir)");
  app.add_option("--input", input_dir, "directory holding input artifacts (default: the output directory)");
  app.add_option("--seed", seed, "base seed (overrides structure.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "suppress the human-readable report");

  const std::map<std::string, std::string> about{
      {"solve", "solve F = 0 on the configured grid, write field.csv"},
      {"moc", "empirical modulus of continuity of field.csv"},
      {"supersolution", "build and check the 1D supersolution for the pairing"},
      {"check-structure", "sample the structure condition and the matrix lemmas"},
      {"check-subsolution", "test the modulus as a viscosity subsolution of f"},
      {"compare", "compare the modulus against the supersolution"},
      {"bounds", "derive and verify oscillation and Lipschitz bounds"},
      {"pipeline", "solve, moc, supersolution, compare, bounds"},
      {"demo-example1", "linear drift operator, periodic and vanishing runs"},
      {"demo-example2", "quasilinear profiles with a parabola supersolution"}};
  for (const auto& name : vc::subcommand_names()) app.add_subcommand(name, about.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : vc::kConfigFailure;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  vc::Context ctx;
  ctx.quiet = quiet;
  ctx.par.threads = threads;
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw viscmod::ConfigError("cannot open config file '" + config_path + "'");
      ctx.cfg = vc::parse_config(is);
    }
  } catch (const viscmod::ConfigError& e) {
    ctx.out = out_dir.value_or(ctx.cfg.output_dir);
    vc::emit_error(ctx, name, "config", vc::kConfigFailure, e.what());
    return vc::kConfigFailure;
  }
  if (seed) ctx.cfg.structure.seed = *seed;
  ctx.out = out_dir.value_or(ctx.cfg.output_dir);
  ctx.input = input_dir.value_or(ctx.out.string());
  return vc::run_subcommand(name, ctx);
}
