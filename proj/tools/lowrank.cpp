#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lowrank/cli.hpp"

int main(int argc, char** argv) {
  using namespace lowrank::cli;

  CLI::App app{"Weighted nuclear-norm low-rank recovery: problem generation, solvers and benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string spec, config, algo = "prograamme", out, suite, problem;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<std::string> trace_level;
  int jobs = 1;

  auto* gen = app.add_subcommand("generate", "Generate a seeded synthetic problem");
  gen->add_option("--spec", spec, "Problem spec JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* solve = app.add_subcommand("solve", "Run one solver on a generated problem");
  solve->add_option("--problem", problem, "Directory written by `generate`")->required();
  solve->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--algo", algo, "prograamme | prograamme-rc | pgd | fista")
      ->check(CLI::IsMember({"prograamme", "prograamme-rc", "pgd", "fista"}));
  solve->add_option("--out", out, "Output directory for trace.csv, summary.json, X.csv")->required();
  solve->add_option("--seed", seed, "Override the config seed");
  solve->add_option("--trace-level", trace_level, "light | full")->check(CLI::IsMember({"light", "full"}));

  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--spec", suite, "Suite JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Output directory")->required();
  bench->add_option("--repeats", repeats, "Repeats per entry (default: suite value or 1)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Override every base seed in the suite");
  bench->add_option("--trace-level", trace_level, "light | full")->check(CLI::IsMember({"light", "full"}));
  bench->add_option("--jobs", jobs, "Parallel worker slots")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  Overrides o;
  o.seed = seed;
  o.jobs = jobs;
  if (trace_level) o.trace_level = lowrank::trace_level_from_string(*trace_level);

  if (gen->parsed()) return cmd_generate(spec, out, o, std::cerr);
  if (solve->parsed()) return cmd_solve(problem, config, algo, out, o, std::cerr);
  return cmd_bench(suite, out, repeats, o, std::cerr);
}
