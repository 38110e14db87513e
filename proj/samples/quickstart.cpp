// Completion of a 200x200 rank-5 matrix from half of its entries, solved with
// and without rank continuation and with the SVT baseline.

#include <cstdio>

#include "lowrank/lowrank.hpp"

int main() {
  using namespace lowrank;

  SyntheticSpec spec;
  spec.m = 200;
  spec.n = 200;
  spec.rank = 5;
  spec.noise = AdditiveGaussianNoise{0.1};
  spec.mask = MaskSpec{0.5, false};
  spec.seed = 42;
  const GeneratedProblem g = generate(spec);
  const Problem p = g.problem(g.noise_norm());

  SolverConfig cfg;
  cfg.r = 40;
  cfg.stop.step_tol = 1e-8;
  cfg.stop.max_iter = 2000;

  const SolveTrace plain = prograamme_solve(p, cfg, 7);
  cfg.continuation.enabled = true;
  const SolveTrace rc = prograamme_solve(p, cfg, 7);
  const SolveTrace pgd = pgd_solve(p, cfg);

  std::printf("%-14s %6s %6s %10s %10s\n", "solver", "iters", "rank", "seconds", "rmse");
  const auto row = [&](const char* name, const SolveTrace& t) {
    std::printf("%-14s %6d %6ld %10.3f %10.3e\n", name, t.iterations, static_cast<long>(t.final_rank()),
                t.total_seconds, rmse(g.ground_truth, t.x));
  };
  row("prograamme", plain);
  row("prograamme-rc", rc);
  row("pgd", pgd);
  return 0;
}
