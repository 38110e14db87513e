#pragma once

// Implementation of the `lowrank` command line tool. The commands return exit
// codes instead of calling exit() so they can be driven from tests.
//
// Exit codes: 0 success, 2 validation, 3 non-convergence or divergence, 4 I/O.
// Seed precedence: --seed flag, then LOWRANK_SEED, then the file value.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lowrank/config.hpp"
#include "lowrank/io.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/solver.hpp"

namespace lowrank::cli {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitIo = 4;

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<TraceLevel> trace_level;
  int jobs = 1;
};

inline std::uint64_t parse_seed(const std::string& text, const char* origin) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw InvalidSpecError(std::string(origin) + ": '" + text + "' is not a nonnegative integer seed");
  }
  return v;
}

/// --seed wins over LOWRANK_SEED, which wins over `file_seed`.
inline std::uint64_t effective_seed(const Overrides& o, std::uint64_t file_seed) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("LOWRANK_SEED"); env != nullptr && *env != '\0') {
    return parse_seed(env, "LOWRANK_SEED");
  }
  return file_seed;
}

enum class Algorithm { prograamme, prograamme_rc, pgd, fista };

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "prograamme") return Algorithm::prograamme;
  if (name == "prograamme-rc") return Algorithm::prograamme_rc;
  if (name == "pgd") return Algorithm::pgd;
  if (name == "fista") return Algorithm::fista;
  throw InvalidSpecError("unknown algorithm '" + name + "' (expected prograamme, prograamme-rc, pgd or fista)");
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::prograamme: return "prograamme";
    case Algorithm::prograamme_rc: return "prograamme-rc";
    case Algorithm::pgd: return "pgd";
    case Algorithm::fista: return "fista";
  }
  return "?";
}

/// Applies the algorithm-specific parts of the config.
inline SolverConfig configure(Algorithm algo, SolverConfig cfg, std::vector<std::string>& notes) {
  cfg.continuation.enabled = algo == Algorithm::prograamme_rc;
  if (algo == Algorithm::fista && !std::holds_alternative<FistaInertia>(cfg.rule)) {
    notes.push_back("fista: inertial rule replaced by a_k = (k-1)/(k+20)");
    cfg.rule = FistaInertia{20.0};
  }
  return cfg;
}

inline SolveTrace run_algorithm(Algorithm algo, const Problem& p, const SolverConfig& cfg, std::uint64_t seed) {
  if (algo == Algorithm::pgd || algo == Algorithm::fista) return pgd_solve(p, cfg);
  return prograamme_solve(p, cfg, seed);
}

/// Runs `body`, mapping library errors to exit codes and messages on `log`.
template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    log << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    log << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    log << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  }
}

inline Json shape_json(const Matrix& a) { return Json::array({a.rows(), a.cols()}); }

inline const char* kind_name(ObservationOp::Kind kind) {
  switch (kind) {
    case ObservationOp::Kind::identity: return "identity";
    case ObservationOp::Kind::entry_mask: return "entry_mask";
    case ObservationOp::Kind::dense_sensing: return "dense_sensing";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// generate

/// Writes F, W, ground_truth, noise (and mask or sensing) CSVs plus manifest.json.
inline int cmd_generate(const fs::path& spec_file, const fs::path& out_dir, const Overrides& o, std::ostream& log) {
  return guarded(log, [&] {
    SyntheticSpec spec = spec_from_json(parse_json(read_text(spec_file), spec_file.string()));
    spec.seed = effective_seed(o, spec.seed);
    const GeneratedProblem g = generate(spec);

    fs::create_directories(out_dir);
    Json shapes{{"F", shape_json(g.observed)},
                {"W", shape_json(g.weights)},
                {"ground_truth", shape_json(g.ground_truth)},
                {"noise", shape_json(g.noise)}};
    write_matrix_csv(out_dir / "F.csv", g.observed);
    write_matrix_csv(out_dir / "W.csv", g.weights);
    write_matrix_csv(out_dir / "ground_truth.csv", g.ground_truth);
    write_matrix_csv(out_dir / "noise.csv", g.noise);
    if (g.op.kind() == ObservationOp::Kind::entry_mask) {
      write_matrix_csv(out_dir / "mask.csv", g.op.mask());
      shapes["mask"] = shape_json(g.op.mask());
    } else if (g.op.kind() == ObservationOp::Kind::dense_sensing) {
      write_matrix_csv(out_dir / "sensing.csv", g.op.sensing());
      shapes["sensing"] = shape_json(g.op.sensing());
    }
    Json manifest{{"version", kVersion},
                  {"seed", spec.seed},
                  {"operator", kind_name(g.op.kind())},
                  {"domain", Json::array({spec.m, spec.n})},
                  {"shapes", shapes},
                  {"noise_norm", g.noise_norm()},
                  {"spec", to_json(spec)}};
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    log << "wrote " << kind_name(g.op.kind()) << " problem " << spec.m << "x" << spec.n << " (seed " << spec.seed
        << ") to " << out_dir.string() << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// solve

struct LoadedProblem {
  ObservationOp op;
  Matrix observed;
  Matrix weights;
  std::optional<Matrix> ground_truth;
  std::optional<double> noise_norm;
  Json manifest;
};

inline std::pair<Index, Index> shape_from(const Json& shapes, const char* key) {
  const Json& s = json_detail::require(shapes, key, "manifest shapes");
  return {s.at(0).get<Index>(), s.at(1).get<Index>()};
}

inline LoadedProblem load_problem(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing " + manifest_path.string());
  Json manifest = parse_json(read_text(manifest_path), manifest_path.string());
  const Json& shapes = json_detail::require(manifest, "shapes", "manifest");
  const Json& domain = json_detail::require(manifest, "domain", "manifest");
  const Index m = domain.at(0).get<Index>();
  const Index n = domain.at(1).get<Index>();
  const std::string kind = json_detail::require(manifest, "operator", "manifest").get<std::string>();

  const auto read = [&](const char* file, const char* key) {
    const auto [r, c] = shape_from(shapes, key);
    return read_matrix_csv(dir / file, r, c);
  };

  std::optional<ObservationOp> op;
  if (kind == "identity") {
    op = ObservationOp::identity(m, n);
  } else if (kind == "entry_mask") {
    op = ObservationOp::entry_mask(read("mask.csv", "mask"));
  } else if (kind == "dense_sensing") {
    op = ObservationOp::dense_sensing(read("sensing.csv", "sensing"), m, n);
  } else {
    throw InvalidSpecError("manifest: unknown operator '" + kind + "'");
  }
  LoadedProblem out{*op, read("F.csv", "F"), read("W.csv", "W"), std::nullopt, std::nullopt, manifest};
  if (fs::exists(dir / "ground_truth.csv")) {
    Matrix gt = read("ground_truth.csv", "ground_truth");
    if (gt.rows() != m || gt.cols() != n) throw DimensionError("ground_truth does not match the problem domain");
    out.ground_truth = std::move(gt);
  }
  if (fs::exists(dir / "noise.csv")) out.noise_norm = read("noise.csv", "noise").norm();
  return out;
}

inline Json summary_json(const std::string& algorithm, const RunConfig& cfg, const SolverConfig& effective,
                         double tau, const SolveTrace& trace, bool diverged) {
  Json j;
  j["version"] = kVersion;
  j["algorithm"] = algorithm;
  j["seed"] = cfg.seed;
  j["tau"] = tau;
  j["config"] = to_json(cfg);
  j["effective_config"] = to_json(effective);
  j["inertial_rule"] = describe(effective.rule);
  j["converged"] = trace.converged;
  j["diverged"] = diverged;
  j["iterations"] = trace.iterations;
  j["final_rank"] = trace.final_rank();
  j["total_seconds"] = trace.total_seconds;
  j["gamma"] = trace.gamma;
  j["lipschitz"] = trace.lipschitz;
  j["warnings"] = trace.warnings;
  return j;
}

/// Runs one algorithm on the artifacts in problem_dir; writes trace.csv,
/// summary.json and X.csv into out_dir.
inline int cmd_solve(const fs::path& problem_dir, const fs::path& config_file, const std::string& algorithm,
                     const fs::path& out_dir, const Overrides& o, std::ostream& log) {
  return guarded(log, [&] {
    const Algorithm algo = parse_algorithm(algorithm);
    RunConfig cfg = run_config_from_json(parse_json(read_text(config_file), config_file.string()));
    cfg.seed = effective_seed(o, cfg.seed);
    if (o.trace_level) cfg.solver.trace_level = *o.trace_level;
    LoadedProblem lp = load_problem(problem_dir);

    double tau = 0.0;
    if (std::holds_alternative<TauPreset>(cfg.tau.value)) {
      if (!lp.noise_norm) throw InvalidSpecError("tau preset needs noise.csv in " + problem_dir.string());
      tau = cfg.tau.resolve(*lp.noise_norm);
    } else {
      tau = cfg.tau.resolve(0.0);
    }
    const Problem p(lp.op, lp.observed, lp.weights, tau);

    std::vector<std::string> notes;
    const SolverConfig effective = configure(algo, cfg.solver, notes);
    SolveTrace trace;
    bool diverged = false;
    try {
      trace = run_algorithm(algo, p, effective, cfg.seed);
    } catch (const DivergenceError& e) {
      trace = e.trace();
      diverged = true;
      log << "error: " << e.what() << '\n';
    }
    trace.warnings.insert(trace.warnings.begin(), notes.begin(), notes.end());
    if (algo == Algorithm::fista && trace.gamma * trace.lipschitz >= 1.0) {
      trace.warnings.push_back("fista: gamma * L = " + format_double(trace.gamma * trace.lipschitz) +
                               " is not below 1, outside the usual FISTA step-size range");
    }

    Json summary = summary_json(to_string(algo), cfg, effective, tau, trace, diverged);
    summary["problem_dir"] = problem_dir.string();
    summary["problem_seed"] = lp.manifest.value("seed", std::uint64_t{0});
    if (lp.ground_truth && trace.x.size() > 0) summary["rmse"] = rmse(*lp.ground_truth, trace.x);

    fs::create_directories(out_dir);
    write_trace_csv(out_dir / "trace.csv", trace);
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    if (trace.x.size() > 0) write_matrix_csv(out_dir / "X.csv", trace.x);

    for (const auto& w : trace.warnings) log << "warning: " << w << '\n';
    log << to_string(algo) << ": " << (trace.converged ? "converged" : "stopped") << " after " << trace.iterations
        << " iterations, final rank " << trace.final_rank() << ", " << trace.total_seconds << " s\n";
    return trace.converged ? kExitOk : kExitNotConverged;
  });
}

// ---------------------------------------------------------------------------
// bench

struct BenchEntry {
  std::string name;
  Algorithm algorithm = Algorithm::prograamme;
  SyntheticSpec spec;
  RunConfig config;
};

struct BenchRun {
  bool diverged = false;
  bool converged = false;
  double seconds = 0.0;
  int iterations = 0;
  Index final_rank = 0;
  double rmse = 0.0;
  std::string error;
};

/// Suite file:
///   {"repeats": 5, "jobs": 1,
///    "runs": [{"name": "...", "algorithm": "pgd", "spec": {...}, "config": {...}}, ...]}
/// "spec" and "config" may also be file names relative to the suite file.
/// Names become directory names and CSV cells, so they are limited to
/// letters, digits and "._-=+", must be unique, and may not start with '.'.
inline std::vector<BenchEntry> parse_suite(const Json& suite, const fs::path& base_dir) {
  const Json& runs = json_detail::require(suite, "runs", "suite");
  if (!runs.is_array() || runs.empty()) throw InvalidSpecError("suite: 'runs' must be a nonempty array");
  const auto load = [&](const Json& j) {
    if (j.is_string()) {
      const fs::path path = base_dir / j.get<std::string>();
      return parse_json(read_text(path), path.string());
    }
    return j;
  };
  std::vector<BenchEntry> entries;
  for (const Json& r : runs) {
    BenchEntry e;
    e.algorithm = parse_algorithm(json_detail::require(r, "algorithm", "suite run").get<std::string>());
    e.name = r.value("name", to_string(e.algorithm));
    const bool safe = !e.name.empty() && e.name.front() != '.' &&
                      std::all_of(e.name.begin(), e.name.end(), [](unsigned char c) {
                        return std::isalnum(c) || std::string_view("._-=+").find(static_cast<char>(c)) != std::string_view::npos;
                      });
    if (!safe) throw InvalidSpecError("suite: run name '" + e.name + "' may only use letters, digits and ._-=+");
    for (const auto& other : entries) {
      if (other.name == e.name) throw InvalidSpecError("suite: duplicate run name '" + e.name + "'");
    }
    e.spec = spec_from_json(load(json_detail::require(r, "spec", "suite run")));
    e.config = run_config_from_json(load(json_detail::require(r, "config", "suite run")));
    entries.push_back(std::move(e));
  }
  return entries;
}

/// Runs every suite entry `repeats` times. Repeat i uses problem seed
/// derive_seed(spec.seed, i) and solver seed derive_seed(config.seed, i), so
/// entries sharing a spec see the same instances.
inline int cmd_bench(const fs::path& suite_file, const fs::path& out_dir, std::optional<int> repeats_flag,
                     const Overrides& o, std::ostream& log) {
  return guarded(log, [&] {
    const Json suite = parse_json(read_text(suite_file), suite_file.string());
    std::vector<BenchEntry> entries = parse_suite(suite, suite_file.parent_path());
    const int repeats = repeats_flag.value_or(suite.value("repeats", 1));
    if (repeats < 1) throw InvalidSpecError("bench: repeats must be >= 1");
    const int jobs = std::max(1, o.jobs > 1 ? o.jobs : suite.value("jobs", 1));
    for (auto& e : entries) {
      e.spec.seed = effective_seed(o, e.spec.seed);
      e.config.seed = effective_seed(o, e.config.seed);
      if (o.trace_level) e.config.solver.trace_level = *o.trace_level;
    }
    fs::create_directories(out_dir);

    const std::size_t total = entries.size() * static_cast<std::size_t>(repeats);
    std::vector<BenchRun> results(total);
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    std::vector<std::string> io_errors;

    const auto worker = [&] {
      for (std::size_t t = next++; t < total; t = next++) {
        const BenchEntry& e = entries[t / static_cast<std::size_t>(repeats)];
        const auto rep = static_cast<std::uint64_t>(t % static_cast<std::size_t>(repeats));
        BenchRun& res = results[t];
        SyntheticSpec spec = e.spec;
        spec.seed = derive_seed(e.spec.seed, rep);
        RunConfig cfg = e.config;
        cfg.seed = derive_seed(e.config.seed, rep);
        std::vector<std::string> notes;
        const SolverConfig effective = configure(e.algorithm, cfg.solver, notes);
        SolveTrace trace;
        double tau = 0.0;
        try {
          const GeneratedProblem g = generate(spec);
          tau = cfg.tau.resolve(g.noise_norm());
          try {
            trace = run_algorithm(e.algorithm, g.problem(tau), effective, cfg.seed);
          } catch (const DivergenceError& err) {
            trace = err.trace();
            res.diverged = true;
            res.error = err.what();
          }
          res.converged = trace.converged;
          res.seconds = trace.total_seconds;
          res.iterations = trace.iterations;
          res.final_rank = trace.final_rank();
          res.rmse = trace.x.size() > 0 ? rmse(g.ground_truth, trace.x) : std::numeric_limits<double>::quiet_NaN();
        } catch (const Error& err) {
          res.diverged = true;
          res.error = err.what();
        }
        trace.warnings.insert(trace.warnings.begin(), notes.begin(), notes.end());
        try {
          Json summary = summary_json(to_string(e.algorithm), cfg, effective, tau, trace, res.diverged);
          summary["name"] = e.name;
          summary["repeat"] = rep;
          summary["spec"] = to_json(spec);
          if (!res.error.empty()) summary["error"] = res.error;
          const fs::path stem = out_dir / e.name / ("rep" + std::to_string(rep));
          write_trace_csv(stem.string() + ".trace.csv", trace);
          write_text(stem.string() + ".summary.json", summary.dump(2) + "\n");
        } catch (const std::exception& err) {
          std::lock_guard<std::mutex> lock(io_mutex);
          io_errors.push_back(err.what());
        }
      }
    };

    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (!io_errors.empty()) throw IoError(io_errors.front());

    std::string csv =
        "name,algorithm,repeats,converged,diverged,mean_time_s,min_time_s,max_time_s,mean_iterations,"
        "min_iterations,max_iterations,mean_final_rank,mean_rmse\n";
    Json manifest{{"version", kVersion}, {"repeats", repeats}, {"jobs", jobs}, {"runs", Json::array()}};
    bool any_diverged = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const BenchEntry& e = entries[i];
      int converged = 0;
      int diverged = 0;
      int finished = 0;
      double t_sum = 0.0, t_min = std::numeric_limits<double>::infinity(), t_max = 0.0;
      double it_sum = 0.0, rank_sum = 0.0, rmse_sum = 0.0;
      int it_min = std::numeric_limits<int>::max(), it_max = 0;
      for (int rep = 0; rep < repeats; ++rep) {
        const BenchRun& r = results[i * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(rep)];
        if (r.diverged) {
          ++diverged;
          log << "warning: " << e.name << " repeat " << rep << " failed: " << r.error << '\n';
          continue;
        }
        ++finished;
        converged += r.converged ? 1 : 0;
        t_sum += r.seconds;
        t_min = std::min(t_min, r.seconds);
        t_max = std::max(t_max, r.seconds);
        it_sum += r.iterations;
        it_min = std::min(it_min, r.iterations);
        it_max = std::max(it_max, r.iterations);
        rank_sum += static_cast<double>(r.final_rank);
        rmse_sum += r.rmse;
      }
      any_diverged = any_diverged || diverged > 0;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double f = finished;
      csv += e.name + "," + to_string(e.algorithm) + "," + std::to_string(repeats) + "," + std::to_string(converged) +
             "," + std::to_string(diverged) + "," + format_double(finished ? t_sum / f : nan) + "," +
             format_double(finished ? t_min : nan) + "," + format_double(finished ? t_max : nan) + "," +
             format_double(finished ? it_sum / f : nan) + "," + (finished ? std::to_string(it_min) : "nan") + "," +
             (finished ? std::to_string(it_max) : "nan") + "," + format_double(finished ? rank_sum / f : nan) + "," +
             format_double(finished ? rmse_sum / f : nan) + "\n";
      manifest["runs"].push_back(Json{{"name", e.name},
                                      {"algorithm", to_string(e.algorithm)},
                                      {"spec", to_json(e.spec)},
                                      {"config", to_json(e.config)}});
    }
    write_text(out_dir / "aggregate.csv", csv);
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    log << "bench: " << entries.size() << " entries x " << repeats << " repeats"
        << (any_diverged ? " (with failures, see warnings)" : "") << "; aggregate in "
        << (out_dir / "aggregate.csv").string() << '\n';
    return kExitOk;
  });
}

}  // namespace lowrank::cli
