#pragma once

// Outer loops for nuclear-norm regularized weighted recovery:
//   Y_k     = X_k + a_k (X_k - X_{k-1})
//   Z_k     = Y_k - gamma * grad f(Y_k)
//   X_{k+1} = prox step on Z_k
// pgd_solve takes the exact SVT prox step. prograamme_solve replaces it with
// warm-started alternating minimization on r-column factors and, optionally,
// shrinks r to the numerical rank of U every `cadence` iterations.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lowrank/amfit.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/prox.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

// ---------------------------------------------------------------------------
// Inertial rules

struct ZeroInertia {};

struct ConstantInertia {
  double a = 0.0;
};

/// a_k = (k - 1) / (k + d), d > 2.
struct FistaInertia {
  double d = 20.0;
};

/// a_k = min{a, c / (k^(1+delta) ||X_k - X_{k-1}||^2)}.
struct OnlineInertia {
  double a = 0.5;
  double c = 1.0;
  double delta = 1.0;
};

using InertialRule = std::variant<ZeroInertia, ConstantInertia, FistaInertia, OnlineInertia>;

inline void validate(const InertialRule& rule) {
  std::visit(
      [](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantInertia>) {
          if (!(r.a >= 0.0 && r.a < 1.0)) throw InvalidSpecError("constant inertia must lie in [0,1)");
        } else if constexpr (std::is_same_v<T, FistaInertia>) {
          if (!(r.d > 2.0)) throw InvalidSpecError("FISTA-like inertia needs d > 2");
        } else if constexpr (std::is_same_v<T, OnlineInertia>) {
          if (!(r.a >= 0.0 && r.a <= 1.0) || !(r.c > 0.0) || !(r.delta > 0.0)) {
            throw InvalidSpecError("online inertia needs a in [0,1], c > 0, delta > 0");
          }
        }
      },
      rule);
}

inline double inertial_value(const InertialRule& rule, int k, double step_norm_prev) {
  if (k < 1) throw InvalidSpecError("inertial_value: k must be >= 1");
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ZeroInertia>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, ConstantInertia>) {
          return r.a;
        } else if constexpr (std::is_same_v<T, FistaInertia>) {
          return (k - 1.0) / (k + r.d);
        } else {
          if (step_norm_prev == 0.0) return r.a;
          const double cap = r.c / (std::pow(static_cast<double>(k), 1.0 + r.delta) * step_norm_prev * step_norm_prev);
          return std::min(r.a, cap);
        }
      },
      rule);
}

inline std::string describe(const InertialRule& rule) {
  std::ostringstream os;
  os.precision(12);
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ZeroInertia>) {
          os << "a_k = 0";
        } else if constexpr (std::is_same_v<T, ConstantInertia>) {
          os << "a_k = " << r.a;
        } else if constexpr (std::is_same_v<T, FistaInertia>) {
          os << "a_k = (k-1)/(k+" << r.d << ")";
        } else {
          os << "a_k = min{" << r.a << ", " << r.c << "/(k^(1+" << r.delta << ")*||X_k-X_{k-1}||^2)}";
        }
      },
      rule);
  return os.str();
}

// ---------------------------------------------------------------------------
// Configuration and traces

enum class TraceLevel { light, full };

struct Continuation {
  bool enabled = false;
  int burn_in = 20;
  int cadence = 10;
  double rank_tol = 1e-8;
};

struct StopRule {
  double step_tol = 1e-10;  // on ||X_{k+1} - X_k||
  int max_iter = 1000;
  bool relative = false;  // divide the step by max(||X_{k+1}||, 1)
};

struct SolverConfig {
  std::optional<double> gamma;  // 1/L when unset
  InertialRule rule = ZeroInertia{};
  InnerPolicy inner = FixedPasses{1};
  Index r = 10;
  Continuation continuation;
  StopRule stop;
  TraceLevel trace_level = TraceLevel::light;
  double rank_tol = 1e-8;         // numerical rank of recorded iterates
  bool probe_exact_prox = false;  // also record rank(svt(Z_k, tau gamma))
};

inline void validate(const SolverConfig& cfg) {
  validate(cfg.rule);
  validate(cfg.inner);
  if (cfg.gamma && !(*cfg.gamma > 0.0)) throw InvalidSpecError("config: gamma must be positive");
  if (cfg.r < 1) throw InvalidSpecError("config: r must be >= 1");
  if (cfg.continuation.cadence < 1) throw InvalidSpecError("config: continuation cadence must be >= 1");
  if (cfg.continuation.burn_in < 0) throw InvalidSpecError("config: continuation burn_in must be >= 0");
  if (!(cfg.continuation.rank_tol > 0.0 && cfg.continuation.rank_tol < 1.0)) {
    throw InvalidSpecError("config: continuation rank_tol must lie in (0,1)");
  }
  if (!(cfg.rank_tol > 0.0 && cfg.rank_tol < 1.0)) throw InvalidSpecError("config: rank_tol must lie in (0,1)");
  if (!(cfg.stop.step_tol >= 0.0)) throw InvalidSpecError("config: step_tol must be nonnegative");
  if (cfg.stop.max_iter < 1) throw InvalidSpecError("config: max_iter must be >= 1");
}

struct TraceRecord {
  int k = 0;
  double elapsed_seconds = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();  // full tracing only
  double step_norm = 0.0;                                       // ||X_k - X_{k-1}||
  Index rank_x = 0;
  Index r = 0;  // factor budget used to build X_k
  int inner_iterations = 0;
  double inertia = 0.0;  // a_k
  Index rank_prox = -1;  // rank of the exact prox, when probed
};

struct SolveTrace {
  std::vector<TraceRecord> records;
  Matrix x;
  bool converged = false;
  int iterations = 0;
  double gamma = 0.0;
  double lipschitz = 0.0;
  double total_seconds = 0.0;
  std::vector<std::string> warnings;

  Index final_rank() const { return records.empty() ? 0 : records.back().rank_x; }
};

/// Raised when an iterate stops being finite; carries the trace up to the last finite iterate.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, SolveTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  const SolveTrace& trace() const { return trace_; }

 private:
  SolveTrace trace_;
};

// ---------------------------------------------------------------------------
// Factor truncation

/// Best rank-new_r factorization of U V, balanced as U' = P sqrt(S), V' = sqrt(S) Q^T.
inline FactorPair truncate_factors(const Matrix& u, const Matrix& v, Index new_r,
                                   std::vector<std::string>* warnings = nullptr) {
  if (u.cols() != v.rows()) throw DimensionError("truncate_factors: inner dimensions differ");
  if (new_r > u.cols()) throw InvalidSpecError("truncate_factors: new_r exceeds the current rank budget");
  if (new_r <= 0) {
    if (warnings) warnings->push_back("truncate_factors: requested rank 0 replaced by 1");
    new_r = 1;
  }
  const Index m = u.rows();
  const Index n = v.cols();
  Eigen::HouseholderQR<Matrix> qu(u);
  Eigen::HouseholderQR<Matrix> qv(v.transpose());
  const Index ku = std::min(m, u.cols());
  const Index kv = std::min(n, v.rows());
  const Matrix q_u = qu.householderQ() * Matrix::Identity(m, ku);
  const Matrix q_v = qv.householderQ() * Matrix::Identity(n, kv);
  const Matrix r_u = qu.matrixQR().topRows(ku).triangularView<Eigen::Upper>();
  const Matrix r_v = qv.matrixQR().topRows(kv).triangularView<Eigen::Upper>();
  const Svd core = thin_svd(r_u * r_v.transpose());

  const Index keep = std::min(new_r, core.sigma.size());
  const Vector root = core.sigma.head(keep).cwiseSqrt();
  FactorPair out;
  out.u = Matrix::Zero(m, new_r);
  out.v = Matrix::Zero(new_r, n);
  out.u.leftCols(keep) = q_u * core.left.leftCols(keep) * root.asDiagonal();
  out.v.topRows(keep) = root.asDiagonal() * (q_v * core.right.leftCols(keep)).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Outer loop

namespace detail {

struct StepOutput {
  Matrix x;
  Index rank_x = 0;
  Index r = 0;
  int inner_iterations = 0;
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

/// Shared inertial forward step. `prox(z, k, gamma, overhead)` produces X_{k+1}; time it
/// spends on trace-only work is added to `overhead` and excluded from elapsed_seconds.
template <typename ProxStep>
SolveTrace run_outer(const Problem& p, const SolverConfig& cfg, const Matrix& x0, ProxStep&& prox) {
  validate(cfg);
  require_domain(p, x0, "solve: X0");
  require_finite(x0, "solve: X0");

  SolveTrace trace;
  trace.lipschitz = lipschitz_bound(p);
  trace.gamma = cfg.gamma.value_or(1.0 / trace.lipschitz);
  if (trace.gamma * trace.lipschitz >= 2.0) {
    trace.warnings.push_back("step size gamma >= 2/L; convergence is not guaranteed");
  }

  Matrix x = x0;
  Matrix x_prev = x0;  // X_{-1} := X_0
  double step_prev = 0.0;
  double overhead = 0.0;
  const auto start = Clock::now();

  for (int k = 1; k <= cfg.stop.max_iter; ++k) {
    const double a = inertial_value(cfg.rule, k, step_prev);
    Matrix y = a != 0.0 ? Matrix(x + a * (x - x_prev)) : x;
    Matrix z = y - trace.gamma * gradient(p, y);
    if (!all_finite(z)) {
      trace.x = x;
      trace.total_seconds = seconds_since(start) - overhead;
      throw DivergenceError("solver diverged at iteration " + std::to_string(k) + ": non-finite gradient step",
                            std::move(trace));
    }

    TraceRecord rec;
    rec.k = k;
    rec.inertia = a;
    if (cfg.probe_exact_prox) {
      const auto t = Clock::now();
      rec.rank_prox = svt_with_rank(z, p.tau() * trace.gamma).rank;
      overhead += seconds_since(t);
    }

    StepOutput out = prox(z, k, trace.gamma, overhead);
    if (!all_finite(out.x)) {
      trace.x = x;
      trace.total_seconds = seconds_since(start) - overhead;
      throw DivergenceError("solver diverged at iteration " + std::to_string(k) + ": non-finite iterate",
                            std::move(trace));
    }

    rec.step_norm = (out.x - x).norm();
    rec.rank_x = out.rank_x;
    rec.r = out.r;
    rec.inner_iterations = out.inner_iterations;
    if (cfg.trace_level == TraceLevel::full) {
      const auto t = Clock::now();
      rec.objective = objective(p, out.x);
      overhead += seconds_since(t);
    }
    rec.elapsed_seconds = seconds_since(start) - overhead;
    if (!trace.records.empty() && rec.elapsed_seconds <= trace.records.back().elapsed_seconds) {
      rec.elapsed_seconds = std::nextafter(trace.records.back().elapsed_seconds, std::numeric_limits<double>::infinity());
    }
    trace.records.push_back(rec);
    trace.iterations = k;

    x_prev = std::move(x);
    x = std::move(out.x);
    step_prev = rec.step_norm;

    const double scale = cfg.stop.relative ? std::max(x.norm(), 1.0) : 1.0;
    if (rec.step_norm <= cfg.stop.step_tol * scale) {
      trace.converged = true;
      break;
    }
  }
  trace.x = std::move(x);
  trace.total_seconds = trace.records.empty() ? 0.0 : trace.records.back().elapsed_seconds;
  return trace;
}

}  // namespace detail

/// Inertial proximal gradient with exact SVT (PGD with ZeroInertia, FISTA-type with FistaInertia).
inline SolveTrace pgd_solve(const Problem& p, const SolverConfig& cfg, const Matrix& x0) {
  const Index full = std::min(p.rows(), p.cols());
  return detail::run_outer(p, cfg, x0, [&](const Matrix& z, int, double gamma, double&) {
    SvtResult s = svt_with_rank(z, p.tau() * gamma);
    return detail::StepOutput{std::move(s.value), s.rank, full, 0};
  });
}

inline SolveTrace pgd_solve(const Problem& p, const SolverConfig& cfg) {
  return pgd_solve(p, cfg, Matrix::Zero(p.rows(), p.cols()));
}

/// Proximal gradient with the SVT step replaced by alternating minimization on
/// warm-started r-column factors; rank continuation when cfg.continuation.enabled.
inline SolveTrace prograamme_solve(const Problem& p, const SolverConfig& cfg, const Matrix& x0, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed, 0);
  const Index m = p.rows();
  const Index n = p.cols();
  FactorPair factors = random_factors(m, n, cfg.r, rng);
  std::vector<std::string> notes;

  SolveTrace trace = detail::run_outer(p, cfg, x0, [&](const Matrix& z, int k, double gamma, double& overhead) {
    const double mu = p.tau() * gamma;
    if (factors.is_zero()) {
      notes.push_back("iteration " + std::to_string(k) + ": zero warm start replaced by random factors");
      factors = random_factors(m, n, factors.rank_budget(), rng);
    }
    const Index used_r = factors.rank_budget();
    InnerResult inner = inner_solve(z, mu, std::move(factors), cfg.inner, k);
    factors = std::move(inner.factors);

    const auto t = detail::Clock::now();
    const Index rank_x = product_rank(factors.u, factors.v, cfg.rank_tol);
    overhead += detail::seconds_since(t);

    const Continuation& cont = cfg.continuation;
    if (cont.enabled && k > cont.burn_in && (k - cont.burn_in) % cont.cadence == 0) {
      const Index new_r = numerical_rank(factors.u, cont.rank_tol);
      if (new_r < used_r) factors = truncate_factors(factors.u, factors.v, new_r, &notes);
    }
    return detail::StepOutput{std::move(inner.product), rank_x, used_r, inner.iterations};
  });
  trace.warnings.insert(trace.warnings.end(), notes.begin(), notes.end());
  return trace;
}

inline SolveTrace prograamme_solve(const Problem& p, const SolverConfig& cfg, std::uint64_t seed) {
  return prograamme_solve(p, cfg, Matrix::Zero(p.rows(), p.cols()), seed);
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

struct ConvergenceReport {
  std::vector<double> partial_sums;  // sum_{j<=k} a_j ||X_{j-1} - X_{j-2}||^2
  double total = 0.0;
  bool growth_suspected = false;
  std::optional<double> online_bound;  // c * zeta(1 + delta) for the online rule
};

/// Empirical check of sum_k a_k ||X_k - X_{k-1}||^2 < inf. Diagnostic only.
inline ConvergenceReport check_convergence_conditions(const SolveTrace& trace, const InertialRule& rule) {
  ConvergenceReport report;
  double prev_step = 0.0;
  double sum = 0.0;
  std::vector<double> terms;
  for (const TraceRecord& rec : trace.records) {
    const double term = rec.inertia * prev_step * prev_step;
    terms.push_back(term);
    sum += term;
    report.partial_sums.push_back(sum);
    prev_step = rec.step_norm;
  }
  report.total = sum;
  if (terms.size() >= 20 && sum > 0.0) {
    double tail = 0.0;
    for (std::size_t i = terms.size() / 2; i < terms.size(); ++i) tail += terms[i];
    report.growth_suspected = tail >= 0.5 * sum;
  }
  if (const auto* online = std::get_if<OnlineInertia>(&rule)) {
    report.online_bound = online->c * std::riemann_zeta(1.0 + online->delta);
  }
  return report;
}

}  // namespace lowrank
