#pragma once

// Seeded synthetic instances and evaluation metrics.
//
// Ground truth is A * B with A (m x rank) and B (rank x n) i.i.d. N(0,1).
// Observation models:
//   identity       F = X + e
//   entry mask     F = M .* X + e      (e over all m x n entries)
//   dense sensing  F = S vec(X) + e    (S is d x mn with i.i.d. N(0, 1/d) entries)
// Each random component draws from its own stream derived from the seed, so
// e.g. changing the weight model leaves the ground truth and noise untouched.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

/// e = eta * G with eta = eta_factor * max_ij X_ij, G i.i.d. N(0,1) on a random
/// support of floor(alpha * count) entries (all entries when alpha is unset).
struct GaussianScaledNoise {
  double eta_factor = 0.2;
  std::optional<double> alpha;
};

/// floor(alpha * count) entries uniform in [low, high], zero elsewhere.
struct SparseLargeNoise {
  double alpha = 0.1;
  double low = -50.0;
  double high = 50.0;
};

struct AdditiveGaussianNoise {
  double sigma = 1.0;
};

using NoiseModel = std::variant<GaussianScaledNoise, SparseLargeNoise, AdditiveGaussianNoise>;

struct AllOnesWeights {};

struct UniformIntWeights {
  std::int64_t w_min = 1;
  std::int64_t w_max = 10;
};

/// floor(alpha * count) random entries get integer weights in [w_min, w_max]; the rest are 1.
struct LargeOnSupportWeights {
  double alpha = 0.1;
  std::int64_t w_min = 5;
  std::int64_t w_max = 10;
};

using WeightModel = std::variant<AllOnesWeights, UniformIntWeights, LargeOnSupportWeights>;

struct MaskSpec {
  double fraction = 0.5;     // probability an entry is observed
  bool exact_count = false;  // observe exactly floor(fraction * mn) entries instead
};

struct SensingSpec {
  Index measurements = 1;
};

struct SyntheticSpec {
  Index m = 100;
  Index n = 100;
  Index rank = 5;
  NoiseModel noise = AdditiveGaussianNoise{};
  WeightModel weights = AllOnesWeights{};
  std::optional<MaskSpec> mask;
  std::optional<SensingSpec> sensing;
  std::uint64_t seed = 0;
};

inline void validate(const SyntheticSpec& s) {
  if (s.m < 1 || s.n < 1) throw InvalidSpecError("spec: m and n must be positive");
  if (s.rank < 1) throw InvalidSpecError("spec: rank must be positive");
  if (s.rank >= std::min(s.m, s.n)) {
    throw InvalidSpecError("spec: rank must be smaller than min(m, n) (rank " + std::to_string(s.rank) +
                           ", min(m, n) " + std::to_string(std::min(s.m, s.n)) + ")");
  }
  const auto check_alpha = [](double a, const char* what) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidSpecError(std::string("spec: ") + what + " alpha must lie in (0,1)");
  };
  std::visit(
      [&](const auto& nz) {
        using T = std::decay_t<decltype(nz)>;
        if constexpr (std::is_same_v<T, GaussianScaledNoise>) {
          if (nz.alpha) check_alpha(*nz.alpha, "noise");
          if (!std::isfinite(nz.eta_factor)) throw InvalidSpecError("spec: eta_factor must be finite");
        } else if constexpr (std::is_same_v<T, SparseLargeNoise>) {
          check_alpha(nz.alpha, "noise");
          if (!(nz.low <= nz.high)) throw InvalidSpecError("spec: sparse noise needs low <= high");
        } else {
          if (!(nz.sigma >= 0.0)) throw InvalidSpecError("spec: sigma must be nonnegative");
        }
      },
      s.noise);
  std::visit(
      [&](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (!std::is_same_v<T, AllOnesWeights>) {
          if (w.w_min > w.w_max) throw InvalidSpecError("spec: weights need w_min <= w_max");
          if (w.w_min < 0) throw InvalidSpecError("spec: weights must be nonnegative");
        }
        if constexpr (std::is_same_v<T, LargeOnSupportWeights>) check_alpha(w.alpha, "weight");
      },
      s.weights);
  if (s.mask && !(s.mask->fraction > 0.0 && s.mask->fraction <= 1.0)) {
    throw InvalidSpecError("spec: mask fraction must lie in (0,1]");
  }
  if (s.sensing && s.sensing->measurements < 1) throw InvalidSpecError("spec: sensing needs >= 1 measurement");
  if (s.mask && s.sensing) throw InvalidSpecError("spec: mask and sensing are mutually exclusive");
}

struct GeneratedProblem {
  ObservationOp op;
  Matrix observed;
  Matrix weights;
  Matrix ground_truth;
  Matrix noise;  // codomain shaped

  Problem problem(double tau) const { return Problem(op, observed, weights, tau); }
  double noise_norm() const { return noise.norm(); }
};

namespace detail {

enum Stream : std::uint64_t {
  truth = 1,
  noise_values = 2,
  noise_support = 3,
  mask = 4,
  weights = 5,
  weight_support = 6,
  sensing = 7,
};

inline Matrix support_matrix(Index rows, Index cols, Index count, Rng& rng) {
  Matrix s = Matrix::Zero(rows, cols);
  for (const Index i : rng.choose(rows * cols, count)) s.data()[i] = 1.0;
  return s;
}

inline Matrix make_noise(const NoiseModel& model, Index rows, Index cols, const Matrix& truth, std::uint64_t seed) {
  Rng values(seed, noise_values);
  Rng support(seed, noise_support);
  const Index total = rows * cols;
  return std::visit(
      [&](const auto& nz) -> Matrix {
        using T = std::decay_t<decltype(nz)>;
        if constexpr (std::is_same_v<T, GaussianScaledNoise>) {
          const double eta = nz.eta_factor * truth.maxCoeff();
          Matrix g = values.normal_matrix(rows, cols, eta);
          if (nz.alpha) {
            const auto count = static_cast<Index>(std::floor(*nz.alpha * static_cast<double>(total)));
            g.array() *= support_matrix(rows, cols, count, support).array();
          }
          return g;
        } else if constexpr (std::is_same_v<T, SparseLargeNoise>) {
          const auto count = static_cast<Index>(std::floor(nz.alpha * static_cast<double>(total)));
          Matrix e = Matrix::Zero(rows, cols);
          for (const Index i : support.choose(total, count)) e.data()[i] = values.uniform(nz.low, nz.high);
          return e;
        } else {
          return values.normal_matrix(rows, cols, nz.sigma);
        }
      },
      model);
}

inline Matrix make_weights(const WeightModel& model, Index rows, Index cols, std::uint64_t seed, std::uint64_t salt) {
  Rng values(seed, weights + 16 * salt);
  Rng support(seed, weight_support + 16 * salt);
  return std::visit(
      [&](const auto& w) -> Matrix {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, AllOnesWeights>) {
          return Matrix::Ones(rows, cols);
        } else if constexpr (std::is_same_v<T, UniformIntWeights>) {
          Matrix out(rows, cols);
          for (Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<double>(values.uniform_int(w.w_min, w.w_max));
          return out;
        } else {
          const auto count = static_cast<Index>(std::floor(w.alpha * static_cast<double>(rows * cols)));
          Matrix out = Matrix::Ones(rows, cols);
          for (const Index i : support.choose(rows * cols, count)) {
            out.data()[i] = static_cast<double>(values.uniform_int(w.w_min, w.w_max));
          }
          return out;
        }
      },
      model);
}

}  // namespace detail

inline GeneratedProblem generate(const SyntheticSpec& spec) {
  validate(spec);
  Rng truth_rng(spec.seed, detail::truth);
  const Matrix a = truth_rng.normal_matrix(spec.m, spec.rank);
  const Matrix b = truth_rng.normal_matrix(spec.rank, spec.n);
  Matrix truth = a * b;

  if (spec.sensing) {
    const Index d = spec.sensing->measurements;
    Rng sensing_rng(spec.seed, detail::sensing);
    Matrix s = sensing_rng.normal_matrix(d, spec.m * spec.n, 1.0 / std::sqrt(static_cast<double>(d)));
    ObservationOp op = ObservationOp::dense_sensing(std::move(s), spec.m, spec.n);
    Matrix noise = detail::make_noise(spec.noise, d, 1, truth, spec.seed);
    Matrix observed = op.apply(truth) + noise;
    Matrix weights = detail::make_weights(spec.weights, d, 1, spec.seed, 0);
    return {std::move(op), std::move(observed), std::move(weights), std::move(truth), std::move(noise)};
  }

  Matrix noise = detail::make_noise(spec.noise, spec.m, spec.n, truth, spec.seed);
  Matrix weights = detail::make_weights(spec.weights, spec.m, spec.n, spec.seed, 0);
  if (spec.mask) {
    Rng mask_rng(spec.seed, detail::mask);
    Matrix mask;
    if (spec.mask->exact_count) {
      const auto count = static_cast<Index>(std::floor(spec.mask->fraction * static_cast<double>(spec.m * spec.n)));
      mask = detail::support_matrix(spec.m, spec.n, count, mask_rng);
    } else {
      mask.resize(spec.m, spec.n);
      for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = mask_rng.uniform() < spec.mask->fraction ? 1.0 : 0.0;
    }
    Matrix observed = mask.cwiseProduct(truth) + noise;
    ObservationOp op = ObservationOp::entry_mask(std::move(mask));
    return {std::move(op), std::move(observed), std::move(weights), std::move(truth), std::move(noise)};
  }

  Matrix observed = truth + noise;
  return {ObservationOp::identity(spec.m, spec.n), std::move(observed), std::move(weights), std::move(truth),
          std::move(noise)};
}

/// ||F - X|| / sqrt(mn)
inline double rmse(const Matrix& f, const Matrix& x) {
  require_same_shape(f, x, "rmse");
  return (f - x).norm() / std::sqrt(static_cast<double>(f.size()));
}

/// inside:  ||(F - X) .* W|| / ||W||
/// outside: ||(F - X) .* (1 - W)|| / ||1 - W||  (W binary)
inline double fidelity(const Matrix& f, const Matrix& x, const Matrix& w, bool inside) {
  require_same_shape(f, x, "fidelity");
  require_same_shape(f, w, "fidelity");
  const Matrix selector = inside ? w : Matrix((1.0 - w.array()).matrix());
  const double denom = selector.norm();
  if (denom == 0.0) {
    throw UndefinedMetricError(inside ? "fidelity: weight matrix is zero" : "fidelity: 1 - W is zero");
  }
  return (f - x).cwiseProduct(selector).norm() / denom;
}

struct ConditionNumber {
  double value = 0.0;  // +inf when singular
  bool singular = false;
};

/// sigma_1 / sigma_min; singular when sigma_min <= eps * max(m, n) * sigma_1.
inline ConditionNumber condition_number(const Matrix& w) {
  const Vector sigma = singular_values(w);
  const double top = sigma(0);
  const double bottom = sigma(sigma.size() - 1);
  const double cut = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(w.rows(), w.cols())) * top;
  if (top == 0.0 || bottom <= cut) return {std::numeric_limits<double>::infinity(), true};
  return {top / bottom, false};
}

struct SweepInstance {
  GeneratedProblem generated;
  std::int64_t max_weight = 0;
  ConditionNumber kappa;
};

/// One instance per maximum weight; the ground truth and noise are shared, the
/// weights are UniformInt(1, max_weight) drawn from a separate stream per entry of the list.
inline std::vector<SweepInstance> condition_number_sweep(const SyntheticSpec& base,
                                                         const std::vector<std::int64_t>& max_weights) {
  const auto* uniform = std::get_if<UniformIntWeights>(&base.weights);
  if (uniform == nullptr || uniform->w_min != 1) {
    throw InvalidSpecError("condition_number_sweep: base spec needs uniform_int weights with w_min = 1");
  }
  if (base.sensing) throw InvalidSpecError("condition_number_sweep: sensing instances are not supported");
  const GeneratedProblem shared = generate(base);
  std::vector<SweepInstance> out;
  out.reserve(max_weights.size());
  for (std::size_t i = 0; i < max_weights.size(); ++i) {
    if (max_weights[i] < 1) throw InvalidSpecError("condition_number_sweep: max weight must be >= 1");
    SweepInstance inst{shared, max_weights[i], {}};
    inst.generated.weights = detail::make_weights(UniformIntWeights{1, max_weights[i]}, shared.weights.rows(),
                                                  shared.weights.cols(), base.seed, i + 1);
    inst.kappa = condition_number(inst.generated.weights);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace lowrank
