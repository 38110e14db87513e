#include <gtest/gtest.h>

#include <cmath>

#include "lowrank/problems.hpp"
#include "oracles.hpp"

using namespace lowrank;

namespace {

SyntheticSpec base_spec() {
  SyntheticSpec s;
  s.m = 40;
  s.n = 30;
  s.rank = 4;
  s.seed = 11;
  return s;
}

}  // namespace

TEST(Problems, Validation) {
  SyntheticSpec s = base_spec();
  s.rank = 30;
  try {
    generate(s);
    FAIL();
  } catch (const InvalidSpecError& e) {
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
  s = base_spec();
  s.weights = UniformIntWeights{10, 5};
  EXPECT_THROW(generate(s), InvalidSpecError);
  s = base_spec();
  s.noise = SparseLargeNoise{1.0, -50, 50};
  EXPECT_THROW(generate(s), InvalidSpecError);
  s = base_spec();
  s.mask = MaskSpec{0.0, false};
  EXPECT_THROW(generate(s), InvalidSpecError);
  s = base_spec();
  s.mask = MaskSpec{1.0, false};
  EXPECT_NO_THROW(generate(s));
}

TEST(Problems, GroundTruthRankAndAllOnes) {
  SyntheticSpec s = base_spec();
  s.m = s.n = 100;
  const GeneratedProblem g = generate(s);
  EXPECT_EQ(numerical_rank(g.ground_truth), 4);
  EXPECT_TRUE((g.weights.array() == 1.0).all());
  EXPECT_EQ(g.op.kind(), ObservationOp::Kind::identity);
  EXPECT_TRUE(g.observed.isApprox(g.ground_truth + g.noise, 1e-15));
}

TEST(Problems, GroundTruthRankProperty) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec s;
    s.m = rng.uniform_int(3, 30);
    s.n = rng.uniform_int(3, 30);
    s.rank = rng.uniform_int(1, std::min(s.m, s.n) - 1);
    s.seed = rng.next();
    EXPECT_EQ(numerical_rank(generate(s).ground_truth), s.rank);
  }
}

TEST(Problems, UniformIntWeights) {
  SyntheticSpec s = base_spec();
  s.weights = UniformIntWeights{5, 10};
  const GeneratedProblem g = generate(s);
  for (Index i = 0; i < g.weights.size(); ++i) {
    const double w = g.weights.data()[i];
    EXPECT_EQ(w, std::floor(w));
    EXPECT_GE(w, 5.0);
    EXPECT_LE(w, 10.0);
  }
  EXPECT_EQ(g.weights.minCoeff(), 5.0);
  EXPECT_EQ(g.weights.maxCoeff(), 10.0);
}

TEST(Problems, MaskFraction) {
  SyntheticSpec s;
  s.m = s.n = 2000;
  s.rank = 2;
  s.mask = MaskSpec{0.5, false};
  s.seed = 3;
  const GeneratedProblem g = generate(s);
  const double observed = g.op.mask().sum();
  EXPECT_NEAR(observed, 0.5 * 2000 * 2000, 0.01 * 0.5 * 2000 * 2000);
  EXPECT_TRUE(g.observed.isApprox(g.op.mask().cwiseProduct(g.ground_truth) + g.noise, 1e-15));

  SyntheticSpec exact = base_spec();
  exact.mask = MaskSpec{0.37, true};
  EXPECT_EQ(generate(exact).op.mask().sum(), std::floor(0.37 * 40 * 30));
}

TEST(Problems, LargeOnSupportWeights) {
  SyntheticSpec s = base_spec();
  s.weights = LargeOnSupportWeights{0.1, 5, 10};
  const GeneratedProblem g = generate(s);
  const auto heavy = (g.weights.array() != 1.0).count();
  EXPECT_EQ(heavy, static_cast<Index>(std::floor(0.1 * 40 * 30)));
  EXPECT_GE(g.weights.minCoeff(), 1.0);
  EXPECT_LE(g.weights.maxCoeff(), 10.0);
}

TEST(Problems, NoiseModels) {
  SyntheticSpec s = base_spec();
  s.noise = SparseLargeNoise{0.1, -50, 50};
  GeneratedProblem g = generate(s);
  EXPECT_EQ((g.noise.array() != 0.0).count(), static_cast<Index>(std::floor(0.1 * 1200)));
  EXPECT_LE(g.noise.cwiseAbs().maxCoeff(), 50.0);

  s.noise = GaussianScaledNoise{0.2, std::nullopt};
  g = generate(s);
  const double eta = 0.2 * g.ground_truth.maxCoeff();
  EXPECT_NEAR(g.noise.norm() / std::sqrt(1200.0), eta, 0.1 * eta);

  s.noise = GaussianScaledNoise{0.2, 0.05};
  g = generate(s);
  EXPECT_EQ((g.noise.array() != 0.0).count(), 60);
}

TEST(Problems, DenseSensing) {
  SyntheticSpec s = base_spec();
  s.m = 10;
  s.n = 8;
  s.rank = 2;
  s.sensing = SensingSpec{50};
  const GeneratedProblem g = generate(s);
  EXPECT_EQ(g.op.kind(), ObservationOp::Kind::dense_sensing);
  EXPECT_EQ(g.observed.rows(), 50);
  EXPECT_EQ(g.observed.cols(), 1);
  EXPECT_EQ(g.weights.rows(), 50);
  EXPECT_TRUE(g.observed.isApprox(oracle::apply(g.op, g.ground_truth) + g.noise, 1e-12));
}

TEST(Problems, Deterministic) {
  SyntheticSpec s = base_spec();
  s.mask = MaskSpec{0.5, false};
  s.weights = UniformIntWeights{1, 7};
  s.noise = SparseLargeNoise{};
  const GeneratedProblem a = generate(s);
  const GeneratedProblem b = generate(s);
  EXPECT_EQ(a.observed, b.observed);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_EQ(a.op.mask(), b.op.mask());
  s.seed += 1;
  EXPECT_NE(generate(s).ground_truth, a.ground_truth);
}

TEST(Problems, StreamsAreIndependent) {
  SyntheticSpec s = base_spec();
  const GeneratedProblem a = generate(s);
  s.weights = UniformIntWeights{1, 100};
  const GeneratedProblem b = generate(s);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_EQ(a.noise, b.noise);
}

TEST(Problems, Rmse) {
  Rng rng(4);
  const Matrix f = rng.normal_matrix(5, 6);
  EXPECT_EQ(rmse(f, f), 0.0);
  EXPECT_DOUBLE_EQ(rmse(f, Matrix(f.array() + 1.0)), 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = rng.normal_matrix(5, 6);
    const double direct = oracle::frobenius(f - x) / std::sqrt(30.0);
    EXPECT_NEAR(rmse(f, x), direct, 1e-14);
    EXPECT_LE(rmse(f, x), (f - x).cwiseAbs().maxCoeff() * (1 + 1e-15));
  }
  EXPECT_THROW(rmse(f, Matrix::Zero(6, 5)), DimensionError);
}

TEST(Problems, Fidelity) {
  Rng rng(5);
  const Matrix f = rng.normal_matrix(4, 5);
  const Matrix x = rng.normal_matrix(4, 5);
  Matrix w = Matrix::Zero(4, 5);
  w(0, 0) = w(1, 2) = 1.0;
  EXPECT_EQ(fidelity(f, f, w, true), 0.0);
  EXPECT_EQ(fidelity(f, f, w, false), 0.0);
  EXPECT_NEAR(fidelity(f, x, Matrix::Ones(4, 5), true), rmse(f, x), 1e-14);
  EXPECT_THROW(fidelity(f, x, Matrix::Ones(4, 5), false), UndefinedMetricError);
  EXPECT_THROW(fidelity(f, x, Matrix::Zero(4, 5), true), UndefinedMetricError);
  const double inside = std::sqrt((std::pow(f(0, 0) - x(0, 0), 2) + std::pow(f(1, 2) - x(1, 2), 2)) / 2.0);
  EXPECT_NEAR(fidelity(f, x, w, true), inside, 1e-14);
}

TEST(Problems, ConditionNumber) {
  EXPECT_TRUE(condition_number(Matrix::Constant(5, 5, 3.0)).singular);
  EXPECT_TRUE(std::isinf(condition_number(Matrix::Constant(5, 5, 3.0)).value));
  const ConditionNumber k = condition_number(make_matrix(2, 2, {4, 0, 0, 2}));
  EXPECT_FALSE(k.singular);
  EXPECT_NEAR(k.value, 2.0, 1e-14);
}

TEST(Problems, ConditionNumberSweep) {
  SyntheticSpec s = base_spec();
  s.m = s.n = 100;
  s.rank = 5;
  s.weights = UniformIntWeights{1, 10};
  const auto single = condition_number_sweep(s, {10});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_FALSE(single[0].kappa.singular);
  EXPECT_GT(single[0].kappa.value, 1.0);
  EXPECT_EQ(single[0].generated.weights.maxCoeff(), 10.0);

  const auto sweep = condition_number_sweep(s, {10, 1000, 100000});
  ASSERT_EQ(sweep.size(), 3u);
  for (const auto& inst : sweep) {
    EXPECT_EQ(inst.generated.ground_truth, sweep[0].generated.ground_truth);
    EXPECT_LE(inst.generated.weights.maxCoeff(), double(inst.max_weight));
    EXPECT_GE(inst.generated.weights.minCoeff(), 1.0);
  }
  s.weights = UniformIntWeights{2, 10};
  EXPECT_THROW(condition_number_sweep(s, {10}), InvalidSpecError);
  s.weights = AllOnesWeights{};
  EXPECT_THROW(condition_number_sweep(s, {10}), InvalidSpecError);
}
