#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rdt/errors.hpp"
#include "rdt/trainer.hpp"

namespace rdt {
namespace {

Dataset small_dataset(std::size_t classes, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.num_classes = classes;
  d.input_dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    d.examples.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, i % classes});
  }
  return d;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.learning_rate = -0.1;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.learning_rate = std::nan("");
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.trajectories_per_example = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(ExactObjective, MatchesOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = init_model(build_complete_tree(2 + s % 2, 1 + s % 3), 2, 4, 2.0, s);
    const auto d = small_dataset(4, 12, s);
    EXPECT_NEAR(exact_objective(m, d, LossKind::kSquare), static_cast<double>(oracle::objective(m, d, false)), 1e-12);
    EXPECT_NEAR(exact_objective(m, d, LossKind::kHinge), static_cast<double>(oracle::objective(m, d, true)), 1e-12);
  }
}

TEST(EstimateObjective, WithinThreeStandardErrors) {
  const auto m = init_model(build_complete_tree(3, 2), 2, 4, 1.5, 31);
  const auto d = small_dataset(4, 15, 32);
  // Exact variance of the estimator from the enumerated path distributions.
  double var = 0;
  for (const auto& ex : d.examples) {
    const auto y = oracle::code(4, ex.label);
    long double m1 = 0, m2 = 0;
    for (const auto& [leaf, p] : oracle::leaf_probs(m, ex.x)) {
      const long double l = oracle::square(m.params.alpha[leaf], y);
      m1 += p * l;
      m2 += p * l * l;
    }
    var += static_cast<double>(m2 - m1 * m1);
  }
  const int samples = 2000;
  const double se = std::sqrt(var / samples) / d.size();
  Rng rng(33);
  EXPECT_NEAR(estimate_objective(m, d, samples, rng), exact_objective(m, d, LossKind::kSquare), 3 * se);
}

TEST(ExactGradient, MatchesFiniteDifferencesSquare) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = init_model(build_complete_tree(2 + s % 2, 1 + s % 3), 2, 2 + s % 5, 1.0, 50 + s);
    const auto d = small_dataset(m.num_classes, 5 + s % 10, 70 + s);
    const auto g = flatten(exact_gradient(m, d, LossKind::kSquare));
    const auto fd = oracle::central_difference(
        m, [&](const RdtModel& p) { return oracle::objective(p, d, false); }, 1e-5);
    ASSERT_EQ(g.size(), fd.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_TRUE(oracle::close(g[i], fd[i], 1e-4, 1e-8)) << s << ":" << i << " " << g[i] << " vs " << fd[i];
    }
  }
}

TEST(ExactGradient, LeafBlockIsProbabilityWeightedLossGradient) {
  const auto m = init_model(build_complete_tree(2, 2), 2, 3, 1.0, 4);
  Dataset d;
  d.num_classes = 3;
  d.input_dim = 2;
  d.examples = {{{0.2, -0.1}, 1}};
  const auto g = exact_gradient(m, d, LossKind::kSquare);
  const auto probs = oracle::leaf_probs(m, d.examples[0].x);
  const auto y = oracle::code(3, 1);
  for (NodeId leaf : m.topology.leaves()) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double expected = static_cast<double>(probs.at(leaf)) * 2 * (m.params.alpha[leaf][c] - y[c]);
      EXPECT_NEAR(g.alpha[leaf][c], expected, 1e-14);
    }
  }
}

TEST(SampledGradient, AlignsWithExactOnStump) {
  const auto m = init_model(build_complete_tree(2, 1), 2, 3, 1.0, 8);
  const auto d = small_dataset(3, 10, 9);
  Rng rng(10);
  const auto exact = flatten(exact_gradient(m, d, LossKind::kSquare));
  const auto sampled = flatten(sampled_gradient(m, d, LossKind::kSquare, 20000, rng));
  EXPECT_GT(cosine(exact, sampled), 0.99);
}

TEST(TrainStep, ZeroLearningRateLeavesModelUnchanged) {
  auto m = init_model(build_complete_tree(2, 3), 2, 4, 0.5, 1);
  const auto before = m;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.baseline_enabled = true;
  cfg.trajectories_per_example = 3;
  Rng rng(2);
  BaselineState baseline;
  const auto y = oracle::code(4, 2);
  const std::vector<double> x{0.3, 0.1};
  for (int i = 0; i < 100; ++i) train_step(m, x, y, cfg, rng, &baseline);
  EXPECT_EQ(m, before);
  EXPECT_EQ(baseline.count, 300u);
}

TEST(TrainStep, MeanUpdateIsExactGradientStep) {
  // Without a baseline, E[theta' - theta] = -lr * grad J for a single example.
  const auto m = init_model(build_complete_tree(2, 2), 2, 3, 1.0, 12);
  Dataset d;
  d.num_classes = 3;
  d.input_dim = 2;
  d.examples = {{{0.5, -0.25}, 2}};
  const auto exact = flatten(exact_gradient(m, d, LossKind::kSquare));
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  Rng rng(13);
  const int reps = 40000;
  const auto base = flatten(m.params);
  std::vector<double> mean(base.size()), sq(base.size());
  for (int r = 0; r < reps; ++r) {
    auto probe = m;
    train_step(probe, d.examples[0].x, oracle::code(3, 2), cfg, rng);
    const auto after = flatten(probe.params);
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double g = (base[i] - after[i]) / cfg.learning_rate;
      mean[i] += g / reps;
      sq[i] += g * g / reps;
    }
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double se = std::sqrt(std::max(sq[i] - mean[i] * mean[i], 0.0) / reps);
    EXPECT_NEAR(mean[i], exact[i], 5 * se + 1e-9) << i;
  }
}

TEST(TrainStep, AveragedRoutingUpdateAlignsWithExactGradient) {
  const auto m = init_model(build_complete_tree(2, 1), 2, 3, 0.5, 40);
  Dataset d;
  d.num_classes = 3;
  d.input_dim = 2;
  d.examples = {{{0.7, 0.2}, 1}};
  const auto exact = exact_gradient(m, d, LossKind::kSquare).theta[0];
  TrainConfig cfg;
  cfg.learning_rate = 1e-6;
  Rng rng(41);
  std::vector<double> mean(exact.size());
  for (int r = 0; r < 10000; ++r) {
    auto probe = m;
    train_step(probe, d.examples[0].x, oracle::code(3, 1), cfg, rng);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += m.params.theta[0][i] - probe.params.theta[0][i];
  }
  EXPECT_GT(cosine(mean, exact), 0.99);
}

TEST(TrainStep, FrozenAlphaBitExact) {
  auto m = init_model(build_complete_tree(3, 2), 2, 4, 0.5, 3);
  m.alpha_frozen = true;
  const auto alpha = m.params.alpha;
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.trajectories_per_example = 2;
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    train_step(m, std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1)}, oracle::code(4, i % 4), cfg, rng);
  }
  EXPECT_EQ(m.params.alpha, alpha);
}

TEST(TrainStep, DivergenceIsReported) {
  // Unsaturated routing (zero scores) so the first update overflows.
  auto m = init_model(build_complete_tree(2, 2), 1, 2, 0.1, 0);
  for (NodeId n : m.topology.internal_nodes()) m.params.theta[n].assign(4, 0.0);
  Dataset d;
  d.num_classes = 2;
  d.input_dim = 1;
  d.examples = {{{1e300}, 0}, {{-1e300}, 1}};
  TrainConfig cfg;
  cfg.learning_rate = 1e10;
  cfg.epochs = 3;
  try {
    train(m, d, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1);
  }
}

TEST(TrainStep, ExplodingLeafScoresAreReported) {
  // lr = 10 on the square loss multiplies alpha - y by -19 per visit.
  auto m = init_model(build_complete_tree(2, 1), 1, 2, 0.1, 0);
  Dataset d;
  d.num_classes = 2;
  d.input_dim = 1;
  d.examples = {{{0.5}, 0}, {{-0.5}, 1}};
  TrainConfig cfg;
  cfg.learning_rate = 10.0;
  cfg.epochs = 10000;
  cfg.track_accuracy = false;
  EXPECT_THROW(train(m, d, cfg), DivergenceError);
}

TEST(BaselineState, CumulativeMean) {
  BaselineState b;
  b.observe(1.0);
  b.observe(2.0);
  b.observe(6.0);
  EXPECT_DOUBLE_EQ(b.mean, 3.0);
  EXPECT_EQ(b.count, 3u);
}

TEST(Train, ReproducibleForSameSeed) {
  GaussianSpec spec;
  spec.num_classes = 4;
  spec.per_class = 40;
  const auto split = generate_gaussian_dataset(spec);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 99;
  cfg.baseline_enabled = true;
  auto a = init_model(build_complete_tree(2, 3), 2, 4, 0.1, 1);
  auto b = a;
  const auto la = train(a, split.train, cfg, &split.test);
  const auto lb = train(b, split.train, cfg, &split.test);
  EXPECT_EQ(a, b);
  EXPECT_EQ(la.to_csv(), lb.to_csv());
  cfg.seed = 100;
  auto c = init_model(build_complete_tree(2, 3), 2, 4, 0.1, 1);
  train(c, split.train, cfg);
  EXPECT_NE(a.params, c.params);
}

TEST(Train, LogShapeAndCallback) {
  GaussianSpec spec;
  spec.num_classes = 4;
  spec.per_class = 20;
  const auto split = generate_gaussian_dataset(spec);
  TrainConfig cfg;
  cfg.epochs = 4;
  auto m = init_model(build_complete_tree(2, 2), 2, 4, 0.1, 1);
  std::vector<int> seen;
  const auto log = train(m, split.train, cfg, nullptr, [&](int e, const RdtModel&) { seen.push_back(e); });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4}));
  ASSERT_EQ(log.train_loss.size(), 4u);
  EXPECT_TRUE(std::isnan(log.test_acc[0]));
  const auto csv = log.to_csv();
  EXPECT_EQ(csv.rfind("epoch,train_loss,train_acc,test_acc\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find(",nan\n"), std::string::npos);
  EXPECT_GT(log.theta_norm, 0.0);
}

TEST(Train, DecreasesObjectiveOnSmallProblem) {
  GaussianSpec spec;
  spec.num_classes = 4;
  spec.per_class = 60;
  spec.seed = 4;
  const auto split = generate_gaussian_dataset(spec);
  auto m = init_model(build_complete_tree(2, 2), 2, 4, 0.1, 2, class_prior_code(4));
  const double before = exact_objective(m, split.train, LossKind::kSquare);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 0.05;
  cfg.baseline_enabled = true;
  train(m, split.train, cfg);
  EXPECT_LT(exact_objective(m, split.train, LossKind::kSquare), before * 0.75);
}

TEST(Train, SeparableTwoClassCase) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto split = sample_gaussian_classes({{-0.6, 0.0}, {0.6, 0.0}}, {0.1, 0.1}, 100, 20 + seed);
    auto m = init_model(build_complete_tree(2, 1), 2, 2, 0.1, seed);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = seed;
    train(m, split.train, cfg);
    good += accuracy(m, split.train) >= 0.95 && accuracy(m, split.test) >= 0.95;
  }
  EXPECT_GE(good, 4);
}

TEST(Train, RejectsMismatchedData) {
  auto m = init_model(build_complete_tree(2, 1), 3, 2, 0.1, 0);
  const auto d = small_dataset(2, 4, 0);
  EXPECT_THROW(train(m, d, TrainConfig{}), ParameterError);
  Dataset empty;
  empty.num_classes = 2;
  empty.input_dim = 3;
  EXPECT_THROW(train(m, empty, TrainConfig{}), ParameterError);
}

TEST(Accuracy, StochasticAndGreedy) {
  auto m = init_model(build_complete_tree(2, 1), 2, 2, 0.1, 0);
  m.params.theta[0] = {0, 0, 0, 0};
  m.params.alpha[1] = {1, -1};
  m.params.alpha[2] = {-1, 1};
  Dataset d;
  d.num_classes = 2;
  d.input_dim = 2;
  for (int i = 0; i < 2000; ++i) d.examples.push_back({{0, 0}, static_cast<std::size_t>(i % 2)});
  EXPECT_DOUBLE_EQ(accuracy(m, d), 0.5);
  Rng rng(1);
  EXPECT_NEAR(accuracy(m, d, RouteMode::kStochastic, &rng), 0.5, 0.05);
}

}  // namespace
}  // namespace rdt
