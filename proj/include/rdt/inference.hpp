#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rdt/losses.hpp"
#include "rdt/rng.hpp"
#include "rdt/tree.hpp"

namespace rdt {

enum class RouteMode { kGreedy, kStochastic };

/// Enumeration oracles refuse trees with more leaves than this.
inline constexpr std::size_t kMaxEnumerableLeaves = 10'000;

/// Walks from the root, sampling each step from the routing policy.
Trajectory sample_trajectory(const RdtModel& model, std::span<const double> x,
                             Rng& rng);

/// Follows the most probable child at every node; ties go to the lowest
/// child index.
Trajectory greedy_trajectory(const RdtModel& model, std::span<const double> x);

struct Prediction {
  std::vector<double> alpha;
  std::size_t class_index = 0;
  Trajectory trajectory;
  /// Number of child_distribution evaluations performed.
  std::size_t policy_evaluations = 0;
};

/// `rng` must be set for kStochastic and is ignored for kGreedy.
Prediction predict(const RdtModel& model, std::span<const double> x,
                   RouteMode mode, Rng* rng = nullptr);

struct WeightedPath {
  Trajectory trajectory;
  double probability = 0.0;
};

/// One entry per leaf, in leaf-id order.
std::vector<WeightedPath> enumerate_paths(const RdtModel& model,
                                          std::span<const double> x);

/// sum over leaves of P(H | x) * loss(alpha_leaf, y).
double exact_expected_loss(const RdtModel& model, std::span<const double> x,
                           std::span<const double> y, LossKind loss);

}  // namespace rdt
