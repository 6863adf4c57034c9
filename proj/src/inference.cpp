#include "rdt/inference.hpp"

#include <algorithm>
#include <string>

#include "rdt/errors.hpp"
#include "rdt/policy.hpp"

namespace rdt {
namespace {

template <typename ChooseIndex>
Trajectory walk(const RdtModel& model, std::span<const double> x,
                ChooseIndex&& choose, std::size_t* evaluations) {
  const auto& topo = model.topology;
  Trajectory path;
  path.nodes.reserve(topo.depth() + 1);
  path.step_probs.reserve(topo.depth());
  NodeId node = topo.root();
  path.nodes.push_back(node);
  while (!topo.is_leaf(node)) {
    const auto dist = child_distribution(model, node, x);
    if (evaluations != nullptr) ++*evaluations;
    const std::size_t k = choose(dist);
    path.step_probs.push_back(dist.probs[k]);
    node = topo.children(node)[k];
    path.nodes.push_back(node);
  }
  return path;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void check_enumerable(const RdtModel& model) {
  if (model.topology.leaf_count() > kMaxEnumerableLeaves) {
    throw TreeTooLargeError("tree has " + std::to_string(model.topology.leaf_count()) +
                            " leaves; enumeration is limited to " +
                            std::to_string(kMaxEnumerableLeaves));
  }
}

}  // namespace

Trajectory sample_trajectory(const RdtModel& model, std::span<const double> x,
                             Rng& rng) {
  return walk(model, x, [&](const ChildDistribution& d) { return sample_child_index(d, rng); },
              nullptr);
}

Trajectory greedy_trajectory(const RdtModel& model, std::span<const double> x) {
  return walk(model, x, [](const ChildDistribution& d) { return argmax(d.probs); },
              nullptr);
}

Prediction predict(const RdtModel& model, std::span<const double> x,
                   RouteMode mode, Rng* rng) {
  Prediction out;
  if (mode == RouteMode::kStochastic) {
    if (rng == nullptr) throw ParameterError("stochastic prediction needs an rng");
    out.trajectory = walk(
        model, x, [&](const ChildDistribution& d) { return sample_child_index(d, *rng); },
        &out.policy_evaluations);
  } else {
    out.trajectory = walk(
        model, x, [](const ChildDistribution& d) { return argmax(d.probs); },
        &out.policy_evaluations);
  }
  const auto leaf_alpha = model.alpha(out.trajectory.leaf());
  out.alpha.assign(leaf_alpha.begin(), leaf_alpha.end());
  out.class_index = predict_class(out.alpha);
  return out;
}

std::vector<WeightedPath> enumerate_paths(const RdtModel& model,
                                          std::span<const double> x) {
  check_enumerable(model);
  const auto& topo = model.topology;
  std::vector<WeightedPath> out;
  out.reserve(topo.leaf_count());

  Trajectory prefix;
  prefix.nodes.push_back(topo.root());
  // Depth-first; children visited in order so leaves come out by id for
  // breadth-first-numbered trees, then sorted to make that hold in general.
  auto visit = [&](auto&& self, NodeId node, double prob) -> void {
    if (topo.is_leaf(node)) {
      out.push_back({prefix, prob});
      return;
    }
    const auto dist = child_distribution(model, node, x);
    const auto kids = topo.children(node);
    for (std::size_t k = 0; k < kids.size(); ++k) {
      prefix.nodes.push_back(kids[k]);
      prefix.step_probs.push_back(dist.probs[k]);
      self(self, kids[k], prob * dist.probs[k]);
      prefix.nodes.pop_back();
      prefix.step_probs.pop_back();
    }
  };
  visit(visit, topo.root(), 1.0);
  std::sort(out.begin(), out.end(), [](const WeightedPath& a, const WeightedPath& b) {
    return a.trajectory.leaf() < b.trajectory.leaf();
  });
  return out;
}

double exact_expected_loss(const RdtModel& model, std::span<const double> x,
                           std::span<const double> y, LossKind loss) {
  double total = 0.0;
  for (const auto& path : enumerate_paths(model, x)) {
    total += path.probability * loss_value(loss, model.alpha(path.trajectory.leaf()), y);
  }
  return total;
}

}  // namespace rdt
