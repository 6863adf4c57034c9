#include "rdt/baselines.hpp"

#include <vector>

#include "rdt/errors.hpp"
#include "rdt/losses.hpp"
#include "rdt/rng.hpp"

namespace rdt {

RdtModel make_random_tree(const TreeTopology& topology, int input_dim,
                          int num_classes, double init_scale, std::uint64_t seed) {
  RdtModel model = init_model(topology, input_dim, num_classes, init_scale, seed);
  // Labels use a stream distinct from the one init_model consumed.
  Rng rng(seed ^ 0x5bd1e9955bd1e995ULL);
  for (NodeId leaf : model.topology.leaves()) {
    auto alpha = model.alpha(leaf);
    std::fill(alpha.begin(), alpha.end(), -1.0);
    alpha[rng.below(model.num_classes)] = 1.0;
  }
  model.alpha_frozen = true;
  return model;
}

TrainLog train_random_tree(RdtModel& model, const Dataset& train_set,
                           const TrainConfig& cfg, const Dataset* eval_set,
                           const EpochCallback& on_epoch) {
  if (!model.alpha_frozen) {
    throw ParameterError("train_random_tree requires a model with frozen leaves");
  }
  return train(model, train_set, cfg, eval_set, on_epoch);
}

std::size_t leaf_class_coverage(const RdtModel& model) {
  std::vector<bool> seen(model.num_classes, false);
  std::size_t covered = 0;
  for (NodeId leaf : model.topology.leaves()) {
    const auto c = predict_class(model.alpha(leaf));
    if (!seen[c]) {
      seen[c] = true;
      ++covered;
    }
  }
  return covered;
}

}  // namespace rdt
