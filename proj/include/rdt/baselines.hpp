#pragma once

#include <cstdint>

#include "rdt/datagen.hpp"
#include "rdt/trainer.hpp"
#include "rdt/tree.hpp"

namespace rdt {

/// Random Tree baseline: routing initialized as in init_model, each leaf
/// labelled with a uniformly drawn class (+1 there, -1 elsewhere), leaves
/// frozen.
RdtModel make_random_tree(const TreeTopology& topology, int input_dim,
                          int num_classes, double init_scale, std::uint64_t seed);

/// Trains routing only. Throws ParameterError if `model` is not frozen.
TrainLog train_random_tree(RdtModel& model, const Dataset& train_set,
                           const TrainConfig& cfg, const Dataset* eval_set = nullptr,
                           const EpochCallback& on_epoch = nullptr);

/// Number of distinct classes predicted by at least one leaf.
std::size_t leaf_class_coverage(const RdtModel& model);

}  // namespace rdt
