#pragma once

#include <span>
#include <vector>

#include "rdt/rng.hpp"
#include "rdt/tree.hpp"

namespace rdt {

/// Routing distribution of one internal node over its children, ordered as in
/// the topology.
struct ChildDistribution {
  NodeId node_id = 0;
  std::vector<double> probs;
};

/// Softmax over children c of (w_c . x + b_c), max-subtracted.
ChildDistribution child_distribution(const RdtModel& model, NodeId node,
                                     std::span<const double> x);

/// Log of child_distribution's probabilities, computed in log space.
std::vector<double> log_child_distribution(const RdtModel& model, NodeId node,
                                           std::span<const double> x);

/// Index into dist.probs (not a node id) drawn with probability probs[index].
std::size_t sample_child_index(const ChildDistribution& dist, Rng& rng);

/// Node id of the sampled child.
NodeId sample_child(const RdtModel& model, const ChildDistribution& dist, Rng& rng);

/// Product of the step probabilities along `path`, recomputed from the model.
/// Throws ParameterError if `path` is not a root-to-leaf path.
double trajectory_probability(const RdtModel& model, std::span<const double> x,
                              const Trajectory& path);

/// d log pi(chosen | node, x) / d theta_node, laid out like theta(node):
/// ([c == chosen] - p_c) * x_k for weights, ([c == chosen] - p_c) for biases.
/// Every other node's block is implicitly zero.
std::vector<double> log_prob_step_gradient(const RdtModel& model, NodeId node,
                                           std::span<const double> x,
                                           NodeId chosen_child);

/// Adds scale * log_prob_step_gradient(...) into `out`, given probabilities
/// already computed for this node.
void accumulate_step_gradient(std::span<const double> probs,
                              std::span<const double> x,
                              std::size_t chosen_index, double scale,
                              std::span<double> out);

}  // namespace rdt
