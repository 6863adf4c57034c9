#include "rdt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdt/errors.hpp"

namespace rdt {
namespace {

void check_input(const RdtModel& model, NodeId node, std::span<const double> x) {
  if (node >= model.topology.node_count()) {
    throw ParameterError("node id " + std::to_string(node) + " out of range");
  }
  if (model.topology.is_leaf(node)) {
    throw ParameterError("node " + std::to_string(node) + " is a leaf");
  }
  if (x.size() != model.input_dim) {
    throw ParameterError("input has length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.input_dim));
  }
}

// Affine scores w_c . x + b_c for each child.
std::vector<double> scores(const RdtModel& model, NodeId node,
                           std::span<const double> x) {
  const auto block = model.theta(node);
  const std::size_t stride = model.input_dim + 1;
  const std::size_t width = model.topology.children(node).size();
  std::vector<double> s(width);
  for (std::size_t c = 0; c < width; ++c) {
    const double* row = block.data() + c * stride;
    double acc = row[model.input_dim];
    for (std::size_t k = 0; k < model.input_dim; ++k) acc += row[k] * x[k];
    s[c] = acc;
  }
  return s;
}

}  // namespace

ChildDistribution child_distribution(const RdtModel& model, NodeId node,
                                     std::span<const double> x) {
  check_input(model, node, x);
  ChildDistribution dist{node, scores(model, node, x)};
  auto& p = dist.probs;
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : p) v /= total;
  return dist;
}

std::vector<double> log_child_distribution(const RdtModel& model, NodeId node,
                                           std::span<const double> x) {
  check_input(model, node, x);
  auto s = scores(model, node, x);
  const double top = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double v : s) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  for (double& v : s) v -= log_norm;
  return s;
}

std::size_t sample_child_index(const ChildDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t c = 0; c < dist.probs.size(); ++c) {
    cumulative += dist.probs[c];
    if (u < cumulative) return c;
  }
  // Rounding left u above the final partial sum: fall back to the last child
  // with nonzero mass.
  for (std::size_t c = dist.probs.size(); c-- > 0;) {
    if (dist.probs[c] > 0.0) return c;
  }
  return 0;
}

NodeId sample_child(const RdtModel& model, const ChildDistribution& dist, Rng& rng) {
  return model.topology.children(dist.node_id)[sample_child_index(dist, rng)];
}

double trajectory_probability(const RdtModel& model, std::span<const double> x,
                              const Trajectory& path) {
  const auto& topo = model.topology;
  if (path.nodes.empty() || path.nodes.front() != topo.root()) {
    throw ParameterError("trajectory must start at the root");
  }
  if (!topo.is_leaf(path.nodes.back())) {
    throw ParameterError("trajectory must end at a leaf");
  }
  double prob = 1.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const NodeId from = path.nodes[i];
    const NodeId to = path.nodes[i + 1];
    if (to >= topo.node_count() || topo.parent(to) != from) {
      throw ParameterError("trajectory step " + std::to_string(from) + " -> " +
                           std::to_string(to) + " is not an edge");
    }
    prob *= child_distribution(model, from, x).probs[topo.child_index(to)];
  }
  return prob;
}

void accumulate_step_gradient(std::span<const double> probs,
                              std::span<const double> x,
                              std::size_t chosen_index, double scale,
                              std::span<double> out) {
  const std::size_t stride = x.size() + 1;
  if (chosen_index >= probs.size()) throw ParameterError("chosen child index out of range");
  if (out.size() != probs.size() * stride) {
    throw ParameterError("gradient block has " + std::to_string(out.size()) + " entries, expected " +
                         std::to_string(probs.size() * stride));
  }
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double coeff = scale * ((c == chosen_index ? 1.0 : 0.0) - probs[c]);
    double* row = out.data() + c * stride;
    for (std::size_t k = 0; k < x.size(); ++k) row[k] += coeff * x[k];
    row[x.size()] += coeff;
  }
}

std::vector<double> log_prob_step_gradient(const RdtModel& model, NodeId node,
                                           std::span<const double> x,
                                           NodeId chosen_child) {
  const auto dist = child_distribution(model, node, x);
  if (chosen_child >= model.topology.node_count() ||
      model.topology.parent(chosen_child) != node) {
    throw ParameterError("node " + std::to_string(chosen_child) +
                         " is not a child of " + std::to_string(node));
  }
  std::vector<double> grad(model.theta(node).size(), 0.0);
  accumulate_step_gradient(dist.probs, x, model.topology.child_index(chosen_child),
                           1.0, grad);
  return grad;
}

}  // namespace rdt
