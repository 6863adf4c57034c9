#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace rdt {

using NodeId = std::size_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

/// Rooted tree over node ids 0..node_count-1, root = 0.
///
/// Any rooted tree can be represented; build_complete_tree() produces the
/// complete W-ary trees used for experiments, numbered breadth-first.
class TreeTopology {
 public:
  TreeTopology() = default;

  /// Builds a topology from per-node ordered child lists. Throws
  /// ParameterError unless the lists describe a single tree rooted at 0.
  static TreeTopology from_children(std::vector<std::vector<NodeId>> children);

  std::size_t node_count() const { return children_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }
  /// Largest child count over internal nodes.
  std::size_t width() const { return width_; }
  /// Largest leaf depth; root is at depth 0.
  std::size_t depth() const { return depth_; }

  NodeId root() const { return 0; }
  NodeId parent(NodeId node) const { return parent_.at(node); }
  std::span<const NodeId> children(NodeId node) const {
    return children_.at(node);
  }
  bool is_leaf(NodeId node) const { return children_.at(node).empty(); }
  std::size_t node_depth(NodeId node) const { return node_depth_.at(node); }

  /// Leaves in increasing id order.
  std::span<const NodeId> leaves() const { return leaves_; }
  std::span<const NodeId> internal_nodes() const { return internal_; }

  /// Position of `child` among the children of its parent.
  std::size_t child_index(NodeId child) const { return child_index_.at(child); }

  bool operator==(const TreeTopology&) const = default;

 private:
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> parent_;
  std::vector<std::size_t> node_depth_;
  std::vector<std::size_t> child_index_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> internal_;
  std::size_t width_ = 0;
  std::size_t depth_ = 0;
};

/// Complete `width`-ary tree with every leaf at `depth`. Requires width >= 2
/// and depth >= 1.
TreeTopology build_complete_tree(int width, int depth);

/// Per-node parameter storage indexed by node id.
///
/// theta[node] is the routing block of an internal node: one row of
/// (input_dim weights, bias) per child, row-major, i.e. children*(n+1) reals.
/// alpha[node] is the C-vector of a leaf. Entries for the other node kind are
/// empty. ModelGradient reuses the same layout.
struct ParameterSet {
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> alpha;

  bool operator==(const ParameterSet&) const = default;
};

using ModelGradient = ParameterSet;

struct RdtModel {
  TreeTopology topology;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  ParameterSet params;
  /// Set for the Random Tree baseline: leaf vectors never change.
  bool alpha_frozen = false;

  std::span<double> theta(NodeId node) { return params.theta.at(node); }
  std::span<const double> theta(NodeId node) const {
    return params.theta.at(node);
  }
  std::span<double> alpha(NodeId node) { return params.alpha.at(node); }
  std::span<const double> alpha(NodeId node) const {
    return params.alpha.at(node);
  }

  /// Throws ParameterError if block shapes disagree with the topology or a
  /// parameter is non-finite.
  void validate() const;

  bool operator==(const RdtModel&) const = default;
};

/// Zero-filled storage shaped like `model`'s parameters.
ParameterSet zeros_like(const RdtModel& model);

/// Flattened view order: theta blocks by node id, then alpha blocks by id.
std::vector<double> flatten(const ParameterSet& params);
void unflatten(std::span<const double> flat, ParameterSet& params);

/// Every theta entry drawn uniformly from [-init_scale, init_scale]; every
/// alpha entry from alpha_center + [-init_scale, init_scale].
RdtModel init_model(const TreeTopology& topology, int input_dim,
                    int num_classes, double init_scale, std::uint64_t seed,
                    double alpha_center = 0.0);

/// Value of every coordinate of the mean +/-1 label code under a uniform
/// class prior: -1 + 2/C. Leaves initialized here all start at the best
/// constant predictor, so no leaf starts with a much larger loss than another.
inline double class_prior_code(std::size_t num_classes) {
  return -1.0 + 2.0 / static_cast<double>(num_classes);
}

/// Root-to-leaf path with the probability of each step taken.
struct Trajectory {
  std::vector<NodeId> nodes;
  std::vector<double> step_probs;

  NodeId leaf() const { return nodes.back(); }
  bool operator==(const Trajectory&) const = default;
};

void save_model(const RdtModel& model, const std::filesystem::path& path);
RdtModel load_model(const std::filesystem::path& path);

}  // namespace rdt
