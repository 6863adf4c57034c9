#include "rdt/tree.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <string>

#include "atomic_write.hpp"
#include "rdt/errors.hpp"
#include "rdt/rng.hpp"
#include "text_util.hpp"

namespace rdt {

TreeTopology TreeTopology::from_children(
    std::vector<std::vector<NodeId>> children) {
  const std::size_t count = children.size();
  if (count == 0) throw ParameterError("topology has no nodes");

  TreeTopology t;
  t.parent_.assign(count, kNoParent);
  t.child_index_.assign(count, 0);
  for (NodeId node = 0; node < count; ++node) {
    for (std::size_t k = 0; k < children[node].size(); ++k) {
      const NodeId c = children[node][k];
      if (c >= count) {
        throw ParameterError("node " + std::to_string(node) +
                             " lists out-of-range child " + std::to_string(c));
      }
      if (c == 0) throw ParameterError("root listed as a child");
      if (t.parent_[c] != kNoParent) {
        throw ParameterError("node " + std::to_string(c) +
                             " has more than one parent");
      }
      t.parent_[c] = node;
      t.child_index_[c] = k;
    }
  }
  for (NodeId node = 1; node < count; ++node) {
    if (t.parent_[node] == kNoParent) {
      throw ParameterError("node " + std::to_string(node) + " has no parent");
    }
  }

  // Every node must be reachable from the root, which also rules out cycles.
  t.node_depth_.assign(count, 0);
  std::vector<bool> seen(count, false);
  std::deque<NodeId> queue{0};
  seen[0] = true;
  std::size_t visited = 0;
  while (!queue.empty()) {
    const NodeId node = queue.front();
    queue.pop_front();
    ++visited;
    for (NodeId c : children[node]) {
      if (seen[c]) throw ParameterError("topology contains a cycle");
      seen[c] = true;
      t.node_depth_[c] = t.node_depth_[node] + 1;
      queue.push_back(c);
    }
  }
  if (visited != count) throw ParameterError("topology is not connected");

  for (NodeId node = 0; node < count; ++node) {
    if (children[node].empty()) {
      t.leaves_.push_back(node);
      t.depth_ = std::max(t.depth_, t.node_depth_[node]);
    } else {
      t.internal_.push_back(node);
      t.width_ = std::max(t.width_, children[node].size());
    }
  }
  t.children_ = std::move(children);
  return t;
}

TreeTopology build_complete_tree(int width, int depth) {
  if (width < 2) throw ParameterError("tree width must be >= 2");
  if (depth < 1) throw ParameterError("tree depth must be >= 1");
  const auto w = static_cast<std::size_t>(width);

  std::size_t internal = 0;
  std::size_t level = 1;
  for (int d = 0; d < depth; ++d) {
    internal += level;
    level *= w;
    if (level > (std::size_t{1} << 28)) {
      throw ParameterError("tree too large");
    }
  }
  const std::size_t count = internal + level;

  // Breadth-first numbering: children of node i are w*i+1 .. w*i+w.
  std::vector<std::vector<NodeId>> children(count);
  for (NodeId node = 0; node < internal; ++node) {
    children[node].reserve(w);
    for (std::size_t k = 1; k <= w; ++k) children[node].push_back(w * node + k);
  }
  return TreeTopology::from_children(std::move(children));
}

void RdtModel::validate() const {
  if (input_dim == 0) throw ParameterError("input_dim must be >= 1");
  if (num_classes < 2) throw ParameterError("num_classes must be >= 2");
  const std::size_t count = topology.node_count();
  if (params.theta.size() != count || params.alpha.size() != count) {
    throw ParameterError("parameter tables do not match node count");
  }
  for (NodeId node = 0; node < count; ++node) {
    const std::size_t want_theta =
        topology.is_leaf(node) ? 0 : topology.children(node).size() * (input_dim + 1);
    const std::size_t want_alpha = topology.is_leaf(node) ? num_classes : 0;
    if (params.theta[node].size() != want_theta) {
      throw ParameterError("theta block of node " + std::to_string(node) +
                           " has wrong size");
    }
    if (params.alpha[node].size() != want_alpha) {
      throw ParameterError("alpha block of node " + std::to_string(node) +
                           " has wrong size");
    }
    for (double v : params.theta[node]) {
      if (!std::isfinite(v)) {
        throw ParameterError("non-finite theta at node " + std::to_string(node));
      }
    }
    for (double v : params.alpha[node]) {
      if (!std::isfinite(v)) {
        throw ParameterError("non-finite alpha at node " + std::to_string(node));
      }
    }
  }
}

ParameterSet zeros_like(const RdtModel& model) {
  ParameterSet out;
  out.theta.resize(model.params.theta.size());
  out.alpha.resize(model.params.alpha.size());
  for (std::size_t i = 0; i < out.theta.size(); ++i) {
    out.theta[i].assign(model.params.theta[i].size(), 0.0);
    out.alpha[i].assign(model.params.alpha[i].size(), 0.0);
  }
  return out;
}

std::vector<double> flatten(const ParameterSet& params) {
  std::vector<double> flat;
  for (const auto& block : params.theta) flat.insert(flat.end(), block.begin(), block.end());
  for (const auto& block : params.alpha) flat.insert(flat.end(), block.begin(), block.end());
  return flat;
}

void unflatten(std::span<const double> flat, ParameterSet& params) {
  std::size_t pos = 0;
  auto fill = [&](std::vector<std::vector<double>>& blocks) {
    for (auto& block : blocks) {
      if (pos + block.size() > flat.size()) {
        throw ParameterError("flat parameter vector too short");
      }
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), block.size(), block.begin());
      pos += block.size();
    }
  };
  fill(params.theta);
  fill(params.alpha);
  if (pos != flat.size()) throw ParameterError("flat parameter vector too long");
}

RdtModel init_model(const TreeTopology& topology, int input_dim,
                    int num_classes, double init_scale, std::uint64_t seed,
                    double alpha_center) {
  if (!std::isfinite(alpha_center)) throw ParameterError("alpha_center must be finite");
  if (input_dim < 1) throw ParameterError("input_dim must be >= 1");
  if (num_classes < 2) throw ParameterError("num_classes must be >= 2");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw ParameterError("init_scale must be a positive finite number");
  }
  RdtModel model;
  model.topology = topology;
  model.input_dim = static_cast<std::size_t>(input_dim);
  model.num_classes = static_cast<std::size_t>(num_classes);
  model.params.theta.resize(topology.node_count());
  model.params.alpha.resize(topology.node_count());

  Rng rng(seed);
  for (NodeId node = 0; node < topology.node_count(); ++node) {
    auto& block = topology.is_leaf(node) ? model.params.alpha[node]
                                         : model.params.theta[node];
    const std::size_t size = topology.is_leaf(node)
                                 ? model.num_classes
                                 : topology.children(node).size() * (model.input_dim + 1);
    block.resize(size);
    const double center = topology.is_leaf(node) ? alpha_center : 0.0;
    for (double& v : block) v = center + rng.uniform(-init_scale, init_scale);
  }
  return model;
}

// ----------------------------------------------------------------------------
// Model file format, version 1. See docs/FORMATS.md.

namespace {

constexpr std::string_view kModelMagic = "rdt-model";
constexpr int kModelVersion = 1;

void append_values(std::ostringstream& out, std::span<const double> values) {
  for (double v : values) out << ' ' << detail::format_double(v);
}

class ModelParser {
 public:
  explicit ModelParser(const std::string& text) : text_(text) {}

  // Returns the tokens of the next non-empty line; throws on EOF naming
  // `expected`.
  std::vector<std::string_view> next(std::string_view expected) {
    while (pos_ < text_.size()) {
      const auto end = text_.find('\n', pos_);
      const std::string_view line(
          text_.data() + pos_,
          (end == std::string::npos ? text_.size() : end) - pos_);
      pos_ = end == std::string::npos ? text_.size() : end + 1;
      ++line_no_;
      auto toks = detail::tokens(line);
      if (!toks.empty()) return toks;
    }
    fail(expected, "unexpected end of file");
  }

  std::vector<std::string_view> expect(std::string_view key, std::size_t arity) {
    auto toks = next(key);
    if (toks[0] != key) fail(key, "expected '" + std::string(key) + "'");
    if (arity != 0 && toks.size() != arity + 1) fail(key, "wrong number of values");
    return toks;
  }

  template <typename Int>
  Int integer(std::string_view field, std::string_view text) {
    auto v = detail::parse_int<Int>(text);
    if (!v) fail(field, "not an integer: '" + std::string(text) + "'");
    return *v;
  }

  double real(std::string_view field, std::string_view text) {
    auto v = detail::parse_double(text);
    if (!v) fail(field, "not a number: '" + std::string(text) + "'");
    return *v;
  }

  [[noreturn]] void fail(std::string_view field, const std::string& why) const {
    throw MalformedFileError("model file, line " + std::to_string(line_no_) +
                             ", field '" + std::string(field) + "': " + why);
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_model(const RdtModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "input_dim " << model.input_dim << '\n';
  out << "num_classes " << model.num_classes << '\n';
  out << "alpha_frozen " << (model.alpha_frozen ? 1 : 0) << '\n';
  const auto& topo = model.topology;
  out << "nodes " << topo.node_count() << '\n';
  for (NodeId node = 0; node < topo.node_count(); ++node) {
    out << "children " << node << ' ' << topo.children(node).size();
    for (NodeId c : topo.children(node)) out << ' ' << c;
    out << '\n';
  }
  for (NodeId node : topo.internal_nodes()) {
    out << "theta " << node;
    append_values(out, model.theta(node));
    out << '\n';
  }
  for (NodeId node : topo.leaves()) {
    out << "alpha " << node;
    append_values(out, model.alpha(node));
    out << '\n';
  }
  out << "end\n";
  detail::write_file_atomically(path, out.str());
}

RdtModel load_model(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  ModelParser p(text);

  auto magic = p.next("rdt-model");
  if (magic.size() != 2 || magic[0] != kModelMagic) p.fail("rdt-model", "not a model file");
  if (p.integer<int>("rdt-model", magic[1]) != kModelVersion) {
    p.fail("rdt-model", "unsupported version");
  }

  RdtModel model;
  model.input_dim = p.integer<std::size_t>("input_dim", p.expect("input_dim", 1)[1]);
  model.num_classes = p.integer<std::size_t>("num_classes", p.expect("num_classes", 1)[1]);
  const int frozen = p.integer<int>("alpha_frozen", p.expect("alpha_frozen", 1)[1]);
  if (frozen != 0 && frozen != 1) p.fail("alpha_frozen", "must be 0 or 1");
  model.alpha_frozen = frozen == 1;
  if (model.input_dim == 0) p.fail("input_dim", "must be >= 1");
  if (model.num_classes < 2) p.fail("num_classes", "must be >= 2");

  const auto count = p.integer<std::size_t>("nodes", p.expect("nodes", 1)[1]);
  if (count == 0) p.fail("nodes", "must be >= 1");
  std::vector<std::vector<NodeId>> children(count);
  for (NodeId node = 0; node < count; ++node) {
    auto toks = p.expect("children", 0);
    if (toks.size() < 3) p.fail("children", "missing node id or count");
    if (p.integer<NodeId>("children", toks[1]) != node) p.fail("children", "nodes out of order");
    const auto k = p.integer<std::size_t>("children", toks[2]);
    if (toks.size() != 3 + k) p.fail("children", "child count mismatch");
    for (std::size_t i = 0; i < k; ++i) {
      children[node].push_back(p.integer<NodeId>("children", toks[3 + i]));
    }
  }
  try {
    model.topology = TreeTopology::from_children(std::move(children));
  } catch (const ParameterError& e) {
    p.fail("children", e.what());
  }
  const auto& topo = model.topology;
  model.params.theta.resize(count);
  model.params.alpha.resize(count);

  std::vector<bool> have_theta(count, false), have_alpha(count, false);
  while (true) {
    auto toks = p.next("end");
    if (toks[0] == "end") break;
    const std::string field(toks[0]);
    if (field != "theta" && field != "alpha") p.fail(field, "unknown field");
    if (toks.size() < 2) p.fail(field, "missing node id");
    const auto node = p.integer<NodeId>(field, toks[1]);
    if (node >= count) p.fail(field, "node id out of range");
    const bool is_theta = field == "theta";
    if (is_theta == topo.is_leaf(node)) {
      p.fail(field, "node " + std::to_string(node) + " is the wrong kind");
    }
    auto& seen = is_theta ? have_theta : have_alpha;
    if (seen[node]) p.fail(field, "duplicate entry for node " + std::to_string(node));
    seen[node] = true;
    const std::size_t want = is_theta ? topo.children(node).size() * (model.input_dim + 1)
                                      : model.num_classes;
    if (toks.size() != 2 + want) {
      p.fail(field, "node " + std::to_string(node) + " expects " +
                        std::to_string(want) + " values");
    }
    auto& block = is_theta ? model.params.theta[node] : model.params.alpha[node];
    block.reserve(want);
    for (std::size_t i = 0; i < want; ++i) {
      const double v = p.real(field, toks[2 + i]);
      if (!std::isfinite(v)) p.fail(field, "non-finite value");
      block.push_back(v);
    }
  }
  for (NodeId node : topo.internal_nodes()) {
    if (!have_theta[node]) p.fail("theta", "missing for internal node " + std::to_string(node));
  }
  for (NodeId node : topo.leaves()) {
    if (!have_alpha[node]) p.fail("alpha", "missing for leaf " + std::to_string(node));
  }
  return model;
}

}  // namespace rdt
