#include "rdt/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "atomic_write.hpp"
#include "rdt/errors.hpp"
#include "rdt/policy.hpp"
#include "text_util.hpp"

namespace rdt {
namespace {

constexpr int kNoEpoch = -1;

// A sampled path together with the full child distribution at each step, so
// score-function gradients can be formed without re-evaluating the policy.
struct SampledPath {
  std::vector<NodeId> nodes;
  std::vector<std::size_t> choices;
  std::vector<std::vector<double>> probs;
  NodeId leaf() const { return nodes.back(); }
};

SampledPath sample_path(const RdtModel& model, std::span<const double> x, Rng& rng) {
  const auto& topo = model.topology;
  SampledPath path;
  NodeId node = topo.root();
  path.nodes.push_back(node);
  while (!topo.is_leaf(node)) {
    auto dist = child_distribution(model, node, x);
    const std::size_t k = sample_child_index(dist, rng);
    path.choices.push_back(k);
    path.probs.push_back(std::move(dist.probs));
    node = topo.children(node)[k];
    path.nodes.push_back(node);
  }
  return path;
}

void check_example(const RdtModel& model, std::span<const double> x,
                   std::span<const double> y) {
  if (x.size() != model.input_dim) throw ParameterError("input dimension mismatch");
  if (y.size() != model.num_classes) throw ParameterError("label dimension mismatch");
}

void check_dataset(const RdtModel& model, const Dataset& data) {
  if (data.input_dim != model.input_dim) {
    throw ParameterError("dataset input_dim " + std::to_string(data.input_dim) +
                         " does not match model input_dim " + std::to_string(model.input_dim));
  }
  if (data.num_classes != model.num_classes) {
    throw ParameterError("dataset has " + std::to_string(data.num_classes) +
                         " classes, model has " + std::to_string(model.num_classes));
  }
}

double sum_squares(const std::vector<std::vector<double>>& blocks) {
  double total = 0.0;
  for (const auto& b : blocks) {
    for (double v : b) total += v * v;
  }
  return total;
}

std::string csv_number(double v) {
  return std::isnan(v) ? std::string("nan") : detail::format_double(v);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning rate must be a finite number >= 0");
  }
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (trajectories_per_example < 1) throw ParameterError("trajectories per example must be >= 1");
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,test_acc\n";
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    out << (e + 1) << ',' << csv_number(train_loss[e]) << ',' << csv_number(train_acc[e])
        << ',' << csv_number(test_acc[e]) << '\n';
  }
  return out.str();
}

void TrainLog::save_csv(const std::filesystem::path& path) const {
  detail::write_file_atomically(path, to_csv());
}

double train_step(RdtModel& model, std::span<const double> x,
                  std::span<const double> y, const TrainConfig& cfg, Rng& rng,
                  BaselineState* baseline) {
  check_example(model, x, y);
  const int m = cfg.trajectories_per_example;
  const double step = cfg.learning_rate / m;

  std::vector<SampledPath> paths;
  std::vector<double> losses;
  std::vector<std::vector<double>> alpha_grads;
  paths.reserve(m);
  losses.reserve(m);
  for (int i = 0; i < m; ++i) {
    paths.push_back(sample_path(model, x, rng));
    const auto leaf_alpha = model.alpha(paths.back().leaf());
    const double loss = loss_value(cfg.loss, leaf_alpha, y);
    if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", kNoEpoch);
    losses.push_back(loss);
    if (!model.alpha_frozen) alpha_grads.push_back(loss_grad(cfg.loss, leaf_alpha, y));
  }

  double mean_loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const auto& path = paths[i];
    const double b = (cfg.baseline_enabled && baseline != nullptr) ? baseline->mean : 0.0;
    const double advantage = losses[i] - b;
    if (!model.alpha_frozen) {
      auto leaf_alpha = model.alpha(path.leaf());
      for (std::size_t c = 0; c < leaf_alpha.size(); ++c) leaf_alpha[c] -= step * alpha_grads[i][c];
    }
    for (std::size_t k = 0; k < path.choices.size(); ++k) {
      auto block = model.theta(path.nodes[k]);
      accumulate_step_gradient(path.probs[k], x, path.choices[k], -step * advantage, block);
      for (double v : block) {
        if (!std::isfinite(v)) throw DivergenceError("routing parameters diverged", kNoEpoch);
      }
    }
    mean_loss += losses[i] / m;
  }
  if (cfg.baseline_enabled && baseline != nullptr) {
    for (double l : losses) baseline->observe(l);
  }
  return mean_loss;
}

TrainLog train(RdtModel& model, const Dataset& train_set, const TrainConfig& cfg,
               const Dataset* eval_set, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ParameterError("training set is empty");
  check_dataset(model, train_set);
  if (eval_set != nullptr) check_dataset(model, *eval_set);
  model.validate();

  // Precomputed +/-1 codes, one per class.
  std::vector<std::vector<double>> codes(model.num_classes);
  for (std::size_t c = 0; c < codes.size(); ++c) {
    const auto y = LabelVector::one_hot(model.num_classes, c);
    codes[c].assign(y.values().begin(), y.values().end());
  }

  Rng rng(cfg.seed);
  BaselineState baseline;
  TrainLog log;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.uniform_sampling) {
      for (auto& i : order) i = static_cast<std::size_t>(rng.below(n));
    } else if (cfg.shuffle_each_epoch) {
      rng.shuffle(std::span(order));
    }
    double total = 0.0;
    try {
      for (std::size_t i : order) {
        const auto& ex = train_set.examples[i];
        total += train_step(model, ex.x, codes[ex.label], cfg, rng, &baseline);
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
    }
    log.train_loss.push_back(total / static_cast<double>(n));
    if (cfg.track_accuracy) {
      log.train_acc.push_back(accuracy(model, train_set));
      log.test_acc.push_back(eval_set != nullptr ? accuracy(model, *eval_set) : nan);
    } else {
      log.train_acc.push_back(nan);
      log.test_acc.push_back(nan);
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  log.theta_norm = std::sqrt(sum_squares(model.params.theta));
  log.alpha_norm = std::sqrt(sum_squares(model.params.alpha));
  return log;
}

double accuracy(const RdtModel& model, const Dataset& data, RouteMode mode, Rng* rng) {
  if (data.empty()) return 0.0;
  check_dataset(model, data);
  std::size_t hits = 0;
  for (const auto& ex : data.examples) {
    if (predict(model, ex.x, mode, rng).class_index == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double estimate_objective(const RdtModel& model, const Dataset& data,
                          int samples_per_example, Rng& rng, LossKind loss) {
  if (samples_per_example < 1) throw ParameterError("samples_per_example must be >= 1");
  if (data.empty()) throw ParameterError("dataset is empty");
  check_dataset(model, data);
  double total = 0.0;
  for (const auto& ex : data.examples) {
    const auto y = label_vector(data, ex);
    for (int s = 0; s < samples_per_example; ++s) {
      const auto path = sample_trajectory(model, ex.x, rng);
      total += loss_value(loss, model.alpha(path.leaf()), y.values());
    }
  }
  return total / (static_cast<double>(data.size()) * samples_per_example);
}

double exact_objective(const RdtModel& model, const Dataset& data, LossKind loss) {
  if (data.empty()) throw ParameterError("dataset is empty");
  check_dataset(model, data);
  double total = 0.0;
  for (const auto& ex : data.examples) {
    total += exact_expected_loss(model, ex.x, label_vector(data, ex).values(), loss);
  }
  return total / static_cast<double>(data.size());
}

ModelGradient exact_gradient(const RdtModel& model, const Dataset& data, LossKind loss) {
  if (data.empty()) throw ParameterError("dataset is empty");
  check_dataset(model, data);
  const auto& topo = model.topology;
  ModelGradient grad = zeros_like(model);
  const double inv_n = 1.0 / static_cast<double>(data.size());

  for (const auto& ex : data.examples) {
    const auto y = label_vector(data, ex);
    for (const auto& path : enumerate_paths(model, ex.x)) {
      const double weight = path.probability * inv_n;
      if (weight == 0.0) continue;
      const NodeId leaf = path.trajectory.leaf();
      const double value = loss_value(loss, model.alpha(leaf), y.values());
      for (std::size_t k = 0; k + 1 < path.trajectory.nodes.size(); ++k) {
        const NodeId node = path.trajectory.nodes[k];
        const NodeId next = path.trajectory.nodes[k + 1];
        const auto dist = child_distribution(model, node, ex.x);
        accumulate_step_gradient(dist.probs, ex.x, topo.child_index(next), weight * value,
                                 grad.theta[node]);
      }
      const auto g = loss_grad(loss, model.alpha(leaf), y.values());
      for (std::size_t c = 0; c < g.size(); ++c) grad.alpha[leaf][c] += weight * g[c];
    }
  }
  return grad;
}

ModelGradient sampled_gradient(const RdtModel& model, const Dataset& data,
                               LossKind loss, int trajectories, Rng& rng) {
  if (trajectories < 1) throw ParameterError("trajectories must be >= 1");
  if (data.empty()) throw ParameterError("dataset is empty");
  check_dataset(model, data);
  ModelGradient grad = zeros_like(model);
  const double scale = 1.0 / (static_cast<double>(data.size()) * trajectories);
  for (const auto& ex : data.examples) {
    const auto y = label_vector(data, ex);
    for (int s = 0; s < trajectories; ++s) {
      const auto path = sample_path(model, ex.x, rng);
      const auto leaf_alpha = model.alpha(path.leaf());
      const double value = loss_value(loss, leaf_alpha, y.values());
      for (std::size_t k = 0; k < path.choices.size(); ++k) {
        accumulate_step_gradient(path.probs[k], ex.x, path.choices[k], scale * value,
                                 grad.theta[path.nodes[k]]);
      }
      const auto g = loss_grad(loss, leaf_alpha, y.values());
      for (std::size_t c = 0; c < g.size(); ++c) grad.alpha[path.leaf()][c] += scale * g[c];
    }
  }
  return grad;
}

}  // namespace rdt
