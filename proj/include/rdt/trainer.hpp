#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdt/datagen.hpp"
#include "rdt/inference.hpp"
#include "rdt/losses.hpp"
#include "rdt/rng.hpp"
#include "rdt/tree.hpp"

namespace rdt {

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  /// Trajectories sampled per visited example (M).
  int trajectories_per_example = 1;
  LossKind loss = LossKind::kSquare;
  std::uint64_t seed = 0;
  /// Subtract a running mean of past losses from the routing update.
  bool baseline_enabled = false;
  bool shuffle_each_epoch = true;
  /// Draw N examples uniformly with replacement per epoch instead of one
  /// pass over a permutation.
  bool uniform_sampling = false;
  /// Record greedy train/test accuracy after each epoch. Costs one extra
  /// inference pass per epoch.
  bool track_accuracy = true;

  void validate() const;
};

struct TrainLog {
  std::vector<double> train_loss;
  std::vector<double> train_acc;
  std::vector<double> test_acc;
  double theta_norm = 0.0;
  double alpha_norm = 0.0;

  /// "epoch,train_loss,train_acc,test_acc" rows, epochs numbered from 1.
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;

  bool operator==(const TrainLog&) const = default;
};

/// Running mean of observed losses, used as the optional REINFORCE baseline.
struct BaselineState {
  double mean = 0.0;
  std::size_t count = 0;
  void observe(double loss) {
    ++count;
    mean += (loss - mean) / static_cast<double>(count);
  }
};

/// One stochastic update on (x, y): samples M trajectories from the current
/// model, then for each applies
///   alpha_leaf -= (lr / M) * dLoss/dalpha          (unless alpha_frozen)
///   theta_k    -= (lr / M) * dlog pi_k * (loss - b) for every node on the path
/// where b is 0 or the running baseline. All M gradients are taken at the
/// pre-step parameters. Returns the mean sampled loss.
double train_step(RdtModel& model, std::span<const double> x,
                  std::span<const double> y, const TrainConfig& cfg, Rng& rng,
                  BaselineState* baseline = nullptr);

using EpochCallback = std::function<void(int epoch, const RdtModel& model)>;

/// cfg.epochs passes of train_step over `train_set`. `on_epoch`, if given, is
/// invoked after each epoch with its 1-based index.
TrainLog train(RdtModel& model, const Dataset& train_set, const TrainConfig& cfg,
               const Dataset* eval_set = nullptr,
               const EpochCallback& on_epoch = nullptr);

/// Fraction of `data` whose predicted class matches the label. Stochastic
/// mode draws one trajectory per example and needs `rng`.
double accuracy(const RdtModel& model, const Dataset& data,
                RouteMode mode = RouteMode::kGreedy, Rng* rng = nullptr);

/// Monte Carlo estimate of the expected loss over `data`.
double estimate_objective(const RdtModel& model, const Dataset& data,
                          int samples_per_example, Rng& rng,
                          LossKind loss = LossKind::kSquare);

/// Mean of exact_expected_loss over `data`.
double exact_objective(const RdtModel& model, const Dataset& data, LossKind loss);

/// Gradient of exact_objective by path enumeration:
///   (1/N) sum_i sum_H P(H|x_i) [ grad log P(H|x_i) loss_H + grad_alpha loss_H ].
ModelGradient exact_gradient(const RdtModel& model, const Dataset& data, LossKind loss);

/// Monte Carlo version of exact_gradient with `trajectories` samples per
/// example; this is the quantity train_step descends along.
ModelGradient sampled_gradient(const RdtModel& model, const Dataset& data,
                               LossKind loss, int trajectories, Rng& rng);

}  // namespace rdt
