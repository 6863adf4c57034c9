#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rdt/datagen.hpp"
#include "rdt/losses.hpp"
#include "rdt/trainer.hpp"

namespace rdt {

enum class Method { kRdt, kRandomTree };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

/// How leaf score vectors are initialized for jointly trained trees.
enum class AlphaInit {
  kUniform,     ///< uniform in [-init_scale, init_scale]
  kClassPrior,  ///< class_prior_code(C) + uniform noise
};

struct TreeShape {
  int width = 2;
  int depth = 1;
  std::size_t leaves() const;
  bool operator==(const TreeShape&) const = default;
};

struct ExperimentConfig {
  GaussianSpec dataset;
  std::vector<TreeShape> shapes;
  std::vector<Method> methods{Method::kRdt, Method::kRandomTree};
  int runs = 5;
  std::uint64_t master_seed = 0;

  // Training and tuning.
  LossKind loss = LossKind::kSquare;
  std::vector<double> learning_rates{0.3, 0.1, 0.03, 0.01};
  std::vector<int> epoch_grid{50, 200, 500};
  int trajectories_per_example = 1;
  bool baseline_enabled = false;
  double init_scale = 0.1;
  AlphaInit alpha_init = AlphaInit::kClassPrior;
  double validation_fraction = 0.2;
  /// Draws used to estimate stochastic-routing test accuracy.
  int stochastic_samples = 10;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// Parses the JSON experiment config described in docs/FORMATS.md; missing
/// keys keep their defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunResult {
  TreeShape shape;
  Method method = Method::kRdt;
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double learning_rate = 0.0;
  int epochs = 0;
  double validation_accuracy = 0.0;
  double greedy_accuracy = 0.0;
  double stochastic_accuracy = 0.0;
  double stochastic_std_error = 0.0;
  std::size_t leaf_coverage = 0;
  double seconds = 0.0;
};

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  ///< population variance over successful runs
  double stddev() const;
};

/// Mean and population variance; zero for an empty input.
Summary summarize(const std::vector<double>& values);

struct RowSummary {
  TreeShape shape;
  Method method = Method::kRdt;
  int runs_ok = 0;
  Summary greedy;
  Summary stochastic;
  double mean_learning_rate = 0.0;
  double mean_epochs = 0.0;
  double mean_coverage = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  std::vector<RowSummary> rows;

  const RowSummary* find(TreeShape shape, Method method) const;
  /// Machine-readable report; byte-identical for identical configs.
  std::string to_text() const;
  /// Table in the W | D | L | RDT | Random Trees layout.
  std::string to_table() const;
  /// "shape,method,run,seconds" lines, kept out of to_text().
  std::string timing_csv() const;
};

/// Seed of run `run`: master_seed + run.
std::uint64_t run_seed(const ExperimentConfig& config, int run);

/// One (shape, method, run) job: grid search on a train/validation split,
/// retrain the winner on the full training set, evaluate on test.
RunResult run_single(const ExperimentConfig& config, const DatasetSplit& data,
                     TreeShape shape, Method method, int run);

using ProgressCallback = std::function<void(const RunResult&)>;

/// Runs every (shape, method, run) job, in parallel when threads allow, and
/// aggregates in config order. A failing job is recorded, not rethrown.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const ProgressCallback& progress = nullptr);

/// Re-derives every row line of a machine report from its run lines.
/// Returns an empty string when consistent, otherwise a description of the
/// first mismatch.
std::string check_report_consistency(const std::string& report_text);

}  // namespace rdt
