// Command-line front end: dataset generation, training, evaluation,
// experiments and decision-frontier export.
//
// Exit codes: 0 success, 1 usage, 2 runtime or divergence, 3 I/O.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "atomic_write.hpp"
#include "rdt/baselines.hpp"
#include "rdt/datagen.hpp"
#include "rdt/errors.hpp"
#include "rdt/experiment.hpp"
#include "rdt/trainer.hpp"
#include "text_util.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIo = 3;

struct GenDataArgs {
  int classes = 16;
  int per_class = 100;
  std::uint64_t seed = 0;
  double sigma_min = 0.05;
  double sigma_max = 0.15;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string eval_data;
  int width = 2;
  int depth = 3;
  bool random_tree = false;
  double lr = 0.03;
  int epochs = 200;
  std::string loss = "square";
  std::uint64_t seed = 0;
  int trajectories = 1;
  bool baseline = false;
  double init_scale = 0.1;
  std::string alpha_init = "prior";
  std::string out;
  std::string log;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string mode = "greedy";
  int samples = 1000;
  std::uint64_t seed = 0;
};

struct FrontierArgs {
  std::string model;
  std::vector<double> bounds{-1.5, 1.5, -1.5, 1.5};
  int resolution = 100;
  std::string out;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  int threads = -1;
  bool quiet = false;
};

int gen_data(const GenDataArgs& a) {
  rdt::GaussianSpec spec;
  spec.num_classes = a.classes;
  spec.per_class = a.per_class;
  spec.seed = a.seed;
  spec.sigma_min = a.sigma_min;
  spec.sigma_max = a.sigma_max;
  const auto data = rdt::generate_gaussian_dataset(spec);
  const std::string train_path = a.out + ".train.csv";
  const std::string test_path = a.out + ".test.csv";
  rdt::save_dataset(data.train, train_path);
  rdt::save_dataset(data.test, test_path);
  std::cout << "wrote " << data.train.size() << " train examples to " << train_path << " and "
            << data.test.size() << " test examples to " << test_path << '\n';
  return 0;
}

int train_cmd(const TrainArgs& a) {
  const auto data = rdt::load_dataset(a.data);
  rdt::Dataset eval;
  const bool have_eval = !a.eval_data.empty();
  if (have_eval) eval = rdt::load_dataset(a.eval_data);

  const auto topology = rdt::build_complete_tree(a.width, a.depth);
  const int n = static_cast<int>(data.input_dim);
  const int classes = static_cast<int>(data.num_classes);
  rdt::RdtModel model;
  if (a.random_tree) {
    model = rdt::make_random_tree(topology, n, classes, a.init_scale, a.seed);
  } else {
    const double center = a.alpha_init == "prior" ? rdt::class_prior_code(data.num_classes) : 0.0;
    model = rdt::init_model(topology, n, classes, a.init_scale, a.seed, center);
  }

  rdt::TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.loss = rdt::parse_loss(a.loss);
  cfg.seed = a.seed;
  cfg.trajectories_per_example = a.trajectories;
  cfg.baseline_enabled = a.baseline;
  const auto log = a.random_tree
                       ? rdt::train_random_tree(model, data, cfg, have_eval ? &eval : nullptr)
                       : rdt::train(model, data, cfg, have_eval ? &eval : nullptr);
  rdt::save_model(model, a.out);
  const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  log.save_csv(log_path);
  std::cout << "trained W=" << a.width << " D=" << a.depth << " for " << a.epochs
            << " epochs; final train loss " << log.train_loss.back() << ", train accuracy "
            << log.train_acc.back();
  if (have_eval) std::cout << ", eval accuracy " << log.test_acc.back();
  std::cout << "\nmodel: " << a.out << "\nlog: " << log_path << '\n';
  return 0;
}

int eval_cmd(const EvalArgs& a) {
  const auto model = rdt::load_model(a.model);
  const auto data = rdt::load_dataset(a.data);
  if (a.mode == "greedy") {
    std::cout << "accuracy " << rdt::detail::format_double(rdt::accuracy(model, data)) << '\n';
    return 0;
  }
  rdt::Rng rng(a.seed);
  double total = 0.0;
  for (int s = 0; s < a.samples; ++s) {
    total += rdt::accuracy(model, data, rdt::RouteMode::kStochastic, &rng);
  }
  const double acc = total / a.samples;
  const double se = std::sqrt(acc * (1.0 - acc) / (static_cast<double>(data.size()) * a.samples));
  std::cout << "accuracy " << rdt::detail::format_double(acc) << " stderr "
            << rdt::detail::format_double(se) << '\n';
  return 0;
}

int frontier_cmd(const FrontierArgs& a) {
  const auto model = rdt::load_model(a.model);
  const rdt::Box box{{a.bounds[0], a.bounds[2]}, {a.bounds[1], a.bounds[3]}};
  const auto grid = rdt::frontier_grid(model, box, a.resolution);
  rdt::save_frontier(grid, a.out);
  std::cout << "wrote " << grid.points.size() << " grid points to " << a.out << '\n';
  return 0;
}

int experiment_cmd(const ExperimentArgs& a) {
  auto config = rdt::load_experiment_config(a.config);
  if (a.threads >= 0) config.threads = a.threads;
  const auto report = rdt::run_experiment(config, [&](const rdt::RunResult& r) {
    if (a.quiet) return;
    std::cerr << "W=" << r.shape.width << " D=" << r.shape.depth << ' '
              << rdt::method_name(r.method) << " run " << r.run << ": ";
    if (r.ok) {
      std::cerr << "acc " << r.greedy_accuracy << " (lr " << r.learning_rate << ", "
                << r.epochs << " epochs, " << r.seconds << " s)\n";
    } else {
      std::cerr << "FAILED " << r.failure << '\n';
    }
  });
  const std::string text = report.to_text();
  const std::string table = report.to_table();
  rdt::detail::write_file_atomically(a.out, text);
  rdt::detail::write_file_atomically(a.out + ".table.txt", table);
  rdt::detail::write_file_atomically(a.out + ".timing.csv", report.timing_csv());
  std::cout << table;
  const auto problem = rdt::check_report_consistency(text);
  if (!problem.empty()) {
    std::cerr << "report self-check failed: " << problem << '\n';
    return kExitRuntime;
  }
  for (const auto& r : report.runs) {
    if (!r.ok) return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforced decision trees: data generation, training and evaluation"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a 2D Gaussian-cluster dataset");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->check(CLI::Range(2, 1 << 20));
  gen_cmd->add_option("--per-class", gen.per_class, "Examples per class (even)")
      ->check(CLI::Range(2, 1 << 24));
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--sigma-min", gen.sigma_min)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sigma-max", gen.sigma_max)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output prefix; writes PREFIX.train.csv and PREFIX.test.csv")
      ->required();

  TrainArgs tr;
  auto* train_sub = app.add_subcommand("train", "Train a tree on a dataset CSV");
  train_sub->add_option("--data", tr.data, "Training dataset CSV")->required();
  train_sub->add_option("--eval-data", tr.eval_data, "Optional dataset scored after each epoch");
  train_sub->add_option("--width", tr.width)->check(CLI::Range(2, 64));
  train_sub->add_option("--depth", tr.depth)->check(CLI::Range(1, 24));
  train_sub->add_flag("--random-tree", tr.random_tree, "Random Tree baseline (frozen leaves)");
  train_sub->add_option("--lr", tr.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  train_sub->add_option("--epochs", tr.epochs)->check(CLI::Range(1, 1 << 24));
  train_sub->add_option("--loss", tr.loss)->check(CLI::IsMember({"square", "hinge"}));
  train_sub->add_option("--seed", tr.seed);
  train_sub->add_option("--trajectories", tr.trajectories, "Trajectories per example")
      ->check(CLI::Range(1, 1 << 16));
  train_sub->add_flag("--baseline", tr.baseline, "Subtract a running-mean loss baseline");
  train_sub->add_option("--init-scale", tr.init_scale)->check(CLI::PositiveNumber);
  train_sub->add_option("--alpha-init", tr.alpha_init)->check(CLI::IsMember({"uniform", "prior"}));
  train_sub->add_option("--out", tr.out, "Model output path")->required();
  train_sub->add_option("--log", tr.log, "Training log CSV (default: MODEL.log.csv)");

  EvalArgs ev;
  auto* eval_sub = app.add_subcommand("eval", "Accuracy of a model on a dataset");
  eval_sub->add_option("--model", ev.model)->required();
  eval_sub->add_option("--data", ev.data)->required();
  eval_sub->add_option("--mode", ev.mode)->check(CLI::IsMember({"greedy", "stochastic"}));
  eval_sub->add_option("--samples", ev.samples, "Passes in stochastic mode")
      ->check(CLI::Range(1, 1 << 24));
  eval_sub->add_option("--seed", ev.seed);

  FrontierArgs fr;
  auto* frontier_sub = app.add_subcommand("frontier", "Export a decision-frontier grid");
  frontier_sub->add_option("--model", fr.model)->required();
  frontier_sub->add_option("--bounds", fr.bounds, "x0_min,x0_max,x1_min,x1_max")
      ->delimiter(',')
      ->expected(4);
  frontier_sub->add_option("--resolution", fr.resolution)->check(CLI::Range(2, 1 << 14));
  frontier_sub->add_option("--out", fr.out)->required();

  ExperimentArgs ex;
  auto* exp_sub = app.add_subcommand("experiment", "Run a seeded experiment grid from a JSON config");
  exp_sub->add_option("--config", ex.config)->required();
  exp_sub->add_option("--out", ex.out, "Machine-readable report path")->required();
  exp_sub->add_option("--threads", ex.threads, "Override the config's worker count");
  exp_sub->add_flag("--quiet", ex.quiet, "No per-run progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) {
      if (gen.per_class % 2 != 0 || gen.sigma_max < gen.sigma_min) {
        std::cerr << "usage error: --per-class must be even and --sigma-max >= --sigma-min\n";
        return kExitUsage;
      }
      return gen_data(gen);
    }
    if (*train_sub) return train_cmd(tr);
    if (*eval_sub) return eval_cmd(ev);
    if (*frontier_sub) return frontier_cmd(fr);
    if (*exp_sub) return experiment_cmd(ex);
  } catch (const rdt::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const rdt::MalformedFileError& e) {
    std::cerr << "malformed file: " << e.what() << '\n';
    return kExitIo;
  } catch (const rdt::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
