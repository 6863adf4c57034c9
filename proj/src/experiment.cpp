#include "rdt/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "atomic_write.hpp"
#include "rdt/baselines.hpp"
#include "rdt/errors.hpp"
#include "text_util.hpp"

namespace rdt {
namespace {

using nlohmann::json;

// Stream used for stochastic-routing evaluation, distinct from training.
constexpr std::uint64_t kEvalStream = 0x9e3779b97f4a7c15ULL;

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += detail::format_double(values[i]);
  }
  return out;
}

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '=') c = '_';
  }
  return text;
}

std::string_view alpha_init_name(AlphaInit init) {
  return init == AlphaInit::kUniform ? "uniform" : "prior";
}

RdtModel make_model(const ExperimentConfig& config, const TreeTopology& topology,
                    std::size_t input_dim, Method method, std::uint64_t seed) {
  const int n = static_cast<int>(input_dim);
  const int classes = config.dataset.num_classes;
  if (method == Method::kRandomTree) {
    return make_random_tree(topology, n, classes, config.init_scale, seed);
  }
  const double center = config.alpha_init == AlphaInit::kClassPrior
                            ? class_prior_code(static_cast<std::size_t>(classes))
                            : 0.0;
  return init_model(topology, n, classes, config.init_scale, seed, center);
}

TrainConfig make_train_config(const ExperimentConfig& config, double lr, int epochs,
                              std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.epochs = epochs;
  cfg.trajectories_per_example = config.trajectories_per_example;
  cfg.loss = config.loss;
  cfg.seed = seed;
  cfg.baseline_enabled = config.baseline_enabled;
  cfg.track_accuracy = false;
  return cfg;
}

void train_model(RdtModel& model, Method method, const Dataset& data,
                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (method == Method::kRandomTree) {
    train_random_tree(model, data, cfg, nullptr, on_epoch);
  } else {
    train(model, data, cfg, nullptr, on_epoch);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw MalformedFileError("config: unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

std::string_view method_name(Method method) {
  return method == Method::kRdt ? "RDT" : "RandomTree";
}

Method parse_method(std::string_view name) {
  if (name == "RDT") return Method::kRdt;
  if (name == "RandomTree") return Method::kRandomTree;
  throw ParameterError("unknown method '" + std::string(name) + "'");
}

std::size_t TreeShape::leaves() const {
  std::size_t l = 1;
  for (int d = 0; d < depth; ++d) l *= static_cast<std::size_t>(width);
  return l;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ParameterError("runs must be >= 1");
  if (shapes.empty()) throw ParameterError("experiment needs at least one tree shape");
  for (const auto& s : shapes) {
    if (s.width < 2 || s.depth < 1) throw ParameterError("invalid tree shape");
  }
  if (methods.empty()) throw ParameterError("experiment needs at least one method");
  if (learning_rates.empty() || epoch_grid.empty()) {
    throw ParameterError("tuning grid must be nonempty");
  }
  for (double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("learning rates must be positive");
  }
  for (int e : epoch_grid) {
    if (e < 1) throw ParameterError("epoch counts must be >= 1");
  }
  if (trajectories_per_example < 1) throw ParameterError("trajectories_per_example must be >= 1");
  if (!(init_scale > 0.0)) throw ParameterError("init_scale must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ParameterError("validation_fraction must be in (0, 1)");
  }
  if (stochastic_samples < 1) throw ParameterError("stochastic_samples must be >= 1");
  if (dataset.num_classes < 2) throw ParameterError("dataset needs >= 2 classes");
  if (dataset.per_class < 2 || dataset.per_class % 2) throw ParameterError("per_class must be even");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  ExperimentConfig cfg;
  try {
    const json root = json::parse(json_text);
    if (!root.is_object()) throw MalformedFileError("config: top level must be an object");
    reject_unknown(root,
                   {"dataset", "shapes", "methods", "runs", "master_seed", "train",
                    "validation_fraction", "stochastic_samples", "threads"},
                   "config");
    if (auto it = root.find("dataset"); it != root.end()) {
      const json& d = *it;
      reject_unknown(d, {"classes", "per_class", "seed", "sigma_range", "mean_bounds"}, "dataset");
      cfg.dataset.num_classes = get_or(d, "classes", cfg.dataset.num_classes);
      cfg.dataset.per_class = get_or(d, "per_class", cfg.dataset.per_class);
      cfg.dataset.seed = get_or(d, "seed", cfg.dataset.seed);
      if (auto s = d.find("sigma_range"); s != d.end()) {
        const auto range = s->get<std::vector<double>>();
        if (range.size() != 2) throw MalformedFileError("config: sigma_range needs 2 values");
        cfg.dataset.sigma_min = range[0];
        cfg.dataset.sigma_max = range[1];
      }
      if (auto b = d.find("mean_bounds"); b != d.end()) {
        reject_unknown(*b, {"lo", "hi"}, "mean_bounds");
        cfg.dataset.mean_bounds.lo = b->at("lo").get<std::vector<double>>();
        cfg.dataset.mean_bounds.hi = b->at("hi").get<std::vector<double>>();
      }
    }
    if (auto it = root.find("shapes"); it != root.end()) {
      cfg.shapes.clear();
      for (const auto& s : *it) {
        const auto wd = s.get<std::vector<int>>();
        if (wd.size() != 2) throw MalformedFileError("config: each shape is [width, depth]");
        cfg.shapes.push_back({wd[0], wd[1]});
      }
    }
    if (auto it = root.find("methods"); it != root.end()) {
      cfg.methods.clear();
      for (const auto& m : *it) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.runs = get_or(root, "runs", cfg.runs);
    cfg.master_seed = get_or(root, "master_seed", cfg.master_seed);
    cfg.validation_fraction = get_or(root, "validation_fraction", cfg.validation_fraction);
    cfg.stochastic_samples = get_or(root, "stochastic_samples", cfg.stochastic_samples);
    cfg.threads = get_or(root, "threads", cfg.threads);
    if (auto it = root.find("train"); it != root.end()) {
      const json& t = *it;
      reject_unknown(t,
                     {"loss", "learning_rates", "epochs", "trajectories_per_example",
                      "baseline", "init_scale", "alpha_init"},
                     "train");
      if (auto l = t.find("loss"); l != t.end()) cfg.loss = parse_loss(l->get<std::string>());
      cfg.learning_rates = get_or(t, "learning_rates", cfg.learning_rates);
      cfg.epoch_grid = get_or(t, "epochs", cfg.epoch_grid);
      cfg.trajectories_per_example =
          get_or(t, "trajectories_per_example", cfg.trajectories_per_example);
      cfg.baseline_enabled = get_or(t, "baseline", cfg.baseline_enabled);
      cfg.init_scale = get_or(t, "init_scale", cfg.init_scale);
      if (auto a = t.find("alpha_init"); a != t.end()) {
        const auto name = a->get<std::string>();
        if (name == "uniform") {
          cfg.alpha_init = AlphaInit::kUniform;
        } else if (name == "prior") {
          cfg.alpha_init = AlphaInit::kClassPrior;
        } else {
          throw MalformedFileError("config: alpha_init must be 'uniform' or 'prior'");
        }
      }
    }
  } catch (const json::exception& e) {
    throw MalformedFileError(std::string("config: ") + e.what());
  } catch (const ParameterError& e) {
    throw MalformedFileError(std::string("config: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw MalformedFileError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(detail::read_file(path));
}

double Summary::stddev() const { return std::sqrt(variance); }

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(values.size());
  return s;
}

std::uint64_t run_seed(const ExperimentConfig& config, int run) {
  return config.master_seed + static_cast<std::uint64_t>(run);
}

RunResult run_single(const ExperimentConfig& config, const DatasetSplit& data,
                     TreeShape shape, Method method, int run) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.shape = shape;
  result.method = method;
  result.run = run;
  result.seed = run_seed(config, run);

  try {
    const auto topology = build_complete_tree(shape.width, shape.depth);
    const auto [fit, validation] =
        split_holdout(data.train, config.validation_fraction, result.seed);
    int max_epochs = 0;
    for (int e : config.epoch_grid) max_epochs = std::max(max_epochs, e);

    // Training for E epochs is a prefix of training for max_epochs with the
    // same seed, so every epoch budget is scored from one run per rate.
    bool have_candidate = false;
    std::string last_failure;
    for (double lr : config.learning_rates) {
      RdtModel model = make_model(config, topology, data.train.input_dim, method, result.seed);
      const auto cfg = make_train_config(config, lr, max_epochs, result.seed);
      try {
        train_model(model, method, fit, cfg, [&](int epoch, const RdtModel& current) {
          for (int e : config.epoch_grid) {
            if (e != epoch) continue;
            const double acc = accuracy(current, validation);
            if (!have_candidate || acc > result.validation_accuracy) {
              have_candidate = true;
              result.validation_accuracy = acc;
              result.learning_rate = lr;
              result.epochs = epoch;
            }
          }
        });
      } catch (const DivergenceError& e) {
        last_failure = e.what();
      }
    }
    if (!have_candidate) {
      throw DivergenceError("every grid point diverged: " + last_failure, 0);
    }

    RdtModel model = make_model(config, topology, data.train.input_dim, method, result.seed);
    train_model(model, method, data.train,
                make_train_config(config, result.learning_rate, result.epochs, result.seed),
                nullptr);
    result.greedy_accuracy = accuracy(model, data.test);

    Rng eval_rng(result.seed ^ kEvalStream);
    double hits = 0.0;
    for (int s = 0; s < config.stochastic_samples; ++s) {
      hits += accuracy(model, data.test, RouteMode::kStochastic, &eval_rng);
    }
    result.stochastic_accuracy = hits / config.stochastic_samples;
    const double draws = static_cast<double>(data.test.size()) * config.stochastic_samples;
    result.stochastic_std_error =
        std::sqrt(result.stochastic_accuracy * (1.0 - result.stochastic_accuracy) / draws);
    result.leaf_coverage = leaf_class_coverage(model);
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.failure = e.what();
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const ProgressCallback& progress) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  const DatasetSplit data = generate_gaussian_dataset(config.dataset);

  struct Job {
    TreeShape shape;
    Method method;
    int run;
  };
  std::vector<Job> jobs;
  for (const auto& shape : config.shapes) {
    for (Method method : config.methods) {
      for (int run = 0; run < config.runs; ++run) jobs.push_back({shape, method, run});
    }
  }
  report.runs.resize(jobs.size());

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      report.runs[i] = run_single(config, data, jobs[i].shape, jobs[i].method, jobs[i].run);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(report.runs[i]);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& shape : config.shapes) {
    for (Method method : config.methods) {
      RowSummary row;
      row.shape = shape;
      row.method = method;
      std::vector<double> greedy, stochastic;
      for (const auto& r : report.runs) {
        if (!(r.shape == shape) || r.method != method || !r.ok) continue;
        ++row.runs_ok;
        greedy.push_back(r.greedy_accuracy);
        stochastic.push_back(r.stochastic_accuracy);
        row.mean_learning_rate += r.learning_rate;
        row.mean_epochs += r.epochs;
        row.mean_coverage += static_cast<double>(r.leaf_coverage);
      }
      row.greedy = summarize(greedy);
      row.stochastic = summarize(stochastic);
      if (row.runs_ok > 0) {
        row.mean_learning_rate /= row.runs_ok;
        row.mean_epochs /= row.runs_ok;
        row.mean_coverage /= row.runs_ok;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

const RowSummary* ExperimentReport::find(TreeShape shape, Method method) const {
  for (const auto& row : rows) {
    if (row.shape == shape && row.method == method) return &row;
  }
  return nullptr;
}

namespace {

std::string row_line(const RowSummary& row) {
  using detail::format_double;
  std::ostringstream out;
  out << "row W=" << row.shape.width << " D=" << row.shape.depth << " L=" << row.shape.leaves()
      << " method=" << method_name(row.method) << " runs_ok=" << row.runs_ok
      << " greedy_mean=" << format_double(row.greedy.mean)
      << " greedy_var=" << format_double(row.greedy.variance)
      << " greedy_std=" << format_double(row.greedy.stddev())
      << " stochastic_mean=" << format_double(row.stochastic.mean)
      << " stochastic_var=" << format_double(row.stochastic.variance)
      << " stochastic_std=" << format_double(row.stochastic.stddev())
      << " lr_mean=" << format_double(row.mean_learning_rate)
      << " epochs_mean=" << format_double(row.mean_epochs)
      << " coverage_mean=" << format_double(row.mean_coverage);
  return out.str();
}

}  // namespace

std::string ExperimentReport::to_text() const {
  using detail::format_double;
  const auto& c = config;
  std::ostringstream out;
  out << "rdt-report 1\n";
  out << "config classes=" << c.dataset.num_classes << " per_class=" << c.dataset.per_class
      << " data_seed=" << c.dataset.seed << " sigma_min=" << format_double(c.dataset.sigma_min)
      << " sigma_max=" << format_double(c.dataset.sigma_max)
      << " mean_lo=" << join(c.dataset.mean_bounds.lo) << " mean_hi=" << join(c.dataset.mean_bounds.hi)
      << " runs=" << c.runs << " master_seed=" << c.master_seed << " loss=" << loss_name(c.loss)
      << " lr_grid=" << join(c.learning_rates) << " epoch_grid=" << join(c.epoch_grid)
      << " trajectories=" << c.trajectories_per_example << " baseline=" << (c.baseline_enabled ? 1 : 0)
      << " init_scale=" << format_double(c.init_scale) << " alpha_init=" << alpha_init_name(c.alpha_init)
      << " validation_fraction=" << format_double(c.validation_fraction)
      << " stochastic_samples=" << c.stochastic_samples << '\n';
  for (const auto& r : runs) {
    out << "run W=" << r.shape.width << " D=" << r.shape.depth << " L=" << r.shape.leaves()
        << " method=" << method_name(r.method) << " run=" << r.run << " seed=" << r.seed;
    if (r.ok) {
      out << " status=ok lr=" << format_double(r.learning_rate) << " epochs=" << r.epochs
          << " val_acc=" << format_double(r.validation_accuracy)
          << " acc_greedy=" << format_double(r.greedy_accuracy)
          << " acc_stochastic=" << format_double(r.stochastic_accuracy)
          << " se_stochastic=" << format_double(r.stochastic_std_error)
          << " coverage=" << r.leaf_coverage << '\n';
    } else {
      out << " status=failed reason=" << sanitize(r.failure) << '\n';
    }
  }
  for (const auto& row : rows) out << row_line(row) << '\n';
  out << "end\n";
  return out.str();
}

std::string ExperimentReport::to_table() const {
  const auto& c = config;
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Dataset: C=%d, %d per class (50/50 split), seed %llu, sigma in [%g, %g]\n",
                c.dataset.num_classes, c.dataset.per_class,
                static_cast<unsigned long long>(c.dataset.seed), c.dataset.sigma_min,
                c.dataset.sigma_max);
  out << buf;
  std::snprintf(buf, sizeof(buf), "Runs: %d (seeds %llu..%llu), loss: %s\n", c.runs,
                static_cast<unsigned long long>(c.master_seed),
                static_cast<unsigned long long>(c.master_seed + c.runs - 1),
                std::string(loss_name(c.loss)).c_str());
  out << buf;

  for (RouteMode mode : {RouteMode::kGreedy, RouteMode::kStochastic}) {
    out << '\n'
        << (mode == RouteMode::kGreedy ? "Greedy routing" : "Stochastic routing")
        << ": accuracy +- variance (std)\n";
    out << "  W |  D |    L | RDT                      | Random Trees\n";
    for (const auto& shape : c.shapes) {
      std::string cells[2];
      const Method methods[2] = {Method::kRdt, Method::kRandomTree};
      for (int k = 0; k < 2; ++k) {
        const RowSummary* row = find(shape, methods[k]);
        if (row == nullptr || row->runs_ok == 0) {
          cells[k] = "-";
          continue;
        }
        const Summary& s = mode == RouteMode::kGreedy ? row->greedy : row->stochastic;
        std::snprintf(buf, sizeof(buf), "%.2f +- %.4f (%.2f)", s.mean, s.variance, s.stddev());
        cells[k] = buf;
      }
      std::snprintf(buf, sizeof(buf), " %2d | %2d | %4zu | %-24s | %s\n", shape.width, shape.depth,
                    shape.leaves(), cells[0].c_str(), cells[1].c_str());
      out << buf;
    }
  }
  return out.str();
}

std::string ExperimentReport::timing_csv() const {
  std::ostringstream out;
  out << "W,D,method,run,seconds\n";
  for (const auto& r : runs) {
    out << r.shape.width << ',' << r.shape.depth << ',' << method_name(r.method) << ',' << r.run
        << ',' << detail::format_double(r.seconds) << '\n';
  }
  return out.str();
}

std::string check_report_consistency(const std::string& report_text) {
  struct Key {
    std::string shape;
    std::string method;
    bool operator<(const Key& o) const {
      return std::tie(shape, method) < std::tie(o.shape, o.method);
    }
  };
  struct Acc {
    std::vector<double> greedy, stochastic;
    double lr = 0, epochs = 0, coverage = 0;
  };
  std::map<Key, Acc> runs;
  std::istringstream in(report_text);
  std::string line;
  std::size_t rows_checked = 0;
  bool ended = false;
  if (!std::getline(in, line) || line != "rdt-report 1") return "missing 'rdt-report 1' header";
  while (std::getline(in, line)) {
    if (ended) return "content after 'end'";
    if (line == "end") {
      ended = true;
      continue;
    }
    const auto toks = detail::tokens(line);
    if (toks.empty()) continue;
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const auto eq = toks[i].find('=');
      if (eq == std::string_view::npos) continue;
      kv[std::string(toks[i].substr(0, eq))] = std::string(toks[i].substr(eq + 1));
    }
    auto number = [&](const char* key) {
      auto v = detail::parse_double(kv[key]);
      if (!v) throw MalformedFileError(std::string("report: bad value for ") + key);
      return *v;
    };
    const Key key{kv["W"] + "," + kv["D"], kv["method"]};
    try {
      if (toks[0] == "run" && kv["status"] == "ok") {
        auto& acc = runs[key];
        acc.greedy.push_back(number("acc_greedy"));
        acc.stochastic.push_back(number("acc_stochastic"));
        acc.lr += number("lr");
        acc.epochs += number("epochs");
        acc.coverage += number("coverage");
      } else if (toks[0] == "row") {
        const auto& acc = runs[key];
        RowSummary row;
        row.shape = {static_cast<int>(number("W")), static_cast<int>(number("D"))};
        row.method = parse_method(kv["method"]);
        row.runs_ok = static_cast<int>(acc.greedy.size());
        row.greedy = summarize(acc.greedy);
        row.stochastic = summarize(acc.stochastic);
        if (row.runs_ok > 0) {
          row.mean_learning_rate = acc.lr / row.runs_ok;
          row.mean_epochs = acc.epochs / row.runs_ok;
          row.mean_coverage = acc.coverage / row.runs_ok;
        }
        if (row_line(row) != line) return "row mismatch: " + line;
        ++rows_checked;
      }
    } catch (const std::exception& e) {
      return e.what();
    }
  }
  if (!ended) return "report is truncated (no 'end' line)";
  if (rows_checked == 0) return "report has no row lines";
  return {};
}

}  // namespace rdt
