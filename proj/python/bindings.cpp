#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rdt/baselines.hpp"
#include "rdt/datagen.hpp"
#include "rdt/errors.hpp"
#include "rdt/experiment.hpp"
#include "rdt/inference.hpp"
#include "rdt/policy.hpp"
#include "rdt/trainer.hpp"

namespace py = pybind11;
using namespace rdt;

namespace {

RouteMode parse_mode(const std::string& mode) {
  if (mode == "greedy") return RouteMode::kGreedy;
  if (mode == "stochastic") return RouteMode::kStochastic;
  throw ParameterError("mode must be 'greedy' or 'stochastic'");
}

std::vector<double> to_vector(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 1) throw ParameterError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> features(const Dataset& d) {
  py::array_t<double> out({d.size(), d.input_dim});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d.input_dim; ++k) v(i, k) = d.examples[i].x[k];
  }
  return out;
}

Dataset make_dataset(py::array_t<double, py::array::c_style | py::array::forcecast> x,
                     const std::vector<std::size_t>& labels, std::size_t num_classes,
                     const std::string& split) {
  if (x.ndim() != 2) throw ParameterError("features must be a 2-d array");
  if (static_cast<std::size_t>(x.shape(0)) != labels.size()) throw ParameterError("one label per row required");
  Dataset d;
  d.num_classes = num_classes;
  d.input_dim = x.shape(1);
  d.split = split;
  const auto v = x.unchecked<2>();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabeledExample ex;
    for (std::size_t k = 0; k < d.input_dim; ++k) ex.x.push_back(v(i, k));
    ex.label = labels[i];
    d.examples.push_back(std::move(ex));
  }
  d.validate();
  return d;
}

py::dict gradient_dict(const ModelGradient& g) {
  py::dict out;
  out["theta"] = g.theta;
  out["alpha"] = g.alpha;
  return out;
}

}  // namespace

PYBIND11_MODULE(_rdt, m) {
  m.doc() = "Reinforced decision trees: stochastic routing trees trained by policy gradient.";

  py::register_exception<MalformedFileError>(m, "MalformedFileError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<TreeTooLargeError>(m, "TreeTooLargeError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  py::class_<TreeTopology>(m, "TreeTopology")
      .def_static("from_children", &TreeTopology::from_children)
      .def_property_readonly("node_count", &TreeTopology::node_count)
      .def_property_readonly("leaf_count", &TreeTopology::leaf_count)
      .def_property_readonly("width", &TreeTopology::width)
      .def_property_readonly("depth", &TreeTopology::depth)
      .def("children", [](const TreeTopology& t, NodeId n) {
        const auto c = t.children(n);
        return std::vector<NodeId>(c.begin(), c.end());
      })
      .def("parent", [](const TreeTopology& t, NodeId n) -> py::object {
        const NodeId p = t.parent(n);
        return p == kNoParent ? py::none() : py::cast(p);
      })
      .def("is_leaf", &TreeTopology::is_leaf)
      .def("leaves", [](const TreeTopology& t) {
        const auto l = t.leaves();
        return std::vector<NodeId>(l.begin(), l.end());
      });

  m.def("build_complete_tree", &build_complete_tree, py::arg("width"), py::arg("depth"));

  py::class_<RdtModel>(m, "RdtModel")
      .def_readonly("topology", &RdtModel::topology)
      .def_readonly("input_dim", &RdtModel::input_dim)
      .def_readonly("num_classes", &RdtModel::num_classes)
      .def_readwrite("alpha_frozen", &RdtModel::alpha_frozen)
      .def("theta", [](const RdtModel& md, NodeId n) { return md.params.theta.at(n); })
      .def("alpha", [](const RdtModel& md, NodeId n) { return md.params.alpha.at(n); })
      .def("set_theta", [](RdtModel& md, NodeId n, const std::vector<double>& v) {
        if (v.size() != md.params.theta.at(n).size()) throw ParameterError("theta block size mismatch");
        md.params.theta[n] = v;
      })
      .def("set_alpha", [](RdtModel& md, NodeId n, const std::vector<double>& v) {
        if (v.size() != md.params.alpha.at(n).size()) throw ParameterError("alpha block size mismatch");
        md.params.alpha[n] = v;
      })
      .def("flat_parameters", [](const RdtModel& md) { return flatten(md.params); })
      .def("copy", [](const RdtModel& md) { return md; })
      .def("save", [](const RdtModel& md, const std::filesystem::path& p) { save_model(md, p); })
      .def(py::self == py::self);

  m.def("init_model", &init_model, py::arg("topology"), py::arg("input_dim"), py::arg("num_classes"),
        py::arg("init_scale") = 0.1, py::arg("seed") = 0, py::arg("alpha_center") = 0.0);
  m.def("make_random_tree", &make_random_tree, py::arg("topology"), py::arg("input_dim"),
        py::arg("num_classes"), py::arg("init_scale") = 0.1, py::arg("seed") = 0);
  m.def("load_model", &load_model);
  m.def("class_prior_code", &class_prior_code);

  m.def("child_distribution", [](const RdtModel& md, NodeId node, py::array_t<double> x) {
    return child_distribution(md, node, to_vector(x)).probs;
  });
  m.def(
      "predict",
      [](const RdtModel& md, py::array_t<double> x, const std::string& mode, std::uint64_t seed) {
        Rng rng(seed);
        const auto p = predict(md, to_vector(x), parse_mode(mode), &rng);
        py::dict out;
        out["class_index"] = p.class_index;
        out["alpha"] = p.alpha;
        out["trajectory"] = p.trajectory.nodes;
        out["step_probs"] = p.trajectory.step_probs;
        out["policy_evaluations"] = p.policy_evaluations;
        return out;
      },
      py::arg("model"), py::arg("x"), py::arg("mode") = "greedy", py::arg("seed") = 0);
  m.def("enumerate_paths", [](const RdtModel& md, py::array_t<double> x) {
    std::vector<std::pair<std::vector<NodeId>, double>> out;
    for (const auto& p : enumerate_paths(md, to_vector(x))) out.emplace_back(p.trajectory.nodes, p.probability);
    return out;
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("labels"), py::arg("num_classes"),
           py::arg("split") = "train")
      .def_property_readonly("x", &features)
      .def_property_readonly("labels", [](const Dataset& d) {
        std::vector<std::size_t> out;
        for (const auto& ex : d.examples) out.push_back(ex.label);
        return out;
      })
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("input_dim", &Dataset::input_dim)
      .def_readonly("split", &Dataset::split)
      .def("__len__", &Dataset::size)
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(d, p); });

  m.def(
      "generate_gaussian_dataset",
      [](int classes, int per_class, std::uint64_t seed, double sigma_min, double sigma_max) {
        GaussianSpec spec;
        spec.num_classes = classes;
        spec.per_class = per_class;
        spec.seed = seed;
        spec.sigma_min = sigma_min;
        spec.sigma_max = sigma_max;
        auto s = generate_gaussian_dataset(spec);
        return std::make_pair(std::move(s.train), std::move(s.test));
      },
      py::arg("classes") = 16, py::arg("per_class") = 100, py::arg("seed") = 0,
      py::arg("sigma_min") = 0.05, py::arg("sigma_max") = 0.15);
  m.def("load_dataset", &load_dataset);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("trajectories_per_example", &TrainConfig::trajectories_per_example)
      .def_property(
          "loss", [](const TrainConfig& c) { return std::string(loss_name(c.loss)); },
          [](TrainConfig& c, const std::string& s) { c.loss = parse_loss(s); })
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("baseline_enabled", &TrainConfig::baseline_enabled)
      .def_readwrite("shuffle_each_epoch", &TrainConfig::shuffle_each_epoch)
      .def_readwrite("track_accuracy", &TrainConfig::track_accuracy);

  py::class_<TrainLog>(m, "TrainLog")
      .def_readonly("train_loss", &TrainLog::train_loss)
      .def_readonly("train_acc", &TrainLog::train_acc)
      .def_readonly("test_acc", &TrainLog::test_acc)
      .def_readonly("theta_norm", &TrainLog::theta_norm)
      .def_readonly("alpha_norm", &TrainLog::alpha_norm)
      .def("to_csv", &TrainLog::to_csv);

  m.def(
      "train",
      [](RdtModel& md, const Dataset& d, const TrainConfig& cfg, const Dataset* eval) {
        py::gil_scoped_release release;
        return md.alpha_frozen ? train_random_tree(md, d, cfg, eval) : train(md, d, cfg, eval);
      },
      py::arg("model"), py::arg("data"), py::arg("config"), py::arg("eval_data") = nullptr);
  m.def(
      "accuracy",
      [](const RdtModel& md, const Dataset& d, const std::string& mode, std::uint64_t seed) {
        Rng rng(seed);
        return accuracy(md, d, parse_mode(mode), &rng);
      },
      py::arg("model"), py::arg("data"), py::arg("mode") = "greedy", py::arg("seed") = 0);
  m.def("exact_objective", [](const RdtModel& md, const Dataset& d, const std::string& loss) {
    return exact_objective(md, d, parse_loss(loss));
  }, py::arg("model"), py::arg("data"), py::arg("loss") = "square");
  m.def("exact_gradient", [](const RdtModel& md, const Dataset& d, const std::string& loss) {
    return gradient_dict(exact_gradient(md, d, parse_loss(loss)));
  }, py::arg("model"), py::arg("data"), py::arg("loss") = "square");
  m.def(
      "sampled_gradient",
      [](const RdtModel& md, const Dataset& d, const std::string& loss, int trajectories, std::uint64_t seed) {
        Rng rng(seed);
        return gradient_dict(sampled_gradient(md, d, parse_loss(loss), trajectories, rng));
      },
      py::arg("model"), py::arg("data"), py::arg("loss") = "square", py::arg("trajectories") = 1,
      py::arg("seed") = 0);

  m.def(
      "frontier_grid",
      [](const RdtModel& md, std::vector<double> bounds, int resolution) {
        if (bounds.size() != 4) throw ParameterError("bounds are x0_min, x0_max, x1_min, x1_max");
        const auto g = frontier_grid(md, Box{{bounds[0], bounds[2]}, {bounds[1], bounds[3]}}, resolution);
        py::array_t<std::int64_t> out({resolution, resolution});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < g.points.size(); ++i) v(i / resolution, i % resolution) = g.points[i].cls;
        return out;
      },
      py::arg("model"), py::arg("bounds") = std::vector<double>{-1.5, 1.5, -1.5, 1.5},
      py::arg("resolution") = 100);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const auto cfg = parse_experiment_config(config_json);
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg);
        }
        py::dict out;
        out["report"] = report.to_text();
        out["table"] = report.to_table();
        py::list rows;
        for (const auto& r : report.rows) {
          py::dict row;
          row["width"] = r.shape.width;
          row["depth"] = r.shape.depth;
          row["leaves"] = r.shape.leaves();
          row["method"] = std::string(method_name(r.method));
          row["runs_ok"] = r.runs_ok;
          row["greedy_mean"] = r.greedy.mean;
          row["greedy_var"] = r.greedy.variance;
          row["stochastic_mean"] = r.stochastic.mean;
          row["stochastic_var"] = r.stochastic.variance;
          rows.append(row);
        }
        out["rows"] = rows;
        return out;
      },
      py::arg("config_json"));
  m.def("check_report_consistency", &check_report_consistency);
}
