#include "rdt/datagen.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "atomic_write.hpp"
#include "rdt/errors.hpp"
#include "rdt/inference.hpp"
#include "rdt/rng.hpp"
#include "text_util.hpp"

namespace rdt {

void Dataset::validate() const {
  if (num_classes < 2) throw ParameterError("dataset needs at least 2 classes");
  if (input_dim == 0) throw ParameterError("dataset input_dim must be >= 1");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.label >= num_classes) {
      throw ParameterError("example " + std::to_string(i) + " has class " +
                           std::to_string(ex.label) + " >= " + std::to_string(num_classes));
    }
    if (ex.x.size() != input_dim) {
      throw ParameterError("example " + std::to_string(i) + " has wrong dimension");
    }
    for (double v : ex.x) {
      if (!std::isfinite(v)) {
        throw ParameterError("example " + std::to_string(i) + " is not finite");
      }
    }
  }
}

DatasetSplit sample_gaussian_classes(const std::vector<std::vector<double>>& means,
                                     const std::vector<double>& sigmas,
                                     int per_class, std::uint64_t seed) {
  if (means.size() < 2) throw ParameterError("need at least 2 classes");
  if (sigmas.size() != means.size()) throw ParameterError("one sigma per class required");
  if (per_class < 2 || per_class % 2 != 0) {
    throw ParameterError("per_class must be a positive even number");
  }
  const std::size_t dim = means.front().size();
  if (dim == 0) throw ParameterError("means must be nonempty");

  DatasetSplit out;
  for (Dataset* d : {&out.train, &out.test}) {
    d->num_classes = means.size();
    d->input_dim = dim;
  }
  out.train.split = "train";
  out.test.split = "test";

  Rng rng(seed);
  const int half = per_class / 2;
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != dim) throw ParameterError("means differ in dimension");
    if (!(sigmas[c] > 0.0)) throw ParameterError("sigma must be positive");
    for (int i = 0; i < per_class; ++i) {
      LabeledExample ex;
      ex.label = c;
      ex.x.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) ex.x[k] = means[c][k] + sigmas[c] * rng.normal();
      (i < half ? out.train : out.test).examples.push_back(std::move(ex));
    }
  }
  return out;
}

DatasetSplit generate_gaussian_dataset(const GaussianSpec& spec) {
  if (spec.num_classes < 2) throw ParameterError("num_classes must be >= 2");
  if (spec.per_class < 2 || spec.per_class % 2 != 0) {
    throw ParameterError("per_class must be a positive even number");
  }
  if (!(spec.sigma_min > 0.0) || spec.sigma_max < spec.sigma_min) {
    throw ParameterError("sigma range must be positive and ordered");
  }
  const auto& box = spec.mean_bounds;
  if (box.dim() == 0 || box.hi.size() != box.dim()) {
    throw ParameterError("mean bounds must have matching nonempty corners");
  }
  for (std::size_t k = 0; k < box.dim(); ++k) {
    if (box.hi[k] < box.lo[k]) throw ParameterError("mean bounds are inverted");
  }

  // Class parameters come from their own stream so changing per_class keeps
  // the cluster layout.
  Rng layout(spec.seed);
  Rng samples = layout.split();
  std::vector<std::vector<double>> means(spec.num_classes);
  std::vector<double> sigmas(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    means[c].resize(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) means[c][k] = layout.uniform(box.lo[k], box.hi[k]);
    sigmas[c] = layout.uniform(spec.sigma_min, spec.sigma_max);
  }
  return sample_gaussian_classes(means, sigmas, spec.per_class, samples());
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data,
                                          double holdout_fraction,
                                          std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ParameterError("holdout fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto held = static_cast<std::size_t>(
      std::llround(holdout_fraction * static_cast<double>(data.size())));

  std::pair<Dataset, Dataset> out;
  for (Dataset* d : {&out.first, &out.second}) {
    d->num_classes = data.num_classes;
    d->input_dim = data.input_dim;
  }
  out.first.split = data.split;
  out.second.split = "validation";
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < order.size() - held ? out.first : out.second)
        .examples.push_back(data.examples[order[i]]);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Dataset CSV. See docs/FORMATS.md.

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ostringstream out;
  out << "C,n,split\n";
  out << data.num_classes << ',' << data.input_dim << ',' << data.split << '\n';
  for (std::size_t k = 0; k < data.input_dim; ++k) out << 'x' << k << ',';
  out << "class\n";
  for (const auto& ex : data.examples) {
    for (double v : ex.x) out << detail::format_double(v) << ',';
    out << ex.label << '\n';
  }
  detail::write_file_atomically(path, out.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> void {
    throw MalformedFileError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  // Counts the line even at end of file, so "missing X" points at where X belongs.
  auto next_line = [&](std::string_view& line) {
    ++line_no;
    if (pos >= text.size()) return false;
    const auto end = text.find('\n', pos);
    line = std::string_view(text).substr(pos, (end == std::string::npos ? text.size() : end) - pos);
    line = detail::strip_cr(line);
    pos = end == std::string::npos ? text.size() : end + 1;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != "C,n,split") fail("missing 'C,n,split' header");
  if (!next_line(line)) fail("missing header values");
  const auto head = detail::split(line, ',');
  if (head.size() != 3) fail("header needs C,n,split values");
  Dataset data;
  auto classes = detail::parse_int<std::size_t>(head[0]);
  auto dim = detail::parse_int<std::size_t>(head[1]);
  if (!classes || *classes < 2) fail("C must be an integer >= 2");
  if (!dim || *dim == 0) fail("n must be a positive integer");
  data.num_classes = *classes;
  data.input_dim = *dim;
  data.split = std::string(head[2]);
  if (data.split.empty()) fail("empty split tag");

  if (!next_line(line)) fail("missing column header");
  {
    std::string want;
    for (std::size_t k = 0; k < data.input_dim; ++k) want += "x" + std::to_string(k) + ",";
    want += "class";
    if (line != want) fail("column header must be '" + want + "'");
  }

  while (next_line(line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != data.input_dim + 1) fail("expected " + std::to_string(data.input_dim + 1) + " columns");
    LabeledExample ex;
    ex.x.reserve(data.input_dim);
    for (std::size_t k = 0; k < data.input_dim; ++k) {
      auto v = detail::parse_double(cells[k]);
      if (!v || !std::isfinite(*v)) fail("bad coordinate '" + std::string(cells[k]) + "'");
      ex.x.push_back(*v);
    }
    auto cls = detail::parse_int<std::size_t>(cells.back());
    if (!cls) fail("bad class '" + std::string(cells.back()) + "'");
    if (*cls >= data.num_classes) {
      fail("class " + std::to_string(*cls) + " >= C=" + std::to_string(data.num_classes));
    }
    ex.label = *cls;
    data.examples.push_back(std::move(ex));
  }
  return data;
}

FrontierGrid frontier_grid(const RdtModel& model, const Box& bounds, int resolution) {
  if (resolution < 2) throw ParameterError("resolution must be >= 2");
  if (model.input_dim != 2) throw ParameterError("frontier grids need a 2D model");
  if (bounds.lo.size() != 2 || bounds.hi.size() != 2) {
    throw ParameterError("frontier bounds must be 2D");
  }
  for (int k = 0; k < 2; ++k) {
    if (!(bounds.hi[k] > bounds.lo[k])) throw ParameterError("frontier bounds are empty");
  }
  FrontierGrid grid{bounds, resolution, {}};
  grid.points.reserve(static_cast<std::size_t>(resolution) * resolution);
  const double steps = resolution - 1;
  for (int i = 0; i < resolution; ++i) {
    const double x0 = bounds.lo[0] + (bounds.hi[0] - bounds.lo[0]) * (i / steps);
    for (int j = 0; j < resolution; ++j) {
      const double x1 = bounds.lo[1] + (bounds.hi[1] - bounds.lo[1]) * (j / steps);
      const double x[2] = {x0, x1};
      grid.points.push_back({x0, x1, predict(model, x, RouteMode::kGreedy).class_index});
    }
  }
  return grid;
}

std::string frontier_csv(const FrontierGrid& grid) {
  std::ostringstream out;
  out << "x0_min,x0_max,x1_min,x1_max,resolution\n";
  out << detail::format_double(grid.bounds.lo[0]) << ',' << detail::format_double(grid.bounds.hi[0])
      << ',' << detail::format_double(grid.bounds.lo[1]) << ','
      << detail::format_double(grid.bounds.hi[1]) << ',' << grid.resolution << '\n';
  out << "x0,x1,class\n";
  for (const auto& p : grid.points) {
    out << detail::format_double(p.x0) << ',' << detail::format_double(p.x1) << ',' << p.cls << '\n';
  }
  return out.str();
}

void save_frontier(const FrontierGrid& grid, const std::filesystem::path& path) {
  detail::write_file_atomically(path, frontier_csv(grid));
}

}  // namespace rdt
