#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rdt/losses.hpp"
#include "rdt/tree.hpp"

namespace rdt {

struct LabeledExample {
  std::vector<double> x;
  std::size_t label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::string split = "train";

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  /// Checks class indices, dimensions and finiteness.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// +/-1 code of `example`'s class, materialized on demand.
inline LabelVector label_vector(const Dataset& data, const LabeledExample& example) {
  return LabelVector::one_hot(data.num_classes, example.label);
}

/// Axis-aligned box [lo_k, hi_k] per coordinate.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool operator==(const Box&) const = default;
};

struct GaussianSpec {
  int num_classes = 16;
  int per_class = 100;
  std::uint64_t seed = 0;
  Box mean_bounds{{-1.0, -1.0}, {1.0, 1.0}};
  double sigma_min = 0.05;
  double sigma_max = 0.15;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Per class: mean ~ U(mean_bounds), sigma ~ U[sigma_min, sigma_max],
/// per_class isotropic Gaussian draws; the first half of each class goes to
/// train and the second half to test.
DatasetSplit generate_gaussian_dataset(const GaussianSpec& spec);

/// Same sampling with caller-chosen means and sigmas (one per class).
DatasetSplit sample_gaussian_classes(const std::vector<std::vector<double>>& means,
                                     const std::vector<double>& sigmas,
                                     int per_class, std::uint64_t seed);

/// Random partition: `holdout_fraction` of the examples (rounded) go to the
/// second dataset.
std::pair<Dataset, Dataset> split_holdout(const Dataset& data,
                                          double holdout_fraction,
                                          std::uint64_t seed);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct FrontierGrid {
  Box bounds;
  int resolution = 0;
  /// (x0, x1, class) for every lattice point; x0 varies slowest.
  struct Point {
    double x0;
    double x1;
    std::size_t cls;
  };
  std::vector<Point> points;
};

/// Greedy class predictions on a resolution x resolution lattice spanning
/// `bounds` (corners included). The model must take 2D inputs.
FrontierGrid frontier_grid(const RdtModel& model, const Box& bounds, int resolution);

std::string frontier_csv(const FrontierGrid& grid);
void save_frontier(const FrontierGrid& grid, const std::filesystem::path& path);

}  // namespace rdt
