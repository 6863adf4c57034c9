#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <cmath>
#include <set>

#include "rdt/datagen.hpp"
#include "rdt/errors.hpp"
#include "rdt/inference.hpp"
#include "rdt/trainer.hpp"

namespace rdt {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rdt_datagen_test_" + name);
}

TEST(GaussianDataset, SizesAndClassBalance) {
  GaussianSpec spec;
  spec.seed = 3;
  const auto split = generate_gaussian_dataset(spec);
  EXPECT_EQ(split.train.size(), 800u);
  EXPECT_EQ(split.test.size(), 800u);
  EXPECT_EQ(split.train.split, "train");
  EXPECT_EQ(split.test.split, "test");
  for (const auto* d : {&split.train, &split.test}) {
    EXPECT_EQ(d->num_classes, 16u);
    EXPECT_EQ(d->input_dim, 2u);
    std::vector<int> per(16);
    for (const auto& ex : d->examples) ++per[ex.label];
    for (int c : per) EXPECT_EQ(c, 50);
  }
}

TEST(GaussianDataset, ThirtyTwoClasses) {
  GaussianSpec spec;
  spec.num_classes = 32;
  const auto split = generate_gaussian_dataset(spec);
  EXPECT_EQ(split.train.size(), 1600u);
  EXPECT_EQ(split.test.size(), 1600u);
}

TEST(GaussianDataset, SeedDeterminism) {
  GaussianSpec spec;
  spec.seed = 7;
  const auto a = generate_gaussian_dataset(spec);
  const auto b = generate_gaussian_dataset(spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  spec.seed = 8;
  EXPECT_NE(generate_gaussian_dataset(spec).train, a.train);
}

TEST(GaussianDataset, ClassStatistics) {
  // Large per-class samples: empirical means sit inside the mean box and
  // per-class spreads inside [sigma_min, sigma_max] up to sampling error.
  GaussianSpec spec;
  spec.num_classes = 8;
  spec.per_class = 4000;
  spec.seed = 5;
  const auto split = generate_gaussian_dataset(spec);
  for (std::size_t c = 0; c < 8; ++c) {
    double sx = 0, sy = 0, sxx = 0;
    int n = 0;
    for (const auto* d : {&split.train, &split.test}) {
      for (const auto& ex : d->examples) {
        if (ex.label != c) continue;
        sx += ex.x[0];
        sy += ex.x[1];
        sxx += ex.x[0] * ex.x[0];
        ++n;
      }
    }
    const double mx = sx / n, my = sy / n;
    const double sd = std::sqrt(sxx / n - mx * mx);
    EXPECT_LE(std::abs(mx), 1.0 + 0.01);
    EXPECT_LE(std::abs(my), 1.0 + 0.01);
    EXPECT_GE(sd, 0.05 * 0.95);
    EXPECT_LE(sd, 0.15 * 1.05);
  }
}

TEST(GaussianDataset, RejectsBadSpecs) {
  GaussianSpec spec;
  spec.num_classes = 1;
  EXPECT_THROW(generate_gaussian_dataset(spec), ParameterError);
  spec = {};
  spec.per_class = 1;
  EXPECT_THROW(generate_gaussian_dataset(spec), ParameterError);
  spec = {};
  spec.sigma_min = 0.2;
  spec.sigma_max = 0.1;
  EXPECT_THROW(generate_gaussian_dataset(spec), ParameterError);
}

TEST(SampleGaussianClasses, ExplicitMeans) {
  const auto split = sample_gaussian_classes({{-3, 0}, {3, 0}}, {0.5, 0.5}, 100, 1);
  EXPECT_EQ(split.train.size(), 100u);
  EXPECT_EQ(split.test.size(), 100u);
  for (const auto& ex : split.train.examples) {
    EXPECT_EQ(ex.x[0] > 0, ex.label == 1u);
  }
}

TEST(SplitHoldout, PartitionsAndIsSeeded) {
  GaussianSpec spec;
  const auto train = generate_gaussian_dataset(spec).train;
  const auto [fit, val] = split_holdout(train, 0.2, 11);
  EXPECT_EQ(fit.size() + val.size(), train.size());
  EXPECT_EQ(val.size(), 160u);
  EXPECT_EQ(fit.num_classes, train.num_classes);
  const auto [fit2, val2] = split_holdout(train, 0.2, 11);
  EXPECT_EQ(val, val2);
  EXPECT_THROW(split_holdout(train, 0.0, 1), ParameterError);
  EXPECT_THROW(split_holdout(train, 1.0, 1), ParameterError);
}

TEST(DatasetFile, RoundTrip) {
  GaussianSpec spec;
  spec.num_classes = 4;
  spec.per_class = 10;
  const auto split = generate_gaussian_dataset(spec);
  const auto path = temp_path("rt.csv");
  save_dataset(split.test, path);
  EXPECT_EQ(load_dataset(path), split.test);
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  EXPECT_EQ(l1, "C,n,split");
  EXPECT_EQ(l2, "4,2,test");
  EXPECT_EQ(l3, "x0,x1,class");
  std::filesystem::remove(path);
}

void expect_malformed(const std::string& body, const std::string& needle) {
  const auto path = temp_path("bad.csv");
  std::ofstream(path, std::ios::trunc) << body;
  try {
    load_dataset(path);
    ADD_FAILURE() << "accepted: " << body;
  } catch (const MalformedFileError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(DatasetFile, MalformedInputsReportLine) {
  expect_malformed("", ":1");
  expect_malformed("C,n,split\n2,2,train\nx0,x1,class\n0.1,0.2,0\n0.1,oops,1\n", ":5");
  expect_malformed("C,n,split\n2,2,train\nx0,x1,class\n0.1,0.2,2\n", ":4");    // class out of range
  expect_malformed("C,n,split\n2,2,train\nx0,x1,class\n0.1,0\n", ":4");        // short row
  expect_malformed("C,n,split\n2,2,train\nx0,class\n", ":3");                  // header width
  expect_malformed("C,n\n2,2\n", ":1");
}

TEST(DatasetFile, MissingFile) {
  EXPECT_THROW(load_dataset(temp_path("missing.csv")), IoError);
}

TEST(Frontier, GridCoversBoxAndMatchesGreedy) {
  const auto m = init_model(build_complete_tree(2, 3), 2, 4, 2.0, 1);
  const Box box{{-1, 0}, {1, 2}};
  const auto grid = frontier_grid(m, box, 5);
  ASSERT_EQ(grid.points.size(), 25u);
  EXPECT_DOUBLE_EQ(grid.points.front().x0, -1.0);
  EXPECT_DOUBLE_EQ(grid.points.front().x1, 0.0);
  EXPECT_DOUBLE_EQ(grid.points.back().x0, 1.0);
  EXPECT_DOUBLE_EQ(grid.points.back().x1, 2.0);
  EXPECT_DOUBLE_EQ(grid.points[1].x1, 0.5);  // x0 outer, x1 inner
  for (const auto& p : grid.points) {
    const std::vector<double> x{p.x0, p.x1};
    EXPECT_EQ(p.cls, predict(m, x, RouteMode::kGreedy).class_index);
  }
  const auto csv = frontier_csv(grid);
  EXPECT_EQ(csv.rfind("x0_min,x0_max,x1_min,x1_max,resolution\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3 + 25);
}

TEST(Frontier, TrainedTwoClassModel) {
  const auto split = sample_gaussian_classes({{-0.5, 0.0}, {0.5, 0.0}}, {0.1, 0.1}, 100, 4);
  auto m = init_model(build_complete_tree(2, 1), 2, 2, 0.1, 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  train(m, split.train, cfg);
  const auto grid = frontier_grid(m, Box{{-1, -1}, {1, 1}}, 21);
  std::set<std::size_t> classes;
  for (const auto& p : grid.points) {
    const std::vector<double> x{p.x0, p.x1};
    ASSERT_EQ(p.cls, predict(m, x, RouteMode::kGreedy).class_index);
    classes.insert(p.cls);
  }
  EXPECT_EQ(classes.size(), 2u);
}

TEST(Frontier, RejectsBadArguments) {
  const auto m2 = init_model(build_complete_tree(2, 1), 2, 2, 0.1, 0);
  const auto m3 = init_model(build_complete_tree(2, 1), 3, 2, 0.1, 0);
  EXPECT_THROW(frontier_grid(m3, Box{{0, 0}, {1, 1}}, 10), ParameterError);
  EXPECT_THROW(frontier_grid(m2, Box{{0, 0}, {1, 1}}, 1), ParameterError);
  EXPECT_THROW(frontier_grid(m2, Box{{1, 0}, {0, 1}}, 10), ParameterError);
}

}  // namespace
}  // namespace rdt
