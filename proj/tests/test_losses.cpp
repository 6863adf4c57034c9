#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rdt/errors.hpp"
#include "rdt/losses.hpp"
#include "rdt/rng.hpp"

namespace rdt {
namespace {

TEST(LabelVector, OneHotCode) {
  const auto y = LabelVector::one_hot(4, 2);
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()),
            (std::vector<double>{-1, -1, 1, -1}));
  EXPECT_EQ(y.class_index(), 2u);
  EXPECT_THROW(LabelVector::one_hot(4, 4), ParameterError);
  EXPECT_THROW(LabelVector::one_hot(1, 0), ParameterError);
}

TEST(LabelVector, ValidatesCodes) {
  EXPECT_NO_THROW(LabelVector({-1, 1, -1}));
  EXPECT_THROW(LabelVector({1, 1, -1}), ParameterError);
  EXPECT_THROW(LabelVector({-1, -1, -1}), ParameterError);
  EXPECT_THROW(LabelVector({-1, 0.5, -1}), ParameterError);
}

TEST(SquareLoss, Examples) {
  const std::vector<double> y{1, -1};
  EXPECT_DOUBLE_EQ(square_loss(std::vector<double>{0, 0}, y), 2.0);
  EXPECT_DOUBLE_EQ(square_loss(std::vector<double>{1, -1}, y), 0.0);
  EXPECT_DOUBLE_EQ(square_loss(std::vector<double>{0.5, 0.5}, y), 0.25 + 2.25);
  const auto g = square_loss_grad(std::vector<double>{0, 0}, y);
  EXPECT_EQ(g, (std::vector<double>{-2, 2}));
}

TEST(HingeLoss, Examples) {
  const std::vector<double> y{1, -1};
  EXPECT_DOUBLE_EQ(hinge_loss(std::vector<double>{0, 0}, y), 2.0);
  EXPECT_DOUBLE_EQ(hinge_loss(std::vector<double>{2, -3}, y), 0.0);
  EXPECT_DOUBLE_EQ(hinge_loss(std::vector<double>{0.5, 0.5}, y), 0.5 + 1.5);
  EXPECT_EQ(hinge_loss_grad(std::vector<double>{0, 0}, y), (std::vector<double>{-1, 1}));
  EXPECT_EQ(hinge_loss_grad(std::vector<double>{2, -3}, y), (std::vector<double>{0, 0}));
}

TEST(HingeLoss, KinkSubgradientIsZero) {
  const std::vector<double> y{1, -1};
  EXPECT_EQ(hinge_loss_grad(std::vector<double>{1, -1}, y), (std::vector<double>{0, 0}));
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + trial % 7;
    std::vector<double> a(c);
    for (auto& v : a) v = rng.uniform(-3, 3);
    const auto y = oracle::code(c, trial % c);
    for (LossKind kind : {LossKind::kSquare, LossKind::kHinge}) {
      const auto g = loss_grad(kind, a, y);
      for (std::size_t i = 0; i < c; ++i) {
        if (kind == LossKind::kHinge && std::abs(1 - y[i] * a[i]) < 1e-3) continue;
        const double h = 1e-6;
        auto up = a, down = a;
        up[i] += h;
        down[i] -= h;
        const long double fu = kind == LossKind::kSquare ? oracle::square(up, y) : oracle::hinge(up, y);
        const long double fd = kind == LossKind::kSquare ? oracle::square(down, y) : oracle::hinge(down, y);
        EXPECT_NEAR(g[i], static_cast<double>((fu - fd) / (2 * h)), 1e-6);
      }
      EXPECT_NEAR(loss_value(kind, a, y),
                  static_cast<double>(kind == LossKind::kSquare ? oracle::square(a, y) : oracle::hinge(a, y)),
                  1e-12);
    }
  }
}

TEST(Losses, LengthMismatchThrows) {
  const std::vector<double> a{0, 0, 0}, y{1, -1};
  EXPECT_THROW(square_loss(a, y), ParameterError);
  EXPECT_THROW(hinge_loss_grad(a, y), ParameterError);
  EXPECT_THROW(loss_value(LossKind::kSquare, a, y), ParameterError);
}

TEST(Losses, Names) {
  EXPECT_EQ(parse_loss("square"), LossKind::kSquare);
  EXPECT_EQ(parse_loss("hinge"), LossKind::kHinge);
  EXPECT_EQ(loss_name(LossKind::kHinge), "hinge");
  EXPECT_THROW(parse_loss("logistic"), ParameterError);
}

TEST(PredictClass, FigureOneLeaves) {
  EXPECT_EQ(predict_class(std::vector<double>{-0.8, -0.7, 0.9, -0.93}), 2u);
  EXPECT_EQ(predict_class(std::vector<double>{0.98, -0.95, -0.87, -0.94}), 0u);
  EXPECT_EQ(predict_class(std::vector<double>{-0.93, -0.95, 0.98, -0.99}), 2u);
  EXPECT_EQ(predict_class(std::vector<double>{-0.89, -0.99, -0.98, 0.99}), 3u);
}

TEST(PredictClass, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(predict_class(std::vector<double>{-1, 0.3, 0.2}), 1u);
  EXPECT_EQ(predict_class(std::vector<double>{0.5, 0.5, 0.1}), 0u);
  EXPECT_EQ(predict_class(std::vector<double>{0.1, 0.7, 0.7}), 1u);
  EXPECT_THROW(predict_class(std::vector<double>{}), ParameterError);
}

}  // namespace
}  // namespace rdt
