#include "rdt/losses.hpp"

#include <string>

#include "rdt/errors.hpp"

namespace rdt {
namespace {

void check_lengths(std::span<const double> alpha, std::span<const double> y) {
  if (alpha.size() != y.size()) {
    throw ParameterError("loss: alpha has length " + std::to_string(alpha.size()) +
                         " but y has length " + std::to_string(y.size()));
  }
}

}  // namespace

LabelVector LabelVector::one_hot(std::size_t num_classes, std::size_t cls) {
  if (num_classes < 2) throw ParameterError("labels need at least 2 classes");
  if (cls >= num_classes) throw ParameterError("class index out of range");
  LabelVector y;
  y.values_.assign(num_classes, -1.0);
  y.values_[cls] = 1.0;
  return y;
}

LabelVector::LabelVector(std::vector<double> values) : values_(std::move(values)) {
  std::size_t positives = 0;
  for (double v : values_) {
    if (v == 1.0) {
      ++positives;
    } else if (v != -1.0) {
      throw ParameterError("label entries must be exactly +1 or -1");
    }
  }
  if (positives != 1) throw ParameterError("label must have exactly one +1");
}

std::size_t LabelVector::class_index() const {
  for (std::size_t c = 0; c < values_.size(); ++c) {
    if (values_[c] == 1.0) return c;
  }
  return 0;
}

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::kSquare ? "square" : "hinge";
}

LossKind parse_loss(std::string_view name) {
  if (name == "square") return LossKind::kSquare;
  if (name == "hinge") return LossKind::kHinge;
  throw ParameterError("unknown loss '" + std::string(name) + "'");
}

double square_loss(std::span<const double> alpha, std::span<const double> y) {
  check_lengths(alpha, y);
  double total = 0.0;
  for (std::size_t c = 0; c < alpha.size(); ++c) {
    const double d = alpha[c] - y[c];
    total += d * d;
  }
  return total;
}

std::vector<double> square_loss_grad(std::span<const double> alpha,
                                     std::span<const double> y) {
  check_lengths(alpha, y);
  std::vector<double> g(alpha.size());
  for (std::size_t c = 0; c < alpha.size(); ++c) g[c] = 2.0 * (alpha[c] - y[c]);
  return g;
}

double hinge_loss(std::span<const double> alpha, std::span<const double> y) {
  check_lengths(alpha, y);
  double total = 0.0;
  for (std::size_t c = 0; c < alpha.size(); ++c) {
    const double slack = 1.0 - y[c] * alpha[c];
    if (slack > 0.0) total += slack;
  }
  return total;
}

std::vector<double> hinge_loss_grad(std::span<const double> alpha,
                                    std::span<const double> y) {
  check_lengths(alpha, y);
  std::vector<double> g(alpha.size(), 0.0);
  for (std::size_t c = 0; c < alpha.size(); ++c) {
    if (y[c] * alpha[c] < 1.0) g[c] = -y[c];
  }
  return g;
}

double loss_value(LossKind kind, std::span<const double> alpha,
                  std::span<const double> y) {
  return kind == LossKind::kSquare ? square_loss(alpha, y) : hinge_loss(alpha, y);
}

std::vector<double> loss_grad(LossKind kind, std::span<const double> alpha,
                              std::span<const double> y) {
  return kind == LossKind::kSquare ? square_loss_grad(alpha, y)
                                   : hinge_loss_grad(alpha, y);
}

std::size_t predict_class(std::span<const double> alpha) {
  if (alpha.empty()) throw ParameterError("predict_class: empty score vector");
  std::size_t best = 0;
  for (std::size_t c = 1; c < alpha.size(); ++c) {
    if (alpha[c] > alpha[best]) best = c;
  }
  return best;
}

}  // namespace rdt
