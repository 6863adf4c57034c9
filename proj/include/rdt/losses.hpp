#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace rdt {

/// y in {-1,+1}^C with exactly one +1.
class LabelVector {
 public:
  static LabelVector one_hot(std::size_t num_classes, std::size_t cls);
  /// Validates that `values` is a +/-1 one-hot code.
  explicit LabelVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::size_t class_index() const;

 private:
  LabelVector() = default;
  std::vector<double> values_;
};

enum class LossKind { kSquare, kHinge };

std::string_view loss_name(LossKind kind);
/// Accepts "square" or "hinge".
LossKind parse_loss(std::string_view name);

/// sum_c (alpha_c - y_c)^2
double square_loss(std::span<const double> alpha, std::span<const double> y);
std::vector<double> square_loss_grad(std::span<const double> alpha,
                                     std::span<const double> y);

/// sum_c max(0, 1 - y_c alpha_c). The subgradient is 0 at the kink.
double hinge_loss(std::span<const double> alpha, std::span<const double> y);
std::vector<double> hinge_loss_grad(std::span<const double> alpha,
                                    std::span<const double> y);

double loss_value(LossKind kind, std::span<const double> alpha,
                  std::span<const double> y);
std::vector<double> loss_grad(LossKind kind, std::span<const double> alpha,
                              std::span<const double> y);

/// Argmax; ties go to the lowest index.
std::size_t predict_class(std::span<const double> alpha);

}  // namespace rdt
