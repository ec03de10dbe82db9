#pragma once

#include <vector>

namespace snowlink {

// Gauss-Hermite rule for the standard normal density: sum w f(z) ~ E f(Z)
class QuadratureRule {
 public:
  static QuadratureRule gauss_hermite(int nodes);

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }

 private:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights)
      : nodes_(std::move(nodes)), weights_(std::move(weights)) {}

  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace snowlink
