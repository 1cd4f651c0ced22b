#pragma once

#include <vector>

namespace frackap {

// Piecewise local Lagrange interpolation on sorted, strictly increasing nodes.
// Each evaluation uses the `order` nodes nearest to the query; outside the
// node range the end windows extrapolate.
class LocalLagrange {
 public:
  LocalLagrange() = default;
  LocalLagrange(std::vector<double> nodes, std::vector<double> values, int order = 8);

  double operator()(double x) const;

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  int order() const noexcept { return order_; }
  bool empty() const noexcept { return nodes_.empty(); }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
  int order_ = 8;
};

}  // namespace frackap
