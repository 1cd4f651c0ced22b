#include "frackap/profile_table.hpp"

#include <algorithm>

#include "frackap/errors.hpp"

namespace frackap {

LocalLagrange::LocalLagrange(std::vector<double> nodes, std::vector<double> values, int order)
    : nodes_(std::move(nodes)), values_(std::move(values)), order_(order) {
  if (nodes_.size() != values_.size()) throw ShapeError("LocalLagrange: node and value counts differ");
  if (nodes_.size() < 2) throw ShapeError("LocalLagrange: need at least two nodes");
  if (order_ < 2) throw DomainError("LocalLagrange: order must be at least 2");
  order_ = std::min<int>(order_, static_cast<int>(nodes_.size()));
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("LocalLagrange: nodes must be strictly increasing");
  }
}

double LocalLagrange::operator()(double x) const {
  const auto n = static_cast<std::ptrdiff_t>(nodes_.size());
  const auto upper = std::upper_bound(nodes_.begin(), nodes_.end(), x) - nodes_.begin();
  std::ptrdiff_t start = upper - order_ / 2;
  start = std::clamp<std::ptrdiff_t>(start, 0, n - order_);
  double sum = 0.0;
  for (std::ptrdiff_t i = start; i < start + order_; ++i) {
    const double xi = nodes_[static_cast<std::size_t>(i)];
    if (x == xi) return values_[static_cast<std::size_t>(i)];
    double basis = 1.0;
    for (std::ptrdiff_t j = start; j < start + order_; ++j) {
      if (j == i) continue;
      const double xj = nodes_[static_cast<std::size_t>(j)];
      basis *= (x - xj) / (xi - xj);
    }
    sum += basis * values_[static_cast<std::size_t>(i)];
  }
  return sum;
}

}  // namespace frackap
