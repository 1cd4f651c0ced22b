#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace frackap {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const noexcept { return nodes.size(); }
};

// Gauss-Jacobi rule for the weight (1-u)^alpha (1+u)^beta on [-1, 1].
// Rules are cached and shared; safe to call from several threads.
std::shared_ptr<const QuadratureRule> gauss_jacobi(int n, double alpha, double beta);
inline std::shared_ptr<const QuadratureRule> gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Adaptive Gauss-Kronrod (G10/K21) on a finite interval. The error budget
// max(rel_tol * L1, abs_tol) comes from the first K21 pass and is split in half
// at every bisection.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double rel_tol = 1e-12, double abs_tol = 0.0, int max_depth = 18);

}  // namespace frackap
