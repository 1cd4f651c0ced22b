#include "frackap/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include "frackap/errors.hpp"

namespace frackap {

namespace {

struct JacobiValues {
  double pn;
  double pn1;
};

JacobiValues jacobi_recurrence(int n, double a, double b, double x) {
  const double ab = a + b;
  double p0 = 1.0;
  double p1 = 0.5 * (a - b + (ab + 2.0) * x);
  if (n == 1) return {p1, p0};
  for (int j = 1; j < n; ++j) {
    const double c = 2.0 * j + ab;
    const double a1 = 2.0 * (j + 1) * (j + ab + 1.0) * c;
    const double a2 = (c + 1.0) * (a * a - b * b);
    const double a3 = c * (c + 1.0) * (c + 2.0);
    const double a4 = 2.0 * (j + a) * (j + b) * (c + 2.0);
    const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

double jacobi_derivative(int n, double a, double b, double x, const JacobiValues& v) {
  const double c = 2.0 * n + a + b;
  return (n * (a - b - c * x) * v.pn + 2.0 * (n + a) * (n + b) * v.pn1) / (c * (1.0 - x * x));
}

QuadratureRule build_gauss_jacobi(int n, double a, double b) {
  // Golub-Welsch eigenvalues as starting points, Newton polish on the
  // three-term recurrence, weights from the Christoffel formula.
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  const double ab = a + b;
  for (int j = 0; j < n; ++j) {
    const double c = 2.0 * j + ab;
    diag(j) = (j == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (c * (c + 2.0));
  }
  for (int j = 1; j < n; ++j) {
    const double c = 2.0 * j + ab;
    double v;
    if (j == 1) {
      v = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      v = 4.0 * j * (j + a) * (j + b) * (j + ab) / (c * c * (c + 1.0) * (c - 1.0));
    }
    sub(j - 1) = std::sqrt(v);
  }
  Eigen::VectorXd x0;
  if (n == 1) {
    x0 = diag;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    x0 = solver.eigenvalues();
  }

  const double log_scale = std::lgamma(a + n) + std::lgamma(b + n) - std::lgamma(n + 1.0) -
                           std::lgamma(n + ab + 1.0);
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::clamp(x0(i), -1.0 + 1e-300, 1.0 - 1e-300);
    for (int it = 0; it < 3; ++it) {
      const auto v = jacobi_recurrence(n, a, b, x);
      const double dp = jacobi_derivative(n, a, b, x, v);
      const double step = v.pn / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const auto v = jacobi_recurrence(n, a, b, x);
    const double dp = jacobi_derivative(n, a, b, x, v);
    const double c = 2.0 * n + ab;
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = std::exp(log_scale) * c * std::pow(2.0, ab) / (dp * v.pn1);
  }
  return rule;
}

}  // namespace

std::shared_ptr<const QuadratureRule> gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw DomainError("gauss_jacobi: need at least one node");
  if (!(alpha > -1.0 && beta > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const QuadratureRule>> cache;
  const auto key = std::make_tuple(n, alpha, beta);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const QuadratureRule>(build_gauss_jacobi(n, alpha, beta));
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(rule)).first->second;
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 21>;

struct Segment {
  double value;
  double error;
  double l1;
};

Segment gk_segment(const std::function<double(double)>& f, double a, double b) {
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0;
  double gauss = 0.0;
  double l1 = 0.0;
  // Kronrod abscissae: index 0 is the centre, odd indices are Gauss nodes
  // for N = 21 (Gauss-10 has no centre node).
  const double fc = f(c);
  kron += wk[0] * fc;
  l1 += wk[0] * std::abs(fc);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fp = f(c + h * xk[i]);
    const double fm = f(c - h * xk[i]);
    kron += wk[i] * (fp + fm);
    l1 += wk[i] * (std::abs(fp) + std::abs(fm));
    if (i % 2 == 1) gauss += wg[i / 2] * (fp + fm);
  }
  return {kron * h, std::abs((kron - gauss) * h), l1 * std::abs(h)};
}

// tol is this segment's share of the global error budget; halving it per
// split keeps the summed Kronrod estimates below the top-level tolerance.
void adaptive(const std::function<double(double)>& f, double a, double b, double tol, int depth,
              const Segment& whole, AdaptiveResult& out) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * whole.l1;
  if (whole.error <= std::max(tol, floor) || depth <= 0 ||
      !(std::abs(b - a) > 1e-15 * (std::abs(a) + std::abs(b)))) {
    out.value += whole.value;
    out.error += whole.error;
    out.l1 += whole.l1;
    return;
  }
  const double m = 0.5 * (a + b);
  const Segment left = gk_segment(f, a, m);
  const Segment right = gk_segment(f, m, b);
  adaptive(f, a, m, 0.5 * tol, depth - 1, left, out);
  adaptive(f, m, b, 0.5 * tol, depth - 1, right, out);
}

}  // namespace

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                                  double abs_tol, int max_depth) {
  AdaptiveResult out;
  if (a == b) return out;
  const Segment whole = gk_segment(f, a, b);
  adaptive(f, a, b, std::max(rel_tol * whole.l1, abs_tol), max_depth, whole, out);
  return out;
}

}  // namespace frackap
