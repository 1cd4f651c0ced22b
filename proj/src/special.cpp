#include "frackap/special.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "frackap/errors.hpp"

namespace frackap {

BesselIndex::BesselIndex(std::vector<double> a) : a_(std::move(a)) {
  if (a_.empty()) throw DomainError("BesselIndex: dimension n must be at least 1");
  int zeros = 0;
  for (double ai : a_) {
    if (!std::isfinite(ai) || ai < 0.0) throw DomainError("BesselIndex: weights must be finite and nonnegative");
    if (ai == 0.0) ++zeros;
    sum_ += ai;
  }
  if (zeros != 0 && zeros != n()) {
    throw UnsupportedCaseError("BesselIndex: mixed index (some a_i = 0, some a_i > 0) is not supported");
  }
}

BesselIndex BesselIndex::laplace(int n) {
  if (n < 1) throw DomainError("BesselIndex: dimension n must be at least 1");
  return BesselIndex(std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

KernelSpec::KernelSpec(double gamma, BesselIndex index) : gamma_(gamma), index_(std::move(index)) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw DomainError("KernelSpec: gamma must lie in (0, 2)");
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw DomainError("gamma_fn: argument must be positive");
  return std::tgamma(x);
}

namespace {

constexpr double kPi = std::numbers::pi;

// The power series loses about log10(e^z) digits to cancellation; the Hankel
// expansion reaches a few ulp from z = 16 for orders up to 4 and needs a
// little more room beyond.
constexpr double kSeriesRadius = 5.0;
double asymptotic_radius_for(double alpha) { return 16.0 + std::max(0.0, alpha - 4.0); }

}  // namespace

NormalizedBessel::NormalizedBessel(double alpha)
    : alpha_(alpha),
      log_gamma_alpha1_(std::lgamma(alpha + 1.0)),
      z_asym_(asymptotic_radius_for(alpha)),
      cosine_(alpha == -0.5) {
  if (!(alpha >= -0.5)) throw DomainError("j_norm: order must satisfy alpha >= -1/2");
}

double NormalizedBessel::series(double z) const {
  const double q = -0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (static_cast<double>(k) + alpha_));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 0.5 * z) break;
  }
  return sum;
}

double NormalizedBessel::asymptotic(double z) const {
  const double mu = 4.0 * alpha_ * alpha_;
  double p = 1.0;
  double q = 0.0;
  double t = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    t *= (mu - odd * odd) / (8.0 * k * z);
    const double mag = std::abs(t);
    if (mag > prev && odd * odd > mu) break;
    switch (k % 4) {
      case 1: q += t; break;
      case 2: p -= t; break;
      case 3: q -= t; break;
      default: p += t; break;
    }
    if (mag < 1e-17) break;
    prev = mag;
  }
  const double chi = z - (0.5 * alpha_ + 0.25) * kPi;
  const double jv = std::sqrt(2.0 / (kPi * z)) * (p * std::cos(chi) - q * std::sin(chi));
  return std::exp(log_gamma_alpha1_ + alpha_ * std::log(2.0 / z)) * jv;
}

double NormalizedBessel::operator()(double z) const {
  z = std::abs(z);
  if (cosine_) return std::cos(z);
  if (z <= kSeriesRadius) return series(z);
  if (z >= z_asym_) return asymptotic(z);
  return std::exp(log_gamma_alpha1_ + alpha_ * std::log(2.0 / z)) * boost::math::cyl_bessel_j(alpha_, z);
}

double j_norm(double alpha, double z) { return NormalizedBessel(alpha)(z); }

double j_norm_derivative(double alpha, double z) {
  if (!(alpha >= -0.5)) throw DomainError("j_norm_derivative: order must satisfy alpha >= -1/2");
  return -z * j_norm(alpha + 1.0, z) / (2.0 * (alpha + 1.0));
}

double bessel_zero_estimate(double alpha, int k) {
  const double beta = (k + 0.5 * alpha - 0.25) * kPi;
  const double mu = 4.0 * alpha * alpha;
  const double b8 = 8.0 * beta;
  return beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8 * b8 * b8);
}

double modified_K(double nu, double x) {
  if (!(x > 0.0)) throw DomainError("modified_K: argument must be positive");
  nu = std::abs(nu);
  // K_nu(x) = int_0^inf exp(-x cosh u) cosh(nu u) du; the integrand is even
  // and entire in u, so the trapezoid rule on [0, U] converges geometrically.
  const double u_peak = nu > 0.0 ? std::asinh(nu / x) : 0.0;
  const double g_peak = -x * std::cosh(u_peak) + nu * u_peak;
  auto g = [&](double u) { return -x * std::cosh(u) + nu * u; };
  double upper = u_peak + 1.0;
  while (g(upper) - g_peak > -60.0) upper += 1.0;
  auto f = [&](double u) { return std::exp(g(u) - g_peak) * 0.5 * (1.0 + std::exp(-2.0 * nu * u)); };

  int n = 64;
  double h = upper / n;
  double sum = 0.5 * (f(0.0) + f(upper));
  for (int i = 1; i < n; ++i) sum += f(i * h);
  double estimate = sum * h;
  for (int level = 0; level < 20; ++level) {
    double odd = 0.0;
    for (int i = 0; i < n; ++i) odd += f((i + 0.5) * h);
    sum += odd;
    n *= 2;
    h *= 0.5;
    const double next = sum * h;
    const bool done = std::abs(next - estimate) <= 1e-15 * std::abs(next);
    estimate = next;
    if (done && level >= 1) break;
  }
  return estimate * std::exp(g_peak);
}

double sphere_measure(const BesselIndex& index) {
  const double n = index.n();
  if (index.is_laplace()) return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
  double log_num = 0.0;
  for (int i = 0; i < index.n(); ++i) log_num += std::lgamma(index.alpha(i) + 1.0);
  return std::exp(log_num - (n - 1.0) * std::numbers::ln2 - std::lgamma(0.5 * index.d()));
}

double jj_product(const BesselIndex& index, std::span<const double> x, std::span<const double> xi) {
  if (index.is_laplace()) {
    throw UnsupportedCaseError("jj_product: the Laplace character is complex; use the radial reduction");
  }
  if (x.size() != static_cast<std::size_t>(index.n()) || xi.size() != x.size()) {
    throw ShapeError("jj_product: point dimension does not match the index");
  }
  double prod = 1.0;
  for (int i = 0; i < index.n(); ++i) prod *= j_norm(index.alpha(i), x[i] * xi[i]);
  return prod;
}

}  // namespace frackap
