#pragma once

#include <span>
#include <vector>

namespace frackap {

// Per-axis weight multiindex a = (a_1, ..., a_n) of the measure x^a dx.
// Either every a_i is zero (Laplace case on R^n) or every a_i is positive
// (Bessel case on the open orthant).
class BesselIndex {
 public:
  // Throws DomainError on n = 0, negative or mixed weights.
  explicit BesselIndex(std::vector<double> a);

  static BesselIndex laplace(int n);
  static BesselIndex bessel(std::vector<double> a) { return BesselIndex(std::move(a)); }

  int n() const noexcept { return static_cast<int>(a_.size()); }
  std::span<const double> a() const noexcept { return a_; }
  double a(int i) const { return a_.at(static_cast<std::size_t>(i)); }
  // alpha_i = (a_i - 1) / 2
  double alpha(int i) const { return 0.5 * (a(i) - 1.0); }
  double weight_sum() const noexcept { return sum_; }
  // Homogeneous dimension d = n + |a|.
  double d() const noexcept { return static_cast<double>(a_.size()) + sum_; }
  bool is_bessel() const noexcept { return sum_ > 0.0; }
  bool is_laplace() const noexcept { return !is_bessel(); }

  bool operator==(const BesselIndex& other) const = default;

 private:
  std::vector<double> a_;
  double sum_ = 0.0;
};

// gamma in (0, 2) and the weight index select the operator
// (-Delta_a)^{gamma/2} + d/dt and its fundamental solution.
class KernelSpec {
 public:
  KernelSpec(double gamma, BesselIndex index);

  double gamma() const noexcept { return gamma_; }
  const BesselIndex& index() const noexcept { return index_; }
  double d() const noexcept { return index_.d(); }

  bool operator==(const KernelSpec& other) const = default;

 private:
  double gamma_;
  BesselIndex index_;
};

double gamma_fn(double x);

// Normalised Bessel function j_alpha(z) = Gamma(alpha+1) (2/z)^alpha J_alpha(z).
// Holds the alpha-dependent constants so repeated evaluation is cheap.
class NormalizedBessel {
 public:
  explicit NormalizedBessel(double alpha);

  double operator()(double z) const;
  double alpha() const noexcept { return alpha_; }

  // Power series below 5, cylindrical Bessel J from Boost in between, and the
  // large-argument expansion from this radius on.
  double asymptotic_radius() const noexcept { return z_asym_; }
  double series(double z) const;
  double asymptotic(double z) const;

 private:
  double alpha_;
  double log_gamma_alpha1_;
  double z_asym_;
  bool cosine_;
};

double j_norm(double alpha, double z);
double j_norm_derivative(double alpha, double z);

// Approximate k-th positive zero (k >= 1) of J_alpha, McMahon's expansion.
double bessel_zero_estimate(double alpha, int k);

// Modified Bessel function of the second kind K_nu(x), x > 0.
double modified_K(double nu, double x);

// Weighted measure of the unit sphere (Laplace: full sphere; Bessel: the
// part in the positive orthant, weighted by Theta^a).
double sphere_measure(const BesselIndex& index);

// prod_i j_{alpha_i}(x_i xi_i). Bessel case only.
double jj_product(const BesselIndex& index, std::span<const double> x, std::span<const double> xi);

}  // namespace frackap
