#pragma once

#include <span>
#include <vector>

#include "frackap/hankel.hpp"
#include "frackap/special.hpp"
#include "frackap/translate.hpp"

namespace frackap {

struct OperatorConfig {
  // Central-difference step in x (and in t for heat_operator_apply).
  double fd_step = 1e-3;
  // Split radius between the near and far parts of the singular integral.
  double eta_split = 1.0;
  // Nodes per angular variable of the sphere rule.
  int sphere_quadrature_order = 16;
  // Radius beyond which the translated function is taken as negligible; the
  // far part of the singular integral is closed analytically there.
  double far_cutoff = 60.0;
  // Let Bessel-axis stencils cross 0 by even reflection (f even in x_i).
  bool even_extension = false;
  // Relative tolerance of the radial integrals in the singular integral.
  double radial_tol = 1e-8;
  TranslateOptions translate{32, 4096, 1e-10, false};

  void validate() const;
};

// Delta_a f(x) by central differences with one Richardson step.
double laplace_bessel_apply(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                            const OperatorConfig& cfg = {});

// Normalised rule on the unit sphere (Laplace) or its positive part weighted
// by Theta^a (Bessel). n = 1 exact, n = 2 Gauss-Jacobi in cos(2 phi), n = 3
// Laplace only.
struct SphereRule {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
};
SphereRule sphere_rule(const BesselIndex& index, int order);

// f(x) minus the sphere average of T^{r Theta} f(x).
double spherical_difference(const BesselIndex& index, const PointFunction& f, std::span<const double> x, double r,
                            const OperatorConfig& cfg = {});

// (-Delta_a)^{gamma/2} f for radial f, through the multiplier rho^gamma.
// Samples f-hat once; the returned profile evaluates the image at any r.
RadialProfile frac_laplace_spectral_profile(const KernelSpec& spec, const RadialProfile& f);
// Same, with the transform of f already known.
RadialProfile frac_laplace_from_transform(const KernelSpec& spec, const RadialProfile& f_hat);
double frac_laplace_spectral(const KernelSpec& spec, const RadialProfile& f, double r);

// |S|_a int_0^inf r^{-1-gamma} Delta_{r,s,a} f(x) dr without the constant.
double frac_laplace_integral_raw(const BesselIndex& index, double gamma, const PointFunction& f,
                                 std::span<const double> x, const OperatorConfig& cfg = {});
// C(n, a, gamma) fitted once per (index, gamma) so that the integral form
// matches the spectral form on exp(-|x|^2/2) at |x| = 1.
double frac_laplace_constant(const BesselIndex& index, double gamma, const OperatorConfig& cfg = {});
double frac_laplace_integral(const BesselIndex& index, double gamma, const PointFunction& f, std::span<const double> x,
                             const OperatorConfig& cfg = {});

// (-Delta_a)^{gamma/2} u(., t)(x) + du/dt(x, t).
double heat_operator_apply(const KernelSpec& spec, const SpaceTimeGridFunction& u, std::span<const double> x,
                           double t, const OperatorConfig& cfg = {});

}  // namespace frackap
