#include "frackap/operators.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "frackap/errors.hpp"
#include "frackap/quadrature.hpp"

namespace frackap {

namespace {

constexpr double kPi = std::numbers::pi;
// Below this radius the spherical difference is replaced by its leading
// Taylor term -r^2/(2d) Delta_a f(x).
constexpr double kTaylorRadius = 1e-2;

double translate_at(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                    std::span<const double> y, const OperatorConfig& cfg) {
  return translate_nd(index, f, x, y, cfg.translate);
}

}  // namespace

void OperatorConfig::validate() const {
  if (!(fd_step > 0.0)) throw DomainError("OperatorConfig: fd_step must be positive");
  if (!(eta_split > 0.0)) throw DomainError("OperatorConfig: eta_split must be positive");
  if (sphere_quadrature_order < 4) throw DomainError("OperatorConfig: sphere_quadrature_order must be at least 4");
  if (!(far_cutoff > eta_split)) throw DomainError("OperatorConfig: far_cutoff must exceed eta_split");
  if (!(radial_tol > 0.0)) throw DomainError("OperatorConfig: radial_tol must be positive");
}

double laplace_bessel_apply(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                            const OperatorConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(index.n());
  if (x.size() != n) throw ShapeError("laplace_bessel_apply: point dimension mismatch");
  const double h = cfg.fd_step;
  if (index.is_bessel()) {
    for (double xi : x) {
      if (cfg.even_extension ? xi < 0.0 : xi <= h) {
        throw StepError("laplace_bessel_apply: Bessel coordinate within fd_step of the boundary");
      }
    }
  }
  const double f0 = f(x);
  std::vector<double> p(x.begin(), x.end());
  auto stencil = [&](double step) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = x[i] + step;
      const double fp = f(p);
      p[i] = x[i] - step;
      if (index.is_bessel() && p[i] < 0.0) p[i] = -p[i];
      const double fm = f(p);
      p[i] = x[i];
      const double second = (fp - 2.0 * f0 + fm) / (step * step);
      if (index.is_laplace()) {
        sum += second;
      } else if (x[i] == 0.0) {
        sum += (1.0 + index.a(static_cast<int>(i))) * second;
      } else {
        sum += second + index.a(static_cast<int>(i)) / x[i] * (fp - fm) / (2.0 * step);
      }
    }
    return sum;
  };
  return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

SphereRule sphere_rule(const BesselIndex& index, int order) {
  if (order < 1) throw DomainError("sphere_rule: order must be positive");
  SphereRule rule;
  const int n = index.n();
  if (n == 1) {
    if (index.is_bessel()) {
      rule.points = {{1.0}};
      rule.weights = {1.0};
    } else {
      rule.points = {{-1.0}, {1.0}};
      rule.weights = {0.5, 0.5};
    }
    return rule;
  }
  if (n == 2 && index.is_bessel()) {
    // u = cos(2 phi): the weight cos^{a1} sin^{a2} dphi becomes Jacobi.
    const auto gj = gauss_jacobi(order, index.alpha(1), index.alpha(0));
    double total = 0.0;
    for (double w : gj->weights) total += w;
    for (std::size_t k = 0; k < gj->size(); ++k) {
      const double u = gj->nodes[k];
      rule.points.push_back({std::sqrt(0.5 * (1.0 + u)), std::sqrt(0.5 * (1.0 - u))});
      rule.weights.push_back(gj->weights[k] / total);
    }
    return rule;
  }
  if (n == 2) {
    const int m = 2 * order;
    for (int k = 0; k < m; ++k) {
      const double phi = 2.0 * kPi * (k + 0.5) / m;
      rule.points.push_back({std::cos(phi), std::sin(phi)});
      rule.weights.push_back(1.0 / m);
    }
    return rule;
  }
  if (n == 3 && index.is_laplace()) {
    const auto gl = gauss_legendre(order);
    const int m = 2 * order;
    for (std::size_t i = 0; i < gl->size(); ++i) {
      const double z = gl->nodes[i];
      const double s = std::sqrt(1.0 - z * z);
      for (int k = 0; k < m; ++k) {
        const double phi = 2.0 * kPi * (k + 0.5) / m;
        rule.points.push_back({s * std::cos(phi), s * std::sin(phi), z});
        rule.weights.push_back(0.5 * gl->weights[i] / m);
      }
    }
    return rule;
  }
  throw UnsupportedCaseError("sphere_rule: only n <= 2, or n = 3 in the Laplace case");
}

double spherical_difference(const BesselIndex& index, const PointFunction& f, std::span<const double> x, double r,
                            const OperatorConfig& cfg) {
  if (!(r > 0.0)) throw DomainError("spherical_difference: r must be positive");
  if (x.size() != static_cast<std::size_t>(index.n())) throw ShapeError("spherical_difference: dimension mismatch");
  const SphereRule rule = sphere_rule(index, cfg.sphere_quadrature_order);
  std::vector<double> y(x.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < rule.weights.size(); ++k) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = r * rule.points[k][i];
    mean += rule.weights[k] * translate_at(index, f, x, y, cfg);
  }
  return f(x) - mean;
}

RadialProfile frac_laplace_from_transform(const KernelSpec& spec, const RadialProfile& f_hat) {
  const double g = spec.gamma();
  const RadialProfile multiplied([f_hat, g](double rho) { return std::pow(rho, g) * f_hat(rho); }, f_hat.decay());
  const BesselIndex index = spec.index();
  return RadialProfile([index, multiplied](double r) { return inverse_radial_transform(index, multiplied, r); },
                       DecayHint::power(-(spec.d() + g)));
}

RadialProfile frac_laplace_spectral_profile(const KernelSpec& spec, const RadialProfile& f) {
  const BesselIndex& index = spec.index();
  auto fhat = [&](double rho) { return radial_transform(index, f, rho); };
  const double peak = std::abs(fhat(0.0));
  double rho_max = 1.0;
  while (rho_max < 1e4 && (std::abs(fhat(rho_max)) > 1e-17 * peak || std::abs(fhat(0.75 * rho_max)) > 1e-17 * peak)) {
    rho_max *= 1.5;
  }
  const int count = 1025;
  std::vector<double> nodes(count);
  std::vector<double> values(count);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < count; ++i) {
    nodes[static_cast<std::size_t>(i)] = rho_max * i / (count - 1);
    values[static_cast<std::size_t>(i)] = fhat(nodes[static_cast<std::size_t>(i)]);
  }
  const auto sampled = RadialProfile::from_samples(std::move(nodes), std::move(values), DecayHint::compact(rho_max), 8);
  return frac_laplace_from_transform(spec, sampled);
}

double frac_laplace_spectral(const KernelSpec& spec, const RadialProfile& f, double r) {
  return frac_laplace_spectral_profile(spec, f)(r);
}

double frac_laplace_integral_raw(const BesselIndex& index, double gamma, const PointFunction& f,
                                 std::span<const double> x, const OperatorConfig& cfg) {
  cfg.validate();
  if (!(gamma > 0.0 && gamma < 2.0)) throw DomainError("frac_laplace_integral: gamma must lie in (0, 2)");
  const double d = index.d();
  const double eta = cfg.eta_split;
  const double rt = std::min(kTaylorRadius, 0.5 * eta);
  const double q = 2.0 - gamma;
  auto delta = [&](double r) { return spherical_difference(index, f, x, r, cfg); };

  OperatorConfig lap_cfg = cfg;
  lap_cfg.even_extension = true;
  const double lap = laplace_bessel_apply(index, f, x, lap_cfg);
  const double taylor = -lap / (2.0 * d) * std::pow(rt, q) / q;

  // s = r^{2-gamma} flattens r^{-1-gamma} Delta_r f ~ r^{1-gamma}.
  auto near_integrand = [&](double s) {
    const double r = std::pow(s, 1.0 / q);
    return delta(r) * std::pow(s, -2.0 / q) / q;
  };
  const auto near = integrate_adaptive(near_integrand, std::pow(rt, q), std::pow(eta, q), cfg.radial_tol, 0.0, 12);
  if (!(near.error <= 1e3 * cfg.radial_tol * std::max(near.l1, std::abs(taylor)) + 1e-300)) {
    throw NonConvergenceError("frac_laplace_integral: near part did not converge (f not smooth near x?)",
                              near.value, near.value - near.error);
  }

  double xnorm = 0.0;
  for (double xi : x) xnorm += xi * xi;
  const double R = cfg.far_cutoff + std::sqrt(xnorm);
  double far = 0.0;
  for (double lo = eta; lo < R;) {
    const double hi = std::min(2.0 * lo, R);
    far += integrate_adaptive([&](double r) { return delta(r) * std::pow(r, -1.0 - gamma); }, lo, hi, cfg.radial_tol, 0.0, 12)
               .value;
    lo = hi;
  }
  // Beyond R the difference is taken as frozen at its value there (f(x) for decaying f).
  const double tail = delta(R) * std::pow(R, -gamma) / gamma;
  return sphere_measure(index) * (taylor + near.value + far + tail);
}

double frac_laplace_constant(const BesselIndex& index, double gamma, const OperatorConfig& cfg) {
  static std::mutex mu;
  static std::map<std::pair<double, std::vector<double>>, double> cache;
  const auto key = std::make_pair(gamma, std::vector<double>(index.a().begin(), index.a().end()));
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const KernelSpec spec(gamma, index);
  const double nu = 0.5 * index.d() - 1.0;
  const double hat0 = sphere_measure(index) * std::pow(2.0, nu) * gamma_fn(nu + 1.0);
  const RadialProfile gauss_hat([hat0](double rho) { return hat0 * std::exp(-0.5 * rho * rho); },
                                DecayHint::exponential(0.5, 2.0));
  const double spectral = frac_laplace_from_transform(spec, gauss_hat)(1.0);
  const PointFunction gauss = [](std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return std::exp(-0.5 * s);
  };
  const std::vector<double> x(static_cast<std::size_t>(index.n()), 1.0 / std::sqrt(static_cast<double>(index.n())));
  const double c = spectral / frac_laplace_integral_raw(index, gamma, gauss, x, cfg);
  std::lock_guard lock(mu);
  cache.emplace(key, c);
  return c;
}

double frac_laplace_integral(const BesselIndex& index, double gamma, const PointFunction& f, std::span<const double> x,
                             const OperatorConfig& cfg) {
  return frac_laplace_constant(index, gamma, cfg) * frac_laplace_integral_raw(index, gamma, f, x, cfg);
}

double heat_operator_apply(const KernelSpec& spec, const SpaceTimeGridFunction& u, std::span<const double> x, double t,
                           const OperatorConfig& cfg) {
  cfg.validate();
  const double h = cfg.fd_step;
  if (!(t - h > 0.0) || t + h > u.times().back()) {
    throw StepError("heat_operator_apply: t within fd_step of the time grid boundary");
  }
  const PointFunction slice = [&u, t](std::span<const double> z) { return u(z, t); };
  const double frac = frac_laplace_integral(spec.index(), spec.gamma(), slice, x, cfg);
  const double d1 = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
  const double d2 = (u(x, t + 0.5 * h) - u(x, t - 0.5 * h)) / h;
  return frac + (4.0 * d2 - d1) / 3.0;
}

}  // namespace frackap
