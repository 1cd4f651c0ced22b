#include "frackap/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "frackap/errors.hpp"
#include "frackap/hankel.hpp"
#include "frackap/quadrature.hpp"
#include "frackap/special.hpp"

namespace frackap {

namespace {

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("norm: p must be finite and at least 1");
}

// Trapezoid weights on the nodes of ax, including x^a on Bessel axes. The end
// cells reach to the axis ends.
std::vector<double> trapezoid_weights(const GridAxis& ax) {
  const std::size_t m = ax.nodes.size();
  std::vector<double> w(m);
  const double lo = ax.bessel ? 0.0 : -ax.extent;
  const double hi = ax.extent;
  for (std::size_t i = 0; i < m; ++i) {
    const double left = i == 0 ? lo : 0.5 * (ax.nodes[i - 1] + ax.nodes[i]);
    const double right = i + 1 == m ? hi : 0.5 * (ax.nodes[i] + ax.nodes[i + 1]);
    w[i] = (right - left) * (ax.bessel ? std::pow(ax.nodes[i], ax.a) : 1.0);
  }
  return w;
}

struct PowerSums {
  double gauss = 0.0;
  double trapezoid = 0.0;
  double outer = 0.0;
};

// sum w |v|^p over the spatial grid of f, with values from vals.
PowerSums power_sums(const GridFunction& f, const std::vector<double>& vals, double p) {
  const auto& axes = f.axes();
  const std::size_t n = axes.size();
  std::vector<std::vector<double>> trap(n);
  for (std::size_t k = 0; k < n; ++k) trap[k] = trapezoid_weights(axes[k]);
  std::vector<std::size_t> shape(n);
  for (std::size_t k = 0; k < n; ++k) shape[k] = axes[k].nodes.size();
  const auto count = static_cast<std::ptrdiff_t>(vals.size());
  double gauss = 0.0;
  double trapezoid = 0.0;
  double outer = 0.0;
#pragma omp parallel for reduction(+ : gauss, trapezoid, outer) schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    std::size_t rest = static_cast<std::size_t>(i);
    double wg = 1.0;
    double wt = 1.0;
    bool far = false;
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t j = rest % shape[k];
      rest /= shape[k];
      wg *= axes[k].weights[j];
      wt *= trap[k][j];
      far = far || std::abs(axes[k].nodes[j]) > 0.9 * axes[k].extent;
    }
    const double v = std::pow(std::abs(vals[static_cast<std::size_t>(i)]), p);
    gauss += wg * v;
    trapezoid += wt * v;
    if (far) outer += wg * v;
  }
  return {gauss, trapezoid, outer};
}

// Converts errors in I = ||f||^p into errors in ||f||.
NormReport report_from_power(double I, double dI, double tail, double p) {
  NormReport r;
  r.value = std::pow(std::max(I, 0.0), 1.0 / p);
  if (I > 0.0) {
    r.quadrature_error_estimate = r.value * std::abs(dI) / (p * I);
    r.truncation_tail_estimate = std::isfinite(tail) ? r.value * tail / (p * I) : std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace

NormReport lp_norm_space(const GridFunction& f, double p, const BesselIndex& index) {
  check_p(p);
  if (!(f.index() == index)) throw ShapeError("lp_norm_space: grid index does not match");
  const auto s = power_sums(f, f.values(), p);
  return report_from_power(s.gauss, s.gauss - s.trapezoid, s.outer, p);
}

NormReport lp_norm_spacetime(const SpaceTimeGridFunction& f, double p, const BesselIndex& index,
                             std::optional<double> time_decay) {
  check_p(p);
  if (!(f.index() == index)) throw ShapeError("lp_norm_spacetime: grid index does not match");
  double I = 0.0;
  double dI = 0.0;
  double tail = 0.0;
  double last = 0.0;
  for (std::size_t j = 0; j < f.time_count(); ++j) {
    const auto s = power_sums(f.slice(j), f.slice(j).values(), p);
    const double tw = f.time_weights()[j];
    I += tw * s.gauss;
    dI += tw * std::abs(s.gauss - s.trapezoid);
    tail += tw * s.outer;
    last = s.gauss;
  }
  if (time_decay && f.time_count() > 0 && last > 0.0) {
    const double T = f.times().back();
    tail += *time_decay > 1.0 ? last * T / (*time_decay - 1.0) : std::numeric_limits<double>::infinity();
  }
  return report_from_power(I, dI, tail, p);
}

NormReport sobolev_norm(const GridFunction& f, int m, double p, const BesselIndex& index, const OperatorConfig& cfg) {
  check_p(p);
  if (m < 0) throw DomainError("sobolev_norm: m must be nonnegative");
  if (m > 0 && !f.has_callable()) throw UnsupportedCaseError("sobolev_norm: needs the callable back-end for m > 0");
  if (!(f.index() == index)) throw ShapeError("sobolev_norm: grid index does not match");
  cfg.validate();
  auto s = power_sums(f, f.values(), p);
  double I = s.gauss;
  double dI = std::abs(s.gauss - s.trapezoid);
  double tail = s.outer;
  std::vector<PointFunction> levels{[&f](std::span<const double> x) { return f(x); }};
  for (int k = 1; k <= m; ++k) {
    OperatorConfig step = cfg;
    step.fd_step = cfg.fd_step * std::pow(10.0, k - 1);
    step.even_extension = cfg.even_extension || index.is_bessel();
    const PointFunction prev = levels.back();
    levels.push_back(
        [prev, step, index](std::span<const double> x) { return laplace_bessel_apply(index, prev, x, step); });
    const PointFunction& g = levels.back();
    std::vector<double> vals(f.size());
    const auto count = static_cast<std::ptrdiff_t>(f.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        vals[static_cast<std::size_t>(i)] = g(f.node(static_cast<std::size_t>(i)));
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    s = power_sums(f, vals, p);
    I += s.gauss;
    dI += std::abs(s.gauss - s.trapezoid);
    tail += s.outer;
  }
  return report_from_power(I, dI, tail, p);
}

NormReport potential_norm(const GridFunction& g, double p, double nu, const BesselIndex& index) {
  if (!(nu > 0.0)) throw DomainError("potential_norm: nu must be positive");
  return lp_norm_space(g, p, index);
}

NormReport dual_sobolev_norm_p2(const SpaceTimeGridFunction& u, const BesselIndex& index) {
  if (!(u.index() == index)) throw ShapeError("dual_sobolev_norm_p2: grid index does not match");
  const auto n = static_cast<std::size_t>(index.n());
  double X = std::numeric_limits<double>::infinity();
  for (const auto& ax : u.axes()) X = std::min(X, ax.extent);
  // Radial direction inside the grid's domain (the positive orthant on Bessel axes).
  const std::vector<double> dir(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const double kappa_s = inversion_constant(index) * sphere_measure(index);
  const double d = index.d();
  const double nu = 0.5 * d - 1.0;
  // Ray rules on [0, X]; level k has 128 * 2^k panels of Gauss-Legendre(8).
  struct RayRule {
    double panel = 0.0;
    std::vector<double> r;
    std::vector<double> w;
  };
  const auto gl = gauss_legendre(8);
  std::vector<RayRule> rules;
  auto rule = [&](std::size_t k) -> const RayRule& {
    while (rules.size() <= k) {
      RayRule rr;
      const int panels = 128 << rules.size();
      rr.panel = X / panels;
      for (int q = 0; q < panels; ++q) {
        for (std::size_t i = 0; i < gl->size(); ++i) {
          const double r = rr.panel * (q + 0.5 * (1.0 + gl->nodes[i]));
          rr.r.push_back(r);
          rr.w.push_back(0.5 * rr.panel * gl->weights[i] * std::pow(r, d - 1.0));
        }
      }
      rules.push_back(std::move(rr));
    }
    return rules[k];
  };

  double I = 0.0;
  double dI = 0.0;
  double tail = 0.0;
  for (std::size_t j = 0; j < u.time_count(); ++j) {
    const GridFunction& sl = u.slice(j);
    auto at = [&](double r, const std::vector<double>& e) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = r * e[k];
      return u.has_callable() ? u(x, u.times()[j]) : sl(x);
    };
    if (n > 1) {
      std::vector<double> axis_dir(n, 0.0);
      axis_dir[0] = 1.0;
      double peak = 0.0;
      double worst = 0.0;
      for (double r : {0.1 * X, 0.25 * X, 0.5 * X}) {
        const double a = at(r, dir);
        const double b = at(r, axis_dir);
        peak = std::max({peak, std::abs(a), std::abs(b)});
        worst = std::max(worst, std::abs(a - b));
      }
      if (worst > 1e-6 * peak + 1e-300) throw UnsupportedCaseError("dual_sobolev_norm_p2: slice is not radial in x");
    }
    // Transform by a composite Gauss rule along the ray; the grid values are
    // only piecewise smooth, which would stall the oscillatory transform.
    // Sampled lazily per level; a level is used once rho * panel <= 4.
    std::vector<std::vector<double>> fr;
    auto weighted = [&](double rho) {
      std::size_t k = 0;
      while (rho * rule(k).panel > 4.0) ++k;
      const RayRule& rr = rule(k);
      while (fr.size() <= k) {
        const RayRule& lv = rule(fr.size());
        std::vector<double> vals(lv.r.size());
        for (std::size_t i = 0; i < lv.r.size(); ++i) vals[i] = at(lv.r[i], dir);
        fr.push_back(std::move(vals));
      }
      double h = 0.0;
      for (std::size_t i = 0; i < rr.r.size(); ++i) h += rr.w[i] * fr[k][i] * j_norm(nu, rho * rr.r[i]);
      h *= sphere_measure(index);
      return kappa_s * h * h * std::pow(rho, d - 1.0) / (1.0 + std::pow(rho, 4.0));
    };
    double slice_sum = 0.0;
    double slice_err = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    double last_block = 0.0;
    for (; hi <= 64.0; lo = hi, hi *= 2.0) {
      const auto part = integrate_adaptive(weighted, lo, hi, 1e-9, 1e-14 * slice_sum, 14);
      slice_sum += part.value;
      slice_err += part.error;
      last_block = part.value;
      if (hi >= 8.0 && part.value <= 1e-13 * slice_sum) break;
    }
    const double tw = u.time_weights()[j];
    I += tw * slice_sum;
    dI += tw * slice_err;
    // Blocks decay at least like rho^{d-5}, so the rest is at most one more block's worth.
    tail += tw * last_block;
  }
  return report_from_power(I, dI, tail, 2.0);
}

}  // namespace frackap
