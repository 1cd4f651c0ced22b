#include "frackap/harness.hpp"

#include <algorithm>
#include <utility>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <ostream>
#include <random>

#include "frackap/errors.hpp"
#include "frackap/hankel.hpp"
#include "frackap/operators.hpp"
#include "frackap/quadrature.hpp"
#include "frackap/translate.hpp"

namespace frackap {

namespace {

using Suite = std::function<std::vector<CheckReport>(const HarnessConfig&)>;

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 9);
  return std::string(buf, r.ptr);
}

std::string short_num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string index_str(const BesselIndex& I) {
  std::string s = "a=[";
  for (int i = 0; i < I.n(); ++i) s += (i ? " " : "") + short_num(I.a(i));
  return s + "]";
}

CheckReport make_report(std::string id, std::string anchor, std::string params, double value, double tol,
                        std::string witness = {}) {
  CheckReport r;
  r.check_id = std::move(id);
  r.anchor = std::move(anchor);
  r.params = std::move(params);
  r.value = value;
  r.tolerance = tol;
  r.status = value <= tol ? CheckStatus::Pass : CheckStatus::Fail;
  r.witness = std::move(witness);
  return r;
}

// Transform of exp(-r^2 / (2 sigma^2)).
double gauss_hat(const BesselIndex& I, double sigma, double rho) {
  const double d = I.d();
  const double nu = 0.5 * d - 1.0;
  return sphere_measure(I) * std::pow(sigma, d) * std::pow(2.0, nu) * gamma_fn(nu + 1.0) *
         std::exp(-0.5 * sigma * sigma * rho * rho);
}

RadialProfile gauss_profile(double sigma) {
  const double c = 0.5 / (sigma * sigma);
  return RadialProfile([c](double r) { return std::exp(-c * r * r); }, DecayHint::exponential(c, 2.0));
}

// Samples f on [0, X] with step h and wraps the table as a profile supported
// on [0, X]; for functions that are costly to evaluate and negligible beyond X.
RadialProfile tabulate(const std::function<double(double)>& f, double X, double h) {
  const auto count = static_cast<std::ptrdiff_t>(std::llround(X / h)) + 1;
  std::vector<double> nodes(static_cast<std::size_t>(count));
  std::vector<double> values(nodes.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    nodes[i] = h * static_cast<double>(k);
    try {
      values[i] = f(nodes[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return RadialProfile::from_samples(std::move(nodes), std::move(values), DecayHint::compact(X), 8);
}

double richardson_derivative(const std::function<double(double)>& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

// ---------------------------------------------------------------- identities

std::vector<CheckReport> check_kernel_mass(const HarnessConfig& cfg) {
  std::vector<CheckReport> out;
  const std::vector<BesselIndex> indices{BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0}),
                                         BesselIndex({1.0, 1.0})};
  for (double g : {0.5, 1.0, 1.5}) {
    for (const auto& I : indices) {
      const KernelSpec spec(g, I);
      const KernelTable table =
          cfg.table_scale ? cached_table(spec)->with_scaled_values(*cfg.table_scale) : *cached_table(spec);
      double worst = 0.0;
      double worst_t = 0.0;
      for (double t : {0.25, 1.0, 4.0}) {
        const double e = std::abs(kernel_mass(table, t) - 1.0);
        if (!(e <= worst)) {
          worst = e;
          worst_t = t;
        }
      }
      out.push_back(make_report("kernel_mass", "int P(x,t) x^a dx = 1",
                                "gamma=" + short_num(g) + ";" + index_str(I), worst, 1e-6, "t=" + short_num(worst_t)));
    }
  }
  return out;
}

std::vector<CheckReport> check_time_scaling(const HarnessConfig& cfg) {
  std::vector<CheckReport> out;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ur(0.0, 5.0);
  std::uniform_real_distribution<double> ut(0.2, 5.0);
  for (double g : {0.5, 1.5}) {
    for (const auto& I : {BesselIndex::laplace(1), BesselIndex({2.0})}) {
      const KernelSpec spec(g, I);
      double worst = 0.0;
      std::string witness;
      for (int k = 0; k < 5; ++k) {
        const double r = ur(rng);
        const double t = ut(rng);
        const double lhs = P_quadrature(spec, r, t);
        const double rhs = std::pow(t, -spec.d() / g) * P_quadrature(spec, r * std::pow(t, -1.0 / g), 1.0);
        const double e = std::abs(lhs - rhs) / std::abs(rhs);
        if (!(e <= worst)) {
          worst = e;
          witness = "r=" + num(r) + ";t=" + num(t);
        }
      }
      out.push_back(make_report("time_scaling", "P(r,t) = t^(-d/gamma) P(r t^(-1/gamma),1)",
                                "gamma=" + short_num(g) + ";" + index_str(I), worst, 1e-8, witness));
    }
  }
  return out;
}

std::vector<CheckReport> check_radial_derivative(const HarnessConfig&) {
  std::vector<CheckReport> out;
  for (double g : {0.5, 1.5}) {
    const KernelSpec spec(g, BesselIndex({1.0}));
    const KernelSpec shifted(g, shift_index(spec.index(), 1));
    std::vector<double> ratios;
    for (double r : {0.5, 1.0, 2.0}) {
      for (double t : {0.5, 1.0, 2.0}) {
        const double dP = richardson_derivative([&](double s) { return P_quadrature(spec, s, t); }, r, 1e-3);
        ratios.push_back(dP / (-r * P_quadrature(shifted, r, t)));
      }
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    double mean = 0.0;
    for (double v : ratios) mean += v / static_cast<double>(ratios.size());
    const double spread = mean > 0.0 ? (*hi - *lo) / mean : INFINITY;
    out.push_back(make_report("radial_derivative", "d/dx_i P_a = -c x_i P_(a+2e_i)",
                              "gamma=" + short_num(g) + ";" + index_str(spec.index()), spread, 1e-4,
                              "c=" + num(mean)));
  }
  return out;
}

std::vector<CheckReport> check_weighted_moment(const HarnessConfig&) {
  std::vector<CheckReport> out;
  for (double g : {0.5, 1.0, 1.5}) {
    // a = (1, 1), b = (1, 0): on the quadrant |x| x^a = r^3 cos(t) sin(t), so the
    // radial kernel of index (2, 1) is integrated against r^4 dr / 2.
    const KernelSpec spec(g, BesselIndex({2.0, 1.0}));
    const auto table = cached_table(spec);
    const double R = table->r_max();
    auto f = [&](double s) { return table->base(s) * std::pow(s, 4.0); };
    double head = 0.0;
    double lo = 0.0;
    for (double hi = R * std::ldexp(1.0, -24); lo < R; lo = hi, hi = std::min(2.0 * hi, R)) {
      head += integrate_adaptive(f, lo, hi, 1e-13).value;
    }
    // The table tail integrates P s^{d-1} with d = 5, the same power here.
    const double at_R = 0.5 * (head + table->tail_mass(R));
    const double at_2R = 0.5 * (head + integrate_adaptive(f, R, 2.0 * R, 1e-13).value + table->tail_mass(2.0 * R));
    const double change = std::isfinite(at_R) ? std::abs(at_2R - at_R) / std::abs(at_R) : INFINITY;
    out.push_back(make_report("weighted_moment", "int P_(a+b)(x,t) |x|^|b| x^a dx finite",
                              "gamma=" + short_num(g) + ";a=[1 1];b=[1 0]", change, 1e-6,
                              "value=" + num(at_2R) + ";1/(2|S|)=" + num(0.5 / sphere_measure(spec.index()))));
  }
  return out;
}

std::vector<CheckReport> check_semigroup(const HarnessConfig& cfg) {
  std::vector<CheckReport> out;
  for (double g : {0.5, 1.5}) {
    for (double d : {2.0, 3.0}) {
      const BesselIndex I({d - 1.0});
      const KernelSpec spec(g, I);
      const KernelTable table =
          cfg.table_scale ? cached_table(spec)->with_scaled_values(*cfg.table_scale) : *cached_table(spec);
      const auto ax = graded_axis_for(I, 0, 200.0, 0.02, 1.15, 16);
      const auto G = GridFunction::sample_radial(I, {ax}, [&](double r) { return P_eval(table, r, 0.3); }, false);
      const auto F = GridFunction::sample_radial(I, {ax}, [&](double r) { return P_eval(table, r, 0.7); }, true);
      std::vector<std::vector<double>> pts;
      for (int i = 0; i <= 25; ++i) pts.push_back({0.2 * i});
      const auto v = bessel_convolve_at(I, F, G, pts);
      double worst = 0.0;
      double where = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double e = std::abs(v[i] - P_eval(table, pts[i][0], 1.0));
        if (!(e <= worst)) {
          worst = e;
          where = pts[i][0];
        }
      }
      out.push_back(make_report("semigroup", "P_t1 *_a P_t2 = P_(t1+t2)",
                                "gamma=" + short_num(g) + ";" + index_str(I) + ";t1=0.7;t2=0.3", worst, 1e-5,
                                "r=" + short_num(where)));
    }
  }
  return out;
}

std::vector<CheckReport> check_convolution_transform(const HarnessConfig&) {
  std::vector<CheckReport> out;
  for (const auto& I : {BesselIndex({1.0}), BesselIndex({2.0})}) {
    const auto f = gauss_profile(1.0);
    const auto g = gauss_profile(0.7);
    const auto ax = graded_axis_for(I, 0, 12.0, 0.05, 1.1, 16);
    const auto F = GridFunction::sample_radial(I, {ax}, [&](double r) { return f(r); }, true);
    const auto Gs = GridFunction::sample_radial(I, {ax}, [&](double r) { return g(r); }, false);
    std::vector<std::vector<double>> pts{{0.0}, {0.5}, {1.0}, {2.0}, {3.0}};
    TranslateOptions topts;
    topts.tol = 1e-12;
    const auto conv = bessel_convolve_at(I, F, Gs, pts, topts);
    // Product of the two numerical transforms, tabulated on [0, 10] where it
    // falls below e^-70.
    std::vector<double> rho_nodes(801);
    std::vector<double> prod(rho_nodes.size());
    for (std::size_t k = 0; k < rho_nodes.size(); ++k) rho_nodes[k] = 0.0125 * static_cast<double>(k);
    const auto count = static_cast<std::ptrdiff_t>(rho_nodes.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
      const double rho = rho_nodes[static_cast<std::size_t>(k)];
      prod[static_cast<std::size_t>(k)] = radial_transform(I, f, rho) * radial_transform(I, g, rho);
    }
    const auto product = RadialProfile::from_samples(rho_nodes, prod, DecayHint::compact(10.0), 8);
    double worst = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double rhs = inverse_radial_transform(I, product, pts[i][0]);
      worst = std::max(worst, std::abs(conv[i] - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
    out.push_back(make_report("convolution_transform", "I(f *_a g) = I(f) I(g)",
                              index_str(I) + ";sigma_f=1;sigma_g=0.7", worst / scale, 1e-5));
  }
  return out;
}

std::vector<CheckReport> check_translation_transform(const HarnessConfig&) {
  std::vector<CheckReport> out;
  for (const auto& I : {BesselIndex({1.0}), BesselIndex({2.0})}) {
    const double y = 0.8;
    const auto f = gauss_profile(1.0);
    TranslateOptions topts;
    topts.tol = 1e-13;
    const auto shifted = tabulate(
        [&](double x) { return bessel_translate_1d(I.alpha(0), [&](double z) { return f(z); }, x, y, topts); }, 12.0,
        0.01);
    double worst = 0.0;
    for (double rho : {0.5, 1.0, 2.0, 3.0}) {
      const double lhs = radial_transform(I, shifted, rho);
      const double rhs = j_norm(I.alpha(0), rho * y) * gauss_hat(I, 1.0, rho);
      worst = std::max(worst, std::abs(lhs - rhs) / gauss_hat(I, 1.0, 0.0));
    }
    out.push_back(make_report("translation_transform", "I(T^y f)(xi) = j(xi y) I(f)(xi)",
                              index_str(I) + ";y=0.8", worst, 1e-6));
  }
  return out;
}

std::vector<CheckReport> check_bessel_eigen(const HarnessConfig&) {
  std::vector<CheckReport> out;
  const double lambda = 2.0;
  const double x = 1.3;
  for (double alpha : {0.0, 0.5, 1.5}) {
    const BesselIndex I({2.0 * alpha + 1.0});
    const PointFunction f = [&](std::span<const double> p) { return j_norm(alpha, lambda * p[0]); };
    const std::vector<double> pt{x};
    const double res = laplace_bessel_apply(I, f, pt) + lambda * lambda * j_norm(alpha, lambda * x);
    out.push_back(make_report("bessel_eigen", "B_alpha j_alpha(lambda x) = -lambda^2 j_alpha(lambda x)",
                              "alpha=" + short_num(alpha) + ";lambda=2;x=1.3", std::abs(res) / (lambda * lambda), 1e-5));
  }
  return out;
}

std::vector<CheckReport> check_translation_commutes(const HarnessConfig&) {
  std::vector<CheckReport> out;
  const BesselIndex I({1.0});
  const double alpha = I.alpha(0);
  const auto f = gauss_profile(1.0);
  const PointFunction fp = [&](std::span<const double> p) { return f(std::abs(p[0])); };
  OperatorConfig even;
  even.even_extension = true;
  TranslateOptions topts;
  topts.tol = 1e-13;
  for (auto [x, y] : {std::pair{0.8, 0.5}, std::pair{1.5, 0.3}}) {
    const double lhs = bessel_translate_1d(
        alpha,
        [&](double z) {
          const std::vector<double> p{z};
          return laplace_bessel_apply(I, fp, p, even);
        },
        x, y, topts);
    const PointFunction translated = [&](std::span<const double> p) {
      return bessel_translate_1d(alpha, [&](double z) { return f(z); }, std::abs(p[0]), y, topts);
    };
    const std::vector<double> pt{x};
    const double rhs = laplace_bessel_apply(I, translated, pt);
    out.push_back(make_report("translation_commutes", "T^y Delta_a f = Delta_a T^y f",
                              index_str(I) + ";x=" + short_num(x) + ";y=" + short_num(y), std::abs(lhs - rhs), 1e-4));
  }
  return out;
}

std::vector<CheckReport> check_transform_diagonalizes(const HarnessConfig&) {
  std::vector<CheckReport> out;
  for (const auto& I : {BesselIndex({1.0}), BesselIndex({2.0})}) {
    const auto f = gauss_profile(1.0);
    const PointFunction fp = [&](std::span<const double> p) { return f(std::abs(p[0])); };
    OperatorConfig even;
    even.even_extension = true;
    const auto minus_lap = tabulate(
        [&](double r) {
          const std::vector<double> p{r};
          return -laplace_bessel_apply(I, fp, p, even);
        },
        12.0, 0.01);
    double worst = 0.0;
    double scale = 0.0;
    for (double rho : {0.5, 1.0, 2.0, 3.0}) {
      const double rhs = rho * rho * gauss_hat(I, 1.0, rho);
      worst = std::max(worst, std::abs(radial_transform(I, minus_lap, rho) - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
    out.push_back(make_report("transform_diagonalizes", "I(-Delta_a f) = |xi|^2 I(f)", index_str(I), worst / scale,
                              1e-5));
  }
  return out;
}

std::vector<CheckReport> check_frac_forms_agree(const HarnessConfig&) {
  std::vector<CheckReport> out;
  const BesselIndex I({1.0});
  const double sigma = std::sqrt(0.5);
  for (double g : {0.5, 1.5}) {
    const KernelSpec spec(g, I);
    const RadialProfile fhat([&](double rho) { return gauss_hat(I, sigma, rho); },
                             DecayHint::exponential(0.5 * sigma * sigma, 2.0));
    const auto spectral = frac_laplace_from_transform(spec, fhat);
    const auto f = gauss_profile(sigma);
    const PointFunction fp = [&](std::span<const double> p) { return f(std::abs(p[0])); };
    double worst = 0.0;
    std::string witness;
    for (double x : {0.5, 1.5}) {
      const std::vector<double> pt{x};
      const double a = frac_laplace_integral(I, g, fp, pt);
      const double b = spectral(x);
      const double e = std::abs(a - b) / std::abs(b);
      if (!(e <= worst)) {
        worst = e;
        witness = "x=" + short_num(x);
      }
    }
    out.push_back(make_report("frac_forms_agree", "spectral and singular-integral (-Delta_a)^(gamma/2) agree",
                              "gamma=" + short_num(g) + ";" + index_str(I), worst, 1e-3, witness));
  }
  return out;
}

std::vector<CheckReport> check_sphere_multiplier(const HarnessConfig&) {
  std::vector<CheckReport> out;
  const auto f = gauss_profile(1.0);
  for (const auto& I : {BesselIndex({1.0}), BesselIndex({2.0})}) {
    const PointFunction fp = [&](std::span<const double> p) { return f(std::abs(p[0])); };
    const double nu = 0.5 * I.d() - 1.0;
    for (double r : {0.3, 0.7, 1.5}) {
      const auto diff = tabulate(
          [&](double x) {
            const std::vector<double> p{x};
            return spherical_difference(I, fp, p, r);
          },
          12.0, 0.01);
      double worst = 0.0;
      for (int k = 0; k <= 10; ++k) {
        const double rho = 0.5 * k;
        const double rhs = (1.0 - j_norm(nu, r * rho)) * gauss_hat(I, 1.0, rho);
        worst = std::max(worst, std::abs(radial_transform(I, diff, rho) - rhs));
      }
      out.push_back(make_report("sphere_multiplier", "I(Delta_r f)(xi) = (1 - j(r|xi|)) I(f)(xi)",
                                "d=" + short_num(I.d()) + ";r=" + short_num(r), worst / gauss_hat(I, 1.0, 0.0), 1e-5));
    }
  }
  return out;
}

const std::vector<std::pair<std::string, Suite>>& identity_suites() {
  static const std::vector<std::pair<std::string, Suite>> suites{
      {"kernel_mass", check_kernel_mass},
      {"time_scaling", check_time_scaling},
      {"radial_derivative", check_radial_derivative},
      {"weighted_moment", check_weighted_moment},
      {"semigroup", check_semigroup},
      {"convolution_transform", check_convolution_transform},
      {"translation_transform", check_translation_transform},
      {"bessel_eigen", check_bessel_eigen},
      {"translation_commutes", check_translation_commutes},
      {"transform_diagonalizes", check_transform_diagonalizes},
      {"frac_forms_agree", check_frac_forms_agree},
      {"sphere_multiplier", check_sphere_multiplier},
  };
  return suites;
}

// ------------------------------------------------------------- inequalities

// Composite Gauss rule on [0, X] for radial functions of an n = 1 index: the
// weights carry x^a, and are doubled in the Laplace case (even functions).
struct HalfAxis {
  std::vector<double> x;
  std::vector<double> w;
};

HalfAxis half_axis(const BesselIndex& I, double X, double h0, double ratio, int order) {
  const double a = I.is_bessel() ? I.a(0) : 0.0;
  const auto ax = graded_axis(X, h0, ratio, order, a, true);
  HalfAxis h{ax.nodes, ax.weights};
  if (I.is_laplace()) {
    for (auto& w : h.w) w *= 2.0;
  }
  return h;
}

// (coarse, refined) pair: the refinement halves h0 and takes the square root of the ratio.
std::pair<HalfAxis, HalfAxis> axis_pair(const BesselIndex& I, double X, double h0, double ratio, int order) {
  return {half_axis(I, X, h0, ratio, order), half_axis(I, X, 0.5 * h0, std::sqrt(ratio), order)};
}

double lp(const HalfAxis& h, const std::vector<double>& v, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += h.w[i] * std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

template <class F>
std::vector<double> sample(const HalfAxis& h, F&& f) {
  std::vector<double> v(h.x.size());
  const auto count = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = f(h.x[static_cast<std::size_t>(i)]);
  return v;
}

struct Sup {
  double value = -INFINITY;
  std::string witness;
  void update(double v, const std::string& w) {
    if (!(v <= value)) {
      value = v;
      witness = w;
    }
  }
};

CheckReport stability_report(const std::string& id, const std::string& anchor, const std::string& params,
                             const Sup& coarse, const Sup& fine, double stability_tol) {
  CheckReport r;
  r.check_id = id;
  r.anchor = anchor;
  r.params = params + ";refined=" + num(fine.value);
  r.value = coarse.value;
  const double change = std::abs(fine.value / coarse.value - 1.0);
  r.tolerance = stability_tol;
  r.status = std::isfinite(coarse.value) && std::isfinite(fine.value) && change <= stability_tol ? CheckStatus::Pass
                                                                                                 : CheckStatus::Fail;
  r.witness = coarse.witness + ";change=" + num(change);
  return r;
}

CheckReport smoothness_bound(const InequalityConfig& cfg) {
  const BesselIndex I({1.0});
  const double d = I.d();
  OperatorConfig oc;
  oc.translate.tol = 1e-13;
  const std::vector<double> rs{1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0};
  const std::vector<double> ps{1.0, 2.0, 4.0};
  Sup sups[2];
  for (double sigma : {0.5, 1.0, 2.0}) {
    const auto axes = axis_pair(I, 8.0 * sigma + 2.0, 0.02 * sigma, 1.15, 8);
    const auto f = gauss_profile(sigma);
    const PointFunction fp = [&](std::span<const double> p) { return f(std::abs(p[0])); };
    for (int level = 0; level < 2; ++level) {
      const HalfAxis& h = level == 0 ? axes.first : axes.second;
      const auto lap = sample(h, [&](double x) { return (x * x / std::pow(sigma, 4) - d / (sigma * sigma)) * f(x); });
      for (double r : rs) {
        const auto diff = sample(h, [&](double x) {
          const std::vector<double> p{x};
          return spherical_difference(I, fp, p, r, oc);
        });
        for (double p : ps) {
          sups[level].update(lp(h, diff, p) / (r * r * lp(h, lap, p)),
                             "sigma=" + short_num(sigma) + ";r=" + short_num(r) + ";p=" + short_num(p));
        }
      }
    }
  }
  return stability_report("smoothness_bound", "||Delta_r f||_p <= c r^2 ||Delta_a f||_p", index_str(I), sups[0],
                          sups[1], cfg.stability_tol);
}

CheckReport intermediate_derivative(const InequalityConfig& cfg) {
  const BesselIndex I({1.0});
  const double d = I.d();
  const std::vector<double> ps{1.5, 2.0, 3.0};
  Sup sups[2];
  std::string gammas;
  for (double g : cfg.gammas) {
    gammas += (gammas.empty() ? "" : " ") + short_num(g);
    const KernelSpec spec(g, I);
    for (int k = 0; k < 20; ++k) {
      const double sigma = 0.25 * std::pow(16.0, k / 19.0);
      const RadialProfile fhat([&](double rho) { return gauss_hat(I, sigma, rho); },
                               DecayHint::exponential(0.5 * sigma * sigma, 2.0));
      const auto frac = frac_laplace_from_transform(spec, fhat);
      const auto f = gauss_profile(sigma);
      const auto axes = axis_pair(I, 40.0 * sigma, 0.05 * sigma, 1.25, 8);
      for (int level = 0; level < 2; ++level) {
        const HalfAxis& h = level == 0 ? axes.first : axes.second;
        const auto fv = sample(h, [&](double x) { return f(x); });
        const auto lv = sample(h, [&](double x) { return (x * x / std::pow(sigma, 4) - d / (sigma * sigma)) * f(x); });
        const auto gv = sample(h, [&](double x) { return frac(x); });
        for (double p : ps) {
          const double w1 = std::pow(std::pow(lp(h, fv, p), p) + std::pow(lp(h, lv, p), p), 1.0 / p);
          sups[level].update(lp(h, gv, p) / w1,
                             "gamma=" + short_num(g) + ";sigma=" + num(sigma) + ";p=" + short_num(p));
        }
      }
    }
  }
  return stability_report("intermediate_derivative", "||(-Delta_a)^(gamma/2) f||_p <= c ||f||_W1p",
                          index_str(I) + ";gammas=[" + gammas + "]", sups[0], sups[1], cfg.stability_tol);
}

CheckReport product_bound(const InequalityConfig& cfg) {
  const BesselIndex I = BesselIndex::laplace(1);
  const double p = 2.0;
  Sup sups[2];
  std::string gammas;
  for (double g : cfg.gammas) {
    gammas += (gammas.empty() ? "" : " ") + short_num(g);
    for (double R : {1.0, 2.0}) {
      auto bump = [R](double x) {
        const double u = x / R;
        return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
      };
      auto bump_dd = [R, &bump](double x) {
        const double u = x / R;
        if (std::abs(u) >= 1.0) return 0.0;
        const double s = 1.0 - u * u;
        const double g1 = -2.0 * u / (s * s);
        const double g2 = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
        return bump(x) * (g1 * g1 + g2) / (R * R);
      };
      double lap_phi = 0.0;
      for (int i = 0; i <= 20000; ++i) lap_phi = std::max(lap_phi, std::abs(bump_dd(R * i / 20000.0)));
      for (double sigma : {0.5, 1.0, 2.0}) {
        const auto f = gauss_profile(sigma);
        const PointFunction prod = [&](std::span<const double> x) { return bump(x[0]) * f(std::abs(x[0])); };
        const auto axes = axis_pair(I, 20.0, 0.02, 1.2, 8);
        for (int level = 0; level < 2; ++level) {
          const HalfAxis& h = level == 0 ? axes.first : axes.second;
          const auto fv = sample(h, [&](double x) { return f(x); });
          const auto lv =
              sample(h, [&](double x) { return (x * x / std::pow(sigma, 4) - 1.0 / (sigma * sigma)) * f(x); });
          const auto nv = sample(h, [&](double x) {
            const std::vector<double> pt{x};
            return frac_laplace_integral(I, g, prod, pt);
          });
          const double w1 = std::sqrt(std::pow(lp(h, fv, p), 2.0) + std::pow(lp(h, lv, p), 2.0));
          sups[level].update(lp(h, nv, p) / (w1 + lap_phi * lp(h, fv, p)),
                             "gamma=" + short_num(g) + ";R=" + short_num(R) + ";sigma=" + short_num(sigma));
        }
      }
    }
  }
  return stability_report("product_bound",
                          "||(-Delta)^(gamma/2)(phi f)||_p <= c (||phi||_inf ||f||_W1p + ||Delta phi||_inf ||f||_p)",
                          index_str(I) + ";p=2;gammas=[" + gammas + "]", sups[0], sups[1], cfg.stability_tol);
}

CheckReport potential_equivalence(const InequalityConfig& cfg) {
  const BesselIndex I({1.0});
  const std::vector<double> ps{1.5, 2.0, 3.0};
  Sup hi[2];
  Sup inv[2];
  for (int k = 0; k < 9; ++k) {
    const double sigma = 0.1 * std::pow(100.0, k / 8.0);
    const RadialProfile potential_hat(
        [&](double rho) { return gauss_hat(I, sigma, rho) / (1.0 + rho * rho); },
        DecayHint::exponential(0.5 * sigma * sigma, 2.0));
    const auto g = gauss_profile(sigma);
    const auto axes = axis_pair(I, 40.0 * std::max(sigma, 1.0), 0.05 * std::min(sigma, 1.0), 1.25, 8);
    for (int level = 0; level < 2; ++level) {
      const HalfAxis& h = level == 0 ? axes.first : axes.second;
      const auto fv = sample(h, [&](double x) { return inverse_radial_transform(I, potential_hat, x); });
      const auto gv = sample(h, [&](double x) { return g(x); });
      // (1 - Delta_a) f = g, so Delta_a f = f - g.
      std::vector<double> lv(fv.size());
      for (std::size_t i = 0; i < fv.size(); ++i) lv[i] = fv[i] - gv[i];
      for (double p : ps) {
        const double ratio = std::pow(std::pow(lp(h, fv, p), p) + std::pow(lp(h, lv, p), p), 1.0 / p) / lp(h, gv, p);
        const std::string w = "sigma=" + num(sigma) + ";p=" + short_num(p);
        hi[level].update(ratio, w);
        inv[level].update(1.0 / ratio, w);
      }
    }
  }
  Sup c[2];
  for (int level = 0; level < 2; ++level) {
    c[level] = hi[level].value >= inv[level].value ? hi[level] : inv[level];
  }
  return stability_report("potential_equivalence", "||f||_W1p ~ ||g||_p for f = G_(a,2) *_a g", index_str(I), c[0], c[1],
                          cfg.stability_tol);
}

CheckReport contraction(const InequalityConfig& cfg) {
  Sup sups[2];
  TranslateOptions topts;
  topts.tol = 1e-13;
  const std::vector<std::pair<std::string, std::function<double(double)>>> family{
      {"gauss", [](double x) { return std::exp(-0.5 * x * x); }},
      {"shifted", [](double x) { return std::exp(-(x - 2.0) * (x - 2.0)); }},
      {"signed", [](double x) { return (1.0 - x * x) * std::exp(-x * x); }},
  };
  for (const auto& I : {BesselIndex({1.0}), BesselIndex({2.0})}) {
    const auto axes = axis_pair(I, 30.0, 0.05, 1.1, 16);
    for (int level = 0; level < 2; ++level) {
      const HalfAxis& h = level == 0 ? axes.first : axes.second;
      for (const auto& [name, f] : family) {
        const auto fv = sample(h, f);
        for (double y : {0.3, 1.0, 3.0}) {
          const auto tv = sample(h, [&](double x) { return bessel_translate_1d(I.alpha(0), f, x, y, topts); });
          for (double p : {1.0, 2.0, 4.0}) {
            sups[level].update(lp(h, tv, p) / lp(h, fv, p), index_str(I) + ";f=" + name + ";y=" + short_num(y) +
                                                                ";p=" + short_num(p));
          }
        }
      }
    }
  }
  CheckReport r = stability_report("contraction", "||T^y f||_p <= ||f||_p", "a=[1]|[2]", sups[0], sups[1],
                                   cfg.stability_tol);
  r.tolerance = 1.0 + 1e-8;
  if (!(sups[0].value <= r.tolerance && sups[1].value <= r.tolerance)) r.status = CheckStatus::Fail;
  return r;
}

const std::map<std::string, std::function<CheckReport(const InequalityConfig&)>>& inequality_table() {
  static const std::map<std::string, std::function<CheckReport(const InequalityConfig&)>> table{
      {"smoothness_bound", smoothness_bound}, {"intermediate_derivative", intermediate_derivative},
      {"product_bound", product_bound},       {"potential_equivalence", potential_equivalence},
      {"contraction", contraction},
  };
  return table;
}

// (1 - j_alpha(u)) / u^2, with its Taylor expansion near 0.
double smoothness_multiplier(double alpha, double u) {
  if (u < 1e-3) {
    const double u2 = u * u;
    return 1.0 / (4.0 * (alpha + 1.0)) - u2 / (32.0 * (alpha + 1.0) * (alpha + 2.0));
  }
  return (1.0 - j_norm(alpha, u)) / (u * u);
}

}  // namespace

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

HarnessConfig HarnessConfig::full() {
  HarnessConfig c;
  c.checks = identity_check_ids();
  for (auto& id : inequality_check_ids()) c.checks.push_back(id);
  c.checks.push_back("multiplier_integrability");
  return c;
}

std::vector<std::string> identity_check_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, suite] : identity_suites()) ids.push_back(id);
  return ids;
}

std::vector<std::string> inequality_check_ids() {
  return {"smoothness_bound", "intermediate_derivative", "product_bound", "potential_equivalence", "contraction"};
}

double kernel_mass(const KernelTable& table, double t) {
  const KernelSpec& spec = table.spec();
  const double d = spec.d();
  const double scale = std::pow(t, 1.0 / spec.gamma());
  const double R = table.r_max() * scale;
  auto f = [&](double r) { return P_eval(table, r, t) * std::pow(r, d - 1.0); };
  double sum = 0.0;
  double lo = 0.0;
  for (double hi = R * std::ldexp(1.0, -30); lo < R; lo = hi, hi = std::min(2.0 * hi, R)) {
    sum += integrate_adaptive(f, lo, hi, 1e-12).value;
  }
  return sphere_measure(spec.index()) * (sum + table.tail_mass(table.r_max()));
}

std::vector<CheckReport> run_identity_suite(const HarnessConfig& cfg) {
  std::vector<CheckReport> out;
  for (const auto& [id, suite] : identity_suites()) {
    if (std::find(cfg.checks.begin(), cfg.checks.end(), id) == cfg.checks.end()) continue;
    for (auto& r : suite(cfg)) out.push_back(std::move(r));
  }
  return out;
}

CheckReport estimate_inequality_constant(const std::string& check_id, const InequalityConfig& cfg) {
  const auto& table = inequality_table();
  const auto it = table.find(check_id);
  if (it == table.end()) throw DomainError("estimate_inequality_constant: unknown check '" + check_id + "'");
  return it->second(cfg);
}

CheckReport check_multiplier_integrability(double alpha, const IntegrabilityConfig& cfg) {
  if (!(alpha >= -0.5)) throw DomainError("check_multiplier_integrability: alpha must be at least -1/2");
  CheckReport r;
  r.check_id = "multiplier_integrability";
  r.anchor = "inverse transform of (1 - j_alpha(u))/u^2 is in L^1_alpha";
  r.params = "alpha=" + short_num(alpha);
  r.tolerance = cfg.tol;
  r.value = INFINITY;
  r.status = CheckStatus::Inconclusive;
  if (!(cfg.tol > 0.0)) {
    r.witness = "unreachable tolerance";
    return r;
  }
  const BesselIndex I = alpha == -0.5 ? BesselIndex::laplace(1) : BesselIndex({2.0 * alpha + 1.0});
  const double w = 2.0 * alpha + 1.0;
  // Laplace case: even function on the line, counted on both halves.
  const double sym = I.is_laplace() ? 2.0 : 1.0;
  const auto gl = gauss_legendre(16);
  constexpr int kSub = 16;

  // Block integrals of |h_eps| x^w, where h_eps is the inverse transform of the
  // multiplier damped by exp(-eps u^2): h convolved with a positive unit-mass kernel.
  auto block_integrals = [&](double eps, std::vector<double>& starts) {
    const double cut = std::sqrt(40.0 / eps);
    const RadialProfile m(
        [alpha, eps, cut](double u) { return u >= cut ? 0.0 : smoothness_multiplier(alpha, u) * std::exp(-eps * u * u); },
        DecayHint::compact(cut));
    std::vector<std::pair<double, double>> ranges{{0.0, 0.125}};
    for (double R = 0.125; R < cfg.max_radius; R *= 2.0) ranges.emplace_back(R, 2.0 * R);
    starts.clear();
    for (const auto& rg : ranges) starts.push_back(rg.first);
    const std::size_t per = static_cast<std::size_t>(kSub) * gl->size();
    std::vector<double> vals(ranges.size() * per);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const auto& [a, b] = ranges[k / per];
      const std::size_t sub = (k % per) / gl->size();
      const std::size_t node = k % gl->size();
      const double h = (b - a) / kSub;
      const double x = a + h * (static_cast<double>(sub) + 0.5 * (gl->nodes[node] + 1.0));
      try {
        vals[k] = 0.5 * h * gl->weights[node] * sym *
                  std::abs(inverse_radial_transform(I, m, x, HankelOptions{1e-10, 400000, false})) * std::pow(x, w);
      } catch (...) {
#pragma omp critical
        err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    std::vector<double> blocks(ranges.size(), 0.0);
    for (std::size_t k = 0; k < vals.size(); ++k) blocks[k / per] += vals[k];
    return blocks;
  };

  try {
    std::vector<double> starts;
    const auto coarse = block_integrals(4e-3, starts);
    const auto fine = block_integrals(1e-3, starts);
    double total_coarse = 0.0;
    for (double b : coarse) total_coarse += b;
    std::vector<double> shares;
    double total = 0.0;
    for (double b : fine) {
      total += b;
      shares.push_back(b / total);
    }
    const double change = std::abs(total - total_coarse) / total;
    const std::string tail = "integral=" + num(total) + ";eps_change=" + num(change) + ";last_share=" +
                             num(shares.back());
    // The first entry is the head [0, 1/8]; only the doubling blocks count.
    std::size_t k = shares.size();
    while (k > 1 && shares[k - 1] < cfg.tol) --k;
    if (k == shares.size() || !(change < cfg.tol)) {
      r.witness = tail;
      return r;
    }
    r.value = starts[k];
    r.status = CheckStatus::Pass;
    r.witness = tail;
  } catch (const NonConvergenceError& e) {
    r.witness = std::string("non-convergence: ") + e.what();
  }
  return r;
}

std::vector<CheckReport> run_checks(const HarnessConfig& cfg) {
  std::vector<CheckReport> out = run_identity_suite(cfg);
  const auto has = [&](const std::string& id) {
    return std::find(cfg.checks.begin(), cfg.checks.end(), id) != cfg.checks.end();
  };
  for (const auto& id : inequality_check_ids()) {
    if (has(id)) out.push_back(estimate_inequality_constant(id));
  }
  if (has("multiplier_integrability")) {
    IntegrabilityConfig lc;
    lc.tol = cfg.integrability_tol;
    for (double alpha : {-0.5, 0.0}) out.push_back(check_multiplier_integrability(alpha, lc));
  }
  for (const auto& id : cfg.checks) {
    const auto ids = identity_check_ids();
    const auto ineq = inequality_check_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end() && std::find(ineq.begin(), ineq.end(), id) == ineq.end() &&
        id != "multiplier_integrability") {
      throw DomainError("unknown check id '" + id + "'");
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CheckReport& a, const CheckReport& b) { return a.check_id < b.check_id; });
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  os << "check_id,params,status,value (residual or constant; dimensionless),tolerance (dimensionless),witness\n";
  for (const auto& r : reports) {
    os << csv_field(r.check_id) << ',' << csv_field(r.params) << ',' << to_string(r.status) << ',' << num(r.value)
       << ',' << num(r.tolerance) << ',' << csv_field(r.witness) << '\n';
  }
}

void write_text(std::ostream& os, const std::vector<CheckReport>& reports) {
  std::map<std::string, std::string> anchors;
  for (const auto& r : reports) anchors.emplace(r.check_id, r.anchor);
  os << "Checks and the statements they probe:\n";
  for (const auto& [id, anchor] : anchors) os << "  " << id << ": " << anchor << '\n';
  os << '\n';
  int pass = 0;
  for (const auto& r : reports) {
    pass += r.status == CheckStatus::Pass;
    os << (r.status == CheckStatus::Pass ? "[pass] " : r.status == CheckStatus::Fail ? "[FAIL] " : "[ ?? ] ")
       << r.check_id << " (" << r.params << ") value=" << num(r.value) << " tol=" << num(r.tolerance);
    if (!r.witness.empty()) os << " [" << r.witness << ']';
    os << '\n';
  }
  os << '\n'
     << pass << " of " << reports.size()
     << " checks passed. A passing inequality check is consistent with a finite constant; it does not prove one.\n";
}

}  // namespace frackap
