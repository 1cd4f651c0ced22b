#include "frackap/translate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "frackap/errors.hpp"
#include "frackap/quadrature.hpp"

namespace frackap {

namespace {

void check_axis(const GridAxis& ax) {
  if (ax.nodes.size() < 8) throw ShapeError("grid axis needs at least 8 nodes");
  for (double w : ax.weights) {
    if (!(w > 0.0)) throw ShapeError("grid axis weights must be positive");
  }
}

// Four-point Lagrange stencil on one axis: flat node indices and coefficients.
// Returns false when x lies outside the axis.
bool stencil(const GridAxis& ax, double x, std::array<std::size_t, 4>& idx, std::array<double, 4>& coef) {
  const auto& nd = ax.nodes;
  const int m = static_cast<int>(nd.size());
  if (ax.bessel) x = std::abs(x);
  if (x > ax.extent || (!ax.bessel && x < -ax.extent)) return false;
  // Extended index i in [-m, m) on Bessel axes: i < 0 is the mirror of node -i-1.
  auto ext_node = [&](int i) { return i >= 0 ? nd[static_cast<std::size_t>(i)] : -nd[static_cast<std::size_t>(-i - 1)]; };
  const int base = static_cast<int>(std::upper_bound(nd.begin(), nd.end(), x) - nd.begin()) - 1;
  int lo = base - 1;
  const int min_lo = ax.bessel ? -m : 0;
  lo = std::clamp(lo, min_lo, m - 4);
  std::array<double, 4> xs;
  for (int k = 0; k < 4; ++k) {
    xs[static_cast<std::size_t>(k)] = ext_node(lo + k);
    const int i = lo + k;
    idx[static_cast<std::size_t>(k)] = static_cast<std::size_t>(i >= 0 ? i : -i - 1);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    double c = 1.0;
    for (std::size_t l = 0; l < 4; ++l) {
      if (l != k) c *= (x - xs[l]) / (xs[k] - xs[l]);
    }
    coef[k] = c;
  }
  return true;
}

}  // namespace

GridAxis composite_axis(std::vector<double> edges, int order, double a, bool bessel) {
  if (edges.size() < 2) throw ShapeError("composite_axis: need at least one panel");
  if (order < 1) throw ShapeError("composite_axis: order must be positive");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw ShapeError("composite_axis: edges must increase strictly");
  }
  if (bessel && edges.front() != 0.0) throw ShapeError("composite_axis: Bessel axis must start at 0");
  if (!bessel && a != 0.0) throw ShapeError("composite_axis: Laplace axis carries no weight");
  GridAxis ax;
  ax.a = a;
  ax.bessel = bessel;
  ax.extent = bessel ? edges.back() : std::max(std::abs(edges.front()), std::abs(edges.back()));
  const auto gl = gauss_legendre(order);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double lo = edges[p];
    const double h = 0.5 * (edges[p + 1] - lo);
    if (bessel && p == 0 && a > 0.0) {
      const auto gj = gauss_jacobi(order, 0.0, a);
      for (std::size_t i = 0; i < gj->size(); ++i) {
        ax.nodes.push_back(h * (1.0 + gj->nodes[i]));
        ax.weights.push_back(gj->weights[i] * std::pow(h, a + 1.0));
      }
      continue;
    }
    for (std::size_t i = 0; i < gl->size(); ++i) {
      const double x = lo + h * (1.0 + gl->nodes[i]);
      ax.nodes.push_back(x);
      ax.weights.push_back(gl->weights[i] * h * (bessel ? std::pow(x, a) : 1.0));
    }
  }
  check_axis(ax);
  return ax;
}

GridAxis graded_axis(double X, double h0, double ratio, int order, double a, bool bessel) {
  if (!(X > 0.0 && h0 > 0.0 && ratio >= 1.0)) throw ShapeError("graded_axis: need X > 0, h0 > 0, ratio >= 1");
  std::vector<double> half{0.0};
  double h = h0;
  while (half.back() < X) {
    const double next = half.back() + h;
    if (next >= X || X - next < 0.25 * h * ratio) {
      half.push_back(X);
      break;
    }
    half.push_back(next);
    h *= ratio;
  }
  if (bessel) return composite_axis(std::move(half), order, a, true);
  std::vector<double> edges;
  for (auto it = half.rbegin(); it != half.rend(); ++it) edges.push_back(-*it);
  edges.insert(edges.end(), half.begin() + 1, half.end());
  return composite_axis(std::move(edges), order, 0.0, false);
}

GridAxis graded_axis_for(const BesselIndex& index, int k, double X, double h0, double ratio, int order) {
  return graded_axis(X, h0, ratio, order, index.a(k), index.is_bessel());
}

GridFunction::GridFunction(BesselIndex index, std::vector<GridAxis> axes, std::vector<double> values)
    : index_(std::move(index)), axes_(std::move(axes)), values_(std::move(values)) {
  if (static_cast<int>(axes_.size()) != index_.n()) throw ShapeError("GridFunction: one axis per dimension");
  std::size_t total = 1;
  strides_.assign(axes_.size(), 1);
  for (std::size_t k = axes_.size(); k-- > 0;) {
    const auto& ax = axes_[k];
    check_axis(ax);
    if (ax.bessel != index_.is_bessel() || ax.a != index_.a(static_cast<int>(k))) {
      throw ShapeError("GridFunction: axis weight does not match the index");
    }
    strides_[k] = total;
    total *= ax.nodes.size();
  }
  if (values_.empty()) values_.assign(total, 0.0);
  if (values_.size() != total) throw ShapeError("GridFunction: value count does not match the grid");
}

GridFunction GridFunction::sample(BesselIndex index, std::vector<GridAxis> axes, const PointFunction& f,
                                  bool keep_callable) {
  GridFunction g(std::move(index), std::move(axes), {});
  const auto count = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto x = g.node(static_cast<std::size_t>(i));
    g.values_[static_cast<std::size_t>(i)] = f(x);
  }
  if (keep_callable) g.callable_ = f;
  return g;
}

GridFunction GridFunction::sample_radial(BesselIndex index, std::vector<GridAxis> axes, const RadialFunction& f,
                                         bool keep_callable) {
  PointFunction pf = [f](std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return f(std::sqrt(s));
  };
  return sample(std::move(index), std::move(axes), pf, keep_callable);
}

double GridFunction::weight(std::size_t i) const {
  double w = 1.0;
  for (std::size_t k = 0; k < axes_.size(); ++k) w *= axes_[k].weights[(i / strides_[k]) % axes_[k].nodes.size()];
  return w;
}

std::vector<double> GridFunction::node(std::size_t i) const {
  std::vector<double> x(axes_.size());
  for (std::size_t k = 0; k < axes_.size(); ++k) x[k] = axes_[k].nodes[(i / strides_[k]) % axes_[k].nodes.size()];
  return x;
}

double GridFunction::operator()(std::span<const double> x) const {
  if (callable_) return callable_(x);
  return interpolate(x);
}

double GridFunction::interpolate(std::span<const double> x) const {
  const std::size_t n = axes_.size();
  if (x.size() != n) throw ShapeError("GridFunction: point dimension mismatch");
  std::vector<std::array<std::size_t, 4>> idx(n);
  std::vector<std::array<double, 4>> coef(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!stencil(axes_[k], x[k], idx[k], coef[k])) return 0.0;
  }
  double sum = 0.0;
  std::size_t combos = 1;
  for (std::size_t k = 0; k < n; ++k) combos *= 4;
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t flat = 0;
    double w = 1.0;
    std::size_t rest = c;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t s = rest % 4;
      rest /= 4;
      flat += idx[k][s] * strides_[k];
      w *= coef[k][s];
    }
    sum += w * values_[flat];
  }
  return sum;
}

bool GridFunction::compatible(const GridFunction& other) const {
  return index_ == other.index_ && axes_ == other.axes_;
}

SpaceTimeGridFunction::SpaceTimeGridFunction(BesselIndex index, std::vector<GridAxis> axes, std::vector<double> times,
                                             std::vector<double> time_weights)
    : index_(std::move(index)), axes_(std::move(axes)), times_(std::move(times)), time_weights_(std::move(time_weights)) {
  if (times_.empty() || times_.size() != time_weights_.size()) {
    throw ShapeError("SpaceTimeGridFunction: need matching, nonempty time nodes and weights");
  }
  for (std::size_t j = 0; j < times_.size(); ++j) {
    if (!(times_[j] > 0.0) || (j > 0 && !(times_[j] > times_[j - 1]))) {
      throw ShapeError("SpaceTimeGridFunction: time nodes must be positive and increasing");
    }
    if (!(time_weights_[j] > 0.0)) throw ShapeError("SpaceTimeGridFunction: time weights must be positive");
  }
  slices_.reserve(times_.size());
  for (std::size_t j = 0; j < times_.size(); ++j) slices_.emplace_back(index_, axes_, std::vector<double>{});
}

SpaceTimeGridFunction SpaceTimeGridFunction::sample(BesselIndex index, std::vector<GridAxis> axes,
                                                    std::vector<double> times, std::vector<double> time_weights,
                                                    const SpaceTimeFunction& f, bool keep_callable) {
  SpaceTimeGridFunction u(std::move(index), std::move(axes), std::move(times), std::move(time_weights));
  for (std::size_t j = 0; j < u.times_.size(); ++j) {
    const double t = u.times_[j];
    u.slices_[j] = GridFunction::sample(u.index_, u.axes_, [&f, t](std::span<const double> x) { return f(x, t); }, false);
  }
  if (keep_callable) u.callable_ = f;
  return u;
}

double SpaceTimeGridFunction::operator()(std::span<const double> x, double t) const {
  if (callable_) return callable_(x, t);
  if (!(t > 0.0) || t > times_.back()) return 0.0;
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const auto j = static_cast<std::size_t>(it - times_.begin());
  if (j == 0) return slices_[0].interpolate(x);
  if (*it == t) return slices_[j].interpolate(x);
  const double lam = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
  return (1.0 - lam) * slices_[j - 1].interpolate(x) + lam * slices_[j].interpolate(x);
}

bool SpaceTimeGridFunction::compatible(const SpaceTimeGridFunction& other) const {
  return index_ == other.index_ && axes_ == other.axes_ && times_ == other.times_ &&
         time_weights_ == other.time_weights_;
}

double bessel_translate_1d(double alpha, const RadialFunction& f, double x, double t, const TranslateOptions& opts) {
  if (alpha == -0.5) {
    if (!opts.allow_half_order) {
      throw UnsupportedCaseError("bessel_translate_1d: alpha = -1/2 only arises in a mixed index");
    }
    return 0.5 * (f(x + t) + f(std::abs(x - t)));
  }
  if (!(alpha > -0.5)) throw DomainError("bessel_translate_1d: alpha must exceed -1/2");
  x = std::abs(x);
  t = std::abs(t);
  if (x == 0.0 || t == 0.0) return f(x + t);
  const double b = alpha - 0.5;
  const double d2 = (x - t) * (x - t);
  const double xt2 = 2.0 * x * t;
  auto apply = [&](int n, double& l1) {
    const auto rule = gauss_jacobi(n, b, b);
    double sum = 0.0;
    double wsum = 0.0;
    l1 = 0.0;
    for (std::size_t i = 0; i < rule->size(); ++i) {
      const double v = f(std::sqrt(d2 + xt2 * (1.0 - rule->nodes[i])));
      sum += rule->weights[i] * v;
      l1 += rule->weights[i] * std::abs(v);
      wsum += rule->weights[i];
    }
    l1 /= wsum;
    return sum / wsum;
  };
  double l1 = 0.0;
  double prev = apply(opts.initial_nodes, l1);
  for (int n = 2 * opts.initial_nodes; n <= opts.max_nodes; n *= 2) {
    const double cur = apply(n, l1);
    if (std::abs(cur - prev) <= opts.tol * l1) return cur;
    prev = cur;
  }
  return prev;
}

namespace {

double translate_axes(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                      std::span<const double> y, std::size_t k, std::vector<double>& z, const TranslateOptions& opts) {
  if (k == z.size()) return f(z);
  if (x[k] == 0.0 || y[k] == 0.0) {
    z[k] = std::abs(x[k]) + std::abs(y[k]);
    return translate_axes(index, f, x, y, k + 1, z, opts);
  }
  return bessel_translate_1d(
      index.alpha(static_cast<int>(k)),
      [&](double zk) {
        z[k] = zk;
        return translate_axes(index, f, x, y, k + 1, z, opts);
      },
      x[k], y[k], opts);
}

// Nonzero source samples y_j with w_j g(y_j).
struct Source {
  std::vector<std::vector<double>> nodes;
  std::vector<double> mass;
};

Source collect_source(const GridFunction& g) {
  Source src;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g.value(j) == 0.0) continue;
    src.nodes.push_back(g.node(j));
    src.mass.push_back(g.weight(j) * g.value(j));
  }
  return src;
}

// (f *_a g)(x) for one output point.
double convolve_point(const BesselIndex& index, const PointFunction& f, const Source& src, std::span<const double> x,
                      const TranslateOptions& opts) {
  const std::size_t n = x.size();
  std::vector<double> shifted(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < src.mass.size(); ++j) {
    const auto& y = src.nodes[j];
    double tf = 0.0;
    if (index.is_laplace()) {
      for (std::size_t k = 0; k < n; ++k) shifted[k] = x[k] - y[k];
      tf = f(shifted);
    } else if (n == 1) {
      tf = bessel_translate_1d(index.alpha(0), [&](double z) { return f(std::span<const double>(&z, 1)); }, y[0], x[0],
                               opts);
    } else {
      tf = translate_nd(index, f, y, x, opts);
    }
    sum += src.mass[j] * tf;
  }
  return sum;
}

PointFunction evaluator(const GridFunction& f) {
  return [&f](std::span<const double> p) { return f(p); };
}

void check_convolution_inputs(const BesselIndex& index, const GridFunction& f, const GridFunction& g) {
  if (!f.compatible(g)) throw ShapeError("convolution: grids differ");
  if (!(f.index() == index)) throw ShapeError("convolution: grid index differs from the requested index");
}

}  // namespace

double translate_nd(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                    std::span<const double> y, const TranslateOptions& opts) {
  const auto n = static_cast<std::size_t>(index.n());
  if (x.size() != n || y.size() != n) throw ShapeError("translate_nd: point dimension mismatch");
  std::vector<double> z(n);
  if (index.is_laplace()) {
    for (std::size_t k = 0; k < n; ++k) z[k] = x[k] - y[k];
    return f(z);
  }
  return translate_axes(index, f, x, y, 0, z, opts);
}

GridFunction bessel_convolve(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                             const TranslateOptions& opts) {
  check_convolution_inputs(index, f, g);
  GridFunction out(index, g.axes(), {});
  const Source src = collect_source(g);
  const PointFunction fe = evaluator(f);
  const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto x = out.node(static_cast<std::size_t>(i));
    out.values()[static_cast<std::size_t>(i)] = convolve_point(index, fe, src, x, opts);
  }
  return out;
}

GridFunction bessel_convolve_reference(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                                       const TranslateOptions& opts) {
  check_convolution_inputs(index, f, g);
  GridFunction out(index, g.axes(), {});
  const Source src = collect_source(g);
  const PointFunction fe = evaluator(f);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = convolve_point(index, fe, src, out.node(i), opts);
  return out;
}

std::vector<double> bessel_convolve_at(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                                       const std::vector<std::vector<double>>& points, const TranslateOptions& opts) {
  check_convolution_inputs(index, f, g);
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != index.n()) throw ShapeError("bessel_convolve_at: point dimension mismatch");
  }
  std::vector<double> out(points.size());
  const Source src = collect_source(g);
  const PointFunction fe = evaluator(f);
  const auto count = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = convolve_point(index, fe, src, points[static_cast<std::size_t>(i)], opts);
  }
  return out;
}

SpaceTimeGridFunction mixed_convolve(const BesselIndex& index, const SpaceTimeGridFunction& f,
                                     const SpaceTimeGridFunction& g, const TranslateOptions& opts) {
  if (!f.compatible(g)) throw ShapeError("mixed_convolve: grids differ");
  if (!(f.index() == index)) throw ShapeError("mixed_convolve: grid index differs from the requested index");
  SpaceTimeGridFunction out(index, f.axes(), f.times(), f.time_weights());
  const auto& times = f.times();
  std::vector<Source> sources;
  for (std::size_t j = 0; j < times.size(); ++j) sources.push_back(collect_source(g.slice(j)));
  for (std::size_t i = 0; i < times.size(); ++i) {
    GridFunction& slice = out.slice(i);
    std::vector<PointFunction> lagged;
    for (std::size_t j = 0; j < i; ++j) {
      const double lag = times[i] - times[j];
      lagged.push_back([&f, lag](std::span<const double> z) { return f(z, lag); });
    }
    const auto count = static_cast<std::ptrdiff_t>(slice.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
      const auto x = slice.node(static_cast<std::size_t>(p));
      double sum = 0.0;
      for (std::size_t j = 0; j < i; ++j) sum += f.time_weights()[j] * convolve_point(index, lagged[j], sources[j], x, opts);
      slice.values()[static_cast<std::size_t>(p)] = sum;
    }
  }
  return out;
}

}  // namespace frackap
