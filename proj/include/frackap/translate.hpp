#pragma once

#include <functional>
#include <span>
#include <vector>

#include "frackap/special.hpp"

namespace frackap {

using PointFunction = std::function<double(std::span<const double>)>;
using RadialFunction = std::function<double(double)>;

// Nodes and weights along one axis. Bessel axes live on [0, X] and fold the
// factor x^a into the weights; Laplace axes live on [-X, X].
struct GridAxis {
  std::vector<double> nodes;
  std::vector<double> weights;
  double a = 0.0;
  bool bessel = false;
  // X: the axis covers [0, X] or [-X, X].
  double extent = 0.0;

  bool operator==(const GridAxis& other) const = default;
};

// Composite Gauss rule on the panels given by edges (strictly increasing).
// On a Bessel axis edges must start at 0 and the first panel uses Gauss-Jacobi
// for the weight x^a, so constants integrate exactly.
GridAxis composite_axis(std::vector<double> edges, int order, double a, bool bessel);

// Panels of width h0 * ratio^k from the origin (both directions on a Laplace
// axis) until X is reached. ratio = 1 gives uniform panels.
GridAxis graded_axis(double X, double h0, double ratio, int order, double a, bool bessel);

// Axis k of a grid matching index (Bessel axes for a Bessel index).
GridAxis graded_axis_for(const BesselIndex& index, int k, double X, double h0, double ratio, int order);

// Tensor-product grid with sampled values. Off-node evaluation uses the
// callable back-end when one is attached, otherwise tensor cubic
// interpolation (even reflection across 0 on Bessel axes, zero outside).
class GridFunction {
 public:
  GridFunction(BesselIndex index, std::vector<GridAxis> axes, std::vector<double> values);
  static GridFunction sample(BesselIndex index, std::vector<GridAxis> axes, const PointFunction& f,
                             bool keep_callable = true);
  // Radial convenience: f(|x|) on every node.
  static GridFunction sample_radial(BesselIndex index, std::vector<GridAxis> axes, const RadialFunction& f,
                                    bool keep_callable = true);

  const BesselIndex& index() const noexcept { return index_; }
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  const GridAxis& axis(int k) const { return axes_.at(static_cast<std::size_t>(k)); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  double weight(std::size_t i) const;
  std::vector<double> node(std::size_t i) const;

  bool has_callable() const noexcept { return static_cast<bool>(callable_); }
  void attach(PointFunction f) { callable_ = std::move(f); }
  void detach() { callable_ = nullptr; }

  double operator()(std::span<const double> x) const;
  double interpolate(std::span<const double> x) const;

  // Same axes and index.
  bool compatible(const GridFunction& other) const;

 private:
  BesselIndex index_;
  std::vector<GridAxis> axes_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
  PointFunction callable_;
};

// A GridFunction per time node on (0, T]. Off-grid times use the callable
// back-end when present, otherwise linear interpolation between time nodes
// (zero before the first node).
class SpaceTimeGridFunction {
 public:
  using SpaceTimeFunction = std::function<double(std::span<const double>, double)>;

  SpaceTimeGridFunction(BesselIndex index, std::vector<GridAxis> axes, std::vector<double> times,
                        std::vector<double> time_weights);
  static SpaceTimeGridFunction sample(BesselIndex index, std::vector<GridAxis> axes, std::vector<double> times,
                                      std::vector<double> time_weights, const SpaceTimeFunction& f,
                                      bool keep_callable = true);

  const BesselIndex& index() const noexcept { return index_; }
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& time_weights() const noexcept { return time_weights_; }
  std::size_t time_count() const noexcept { return times_.size(); }
  const GridFunction& slice(std::size_t j) const { return slices_.at(j); }
  GridFunction& slice(std::size_t j) { return slices_.at(j); }

  bool has_callable() const noexcept { return static_cast<bool>(callable_); }
  void attach(SpaceTimeFunction f) { callable_ = std::move(f); }
  double operator()(std::span<const double> x, double t) const;

  bool compatible(const SpaceTimeGridFunction& other) const;

 private:
  BesselIndex index_;
  std::vector<GridAxis> axes_;
  std::vector<double> times_;
  std::vector<double> time_weights_;
  std::vector<GridFunction> slices_;
  SpaceTimeFunction callable_;
};

struct TranslateOptions {
  int initial_nodes = 32;
  int max_nodes = 4096;
  double tol = 1e-9;
  // alpha = -1/2 (a_i = 0) uses the two-point rule (f(x+t) + f(|x-t|)) / 2.
  // Off by default: such an axis only occurs inside a mixed index.
  bool allow_half_order = false;
};

// Delsarte translation T^t_alpha f(x), alpha > -1/2.
double bessel_translate_1d(double alpha, const RadialFunction& f, double x, double t,
                           const TranslateOptions& opts = {});

// T^y f(x): axis-by-axis Bessel translation, or f(x - y) in the Laplace case.
double translate_nd(const BesselIndex& index, const PointFunction& f, std::span<const double> x,
                    std::span<const double> y, const TranslateOptions& opts = {});

// (f *_a g) on the common grid: sum_j w_j g(y_j) T^{x} f(y_j). f is evaluated
// through GridFunction::operator(), so attach a callable for off-node
// accuracy. Parallel over output nodes.
GridFunction bessel_convolve(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                             const TranslateOptions& opts = {});
// Same values, computed serially; kept as the reference for tests and benchmarks.
GridFunction bessel_convolve_reference(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                                       const TranslateOptions& opts = {});
// (f *_a g)(x) at arbitrary points (one point per row).
std::vector<double> bessel_convolve_at(const BesselIndex& index, const GridFunction& f, const GridFunction& g,
                                       const std::vector<std::vector<double>>& points,
                                       const TranslateOptions& opts = {});

// (f *_A g)(x, t) = int_0^t int T^x f(y, t - s) g(y, s) y^a dy ds, causal in
// time, on the common space-time grid.
SpaceTimeGridFunction mixed_convolve(const BesselIndex& index, const SpaceTimeGridFunction& f,
                                     const SpaceTimeGridFunction& g, const TranslateOptions& opts = {});

}  // namespace frackap
