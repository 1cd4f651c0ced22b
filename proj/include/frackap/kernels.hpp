#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "frackap/hankel.hpp"
#include "frackap/special.hpp"

namespace frackap {

// Spectral profile rho -> exp(-t rho^gamma).
RadialProfile heat_multiplier(double gamma, double t);

// P(r, t) as the inverse transform of exp(-t |xi|^gamma). Ground truth for
// everything else in this header.
double P_quadrature(const KernelSpec& spec, double r, double t, const HankelOptions& opts = {});

struct SeriesValue {
  double value = 0.0;
  bool converged = false;
  int terms = 0;
};

// Large-|x| expansion for gamma < 1, small-|x| expansion for gamma > 1, and the
// closed form t / (t^2 + r^2)^{(d+1)/2} at gamma = 1, each scaled by a
// constant fitted to P_quadrature once per spec. Outside the working region
// (t / r^gamma <= 1/2, resp. r t^{-1/gamma} <= 2) converged is false.
SeriesValue P_series(const KernelSpec& spec, double r, double t);

// The fitted constant and the point it was fitted at.
struct SeriesCalibration {
  double constant = 0.0;
  double r = 0.0;
  double t = 0.0;
};
SeriesCalibration series_calibration(const KernelSpec& spec);

// Unscaled large-r expansion sum_k (-1)^{k+1} c_k t^k r^{-d-gamma k}, where
// c_k = Gamma(1+gamma k/2) Gamma((d+gamma k)/2) 2^{gamma k} sin(pi gamma k/2) / k!.
// Convergent for gamma < 1 (and gamma = 1, t < r); for gamma > 1 it is
// asymptotic and summed up to its smallest term. If mass is non-null it
// receives the matching tail integral int_r^inf (...) s^{d-1} ds.
double large_r_shape(double gamma, double d, double r, double t, double* mass = nullptr);

// P(., 1) tabulated on a grid uniform in asinh(s / s0) over [0, R_table], with
// s0 the curvature scale of the peak, interpolated in log P; beyond R_table
// the large-r expansion continues from the last node.
class KernelTable {
 public:
  explicit KernelTable(KernelSpec spec, int nodes = 512);

  const KernelSpec& spec() const noexcept { return spec_; }
  double r_max() const noexcept { return nodes_.back(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  // Worst relative deviation from P_quadrature at off-node spot checks; NaN
  // for imported tables.
  double accuracy() const noexcept { return accuracy_; }
  // Exponent of the power-law tail, d + gamma.
  double tail_exponent() const noexcept { return spec_.d() + spec_.gamma(); }

  // P(s, 1).
  double base(double s) const;
  // int_R^inf P(s, 1) s^{d-1} ds for R >= r_max().
  double tail_mass(double R) const;

  void write(std::ostream& os) const;
  // Rejects any header other than frackap-table v1.
  static KernelTable read(std::istream& is);

  // Copy with every tabulated value multiplied by factor (fault injection).
  KernelTable with_scaled_values(double factor) const;

 private:
  KernelTable(KernelSpec spec, std::vector<double> nodes, std::vector<double> values, double accuracy);
  void finish();

  KernelSpec spec_;
  std::vector<double> nodes_;
  std::vector<double> values_;
  LocalLagrange log_interp_;
  double scale_ = 1.0;
  double tail_scale_ = 0.0;
  double accuracy_ = 0.0;
};

// Process-wide table per spec, built on first use. seed_table_cache installs a
// table read from disk instead.
std::shared_ptr<const KernelTable> cached_table(const KernelSpec& spec);
void seed_table_cache(KernelTable table);
// Every table currently cached, ordered by (gamma, a).
std::vector<std::shared_ptr<const KernelTable>> cached_tables();

// P(r, t) = t^{-d/gamma} P(r t^{-1/gamma}, 1) from the table.
double P_eval(const KernelTable& table, double r, double t);

// Bessel potential kernel G_{a,nu}(r), r > 0.
double G_kernel(const BesselIndex& index, double nu, double r);

// Radial profile of P_t *_a G, where G has multiplier exactly (1+rho^2)^{-1}.
// Sampled once on construction.
RadialProfile mollified_profile(const KernelSpec& spec, double t);

// (a_1, ..., a_i + 2, ..., a_n); axis i counts from 1.
BesselIndex shift_index(const BesselIndex& index, int i);

}  // namespace frackap
