#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "frackap/kernels.hpp"
#include "frackap/translate.hpp"

namespace frackap {

enum class CapacityVariant { C, N, Z2 };

std::string to_string(CapacityVariant v);
// Accepts "C", "N", "Z2".
CapacityVariant parse_variant(const std::string& s);

struct Atom {
  std::vector<double> y;
  double tau = 0.0;

  bool operator==(const Atom& other) const = default;
};

// Space-time box [lo, hi] x [tau_lo, tau_hi] sampled at res[k] points per
// axis and tau_res times (endpoints included; one point means the midpoint).
struct BoxSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  std::vector<int> res;
  int tau_res = 1;
};

struct CompactSetSpec {
  std::vector<Atom> atoms;
  std::optional<BoxSpec> box;

  static CompactSetSpec from_atoms(std::vector<Atom> atoms);
  static CompactSetSpec from_box(BoxSpec box);
  // Box sets with every axis spacing divided by factor, keeping the old
  // points (m points become (m - 1) * factor + 1); atom lists unchanged.
  CompactSetSpec refined(int factor) const;
  // tau > 0, matching dimension, nonnegative coordinates on Bessel axes.
  // Repeated atoms are allowed; their columns coincide.
  void validate(const BesselIndex& index) const;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;
  std::vector<double> weights;

  double total_mass() const;
};

// [0, X_max] (Bessel) or [-X_max, X_max] per axis, times in (0, T_max].
// nodes_x and nodes_t are node budgets per axis and for time.
struct NormGrid {
  double X_max = 20.0;
  double T_max = 4.0;
  int nodes_x = 400;
  int nodes_t = 200;
  // The first time panel after each atom has length layer_fraction * T_max.
  // That layer is integrated through the time scaling of the kernel rather
  // than on the grid.
  double layer_fraction = 1e-3;
};

struct SolverConfig {
  int max_iter = 5000;
  // On the relative Frank-Wolfe gap.
  double gap_tol = 1e-4;
  bool line_search = true;
  bool away_steps = true;
  // If nonempty, the atoms at these positions are solved as well and the
  // result must not exceed the full capacity.
  std::vector<std::size_t> monotone_subset;
};

// Columns of the discretised constraint operator w -> sum_i w_i column_i on a
// shared space-time grid. For Z2 the "space" axis is the spectral variable rho.
struct ColumnFamily {
  KernelSpec spec;
  CapacityVariant variant = CapacityVariant::C;
  std::vector<Atom> atoms;
  std::vector<GridAxis> axes;
  std::vector<double> times;
  std::vector<double> time_weights;
  // Product of spatial and time weights per node; node index = time * space_size + space.
  std::vector<double> weights;
  std::size_t space_size = 0;
  std::vector<std::vector<double>> columns;
  // Atoms with identical (y, tau) share one layer group.
  std::vector<std::size_t> layer_group;
  double layer_length = 0.0;
  // True when the layer of each atom is the norm of the untranslated kernel
  // (Laplace atoms and atoms at the origin).
  std::vector<bool> layer_exact;

  std::size_t size() const noexcept { return columns.size(); }
  // Column i as a space-time grid function (C and N only).
  SpaceTimeGridFunction column_function(std::size_t i) const;
};

ColumnFamily build_columns(const KernelSpec& spec, const CompactSetSpec& set, CapacityVariant variant,
                           const NormGrid& grid);

// int_0^delta ||K_s||_p^p ds for the untranslated kernel of the variant
// (C: P, N: the mollified kernel, Z2: 0). Infinite for C when d(p-1)/gamma >= 1.
double layer_power(const KernelSpec& spec, CapacityVariant variant, double p, double delta);

// ||K_s||_p^p for the untranslated kernel at one time.
double kernel_power(const KernelSpec& spec, CapacityVariant variant, double p, double s);

// ||sum_i w_i column_i||_{p,A} including the layers.
double constraint_norm(const ColumnFamily& family, const std::vector<double>& w, double p);

struct CapacityResult {
  // (total mass)^{p'} of the optimal measure, which has constraint norm 1.
  double capacity_value = 0.0;
  double raw_mass = 0.0;
  DiscreteMeasure optimal_measure;
  // Relative Frank-Wolfe gap at the returned iterate.
  double duality_gap = 0.0;
  // Estimated change of the constraint norm of the optimal measure from the
  // parts of space-time outside the grid (may be infinite).
  double norm_truncation_error = 0.0;
  CapacityVariant variant = CapacityVariant::C;
  int iterations = 0;
  // Minimum of the constraint norm over probability weights.
  double min_norm = 0.0;
  double subset_capacity = 0.0;
};

CapacityResult solve_capacity(const ColumnFamily& family, double p, const SolverConfig& cfg = {});
CapacityResult solve_capacity(const KernelSpec& spec, const CompactSetSpec& set, double p, CapacityVariant variant,
                              const NormGrid& grid, const SolverConfig& cfg = {});

enum class Refinement { Grid, TimeExtent, Repeat };
enum class TrendClass { BoundedBelow, Decaying, Inconclusive };
std::string to_string(TrendClass c);

struct TrendReport {
  std::vector<double> parameters;
  std::vector<double> capacities;
  std::vector<CapacityResult> results;
  // Fitted d log(capacity) / d log(parameter), sign flipped so decay is positive.
  double rate = 0.0;
  TrendClass classification = TrendClass::Inconclusive;
};

// Grid: nodes and box resolution doubled per level (parameter 2^l).
// TimeExtent: T_max doubled per level (parameter T_max). Repeat: unchanged.
TrendReport refine_and_trend(const KernelSpec& spec, const CompactSetSpec& set, double p, CapacityVariant variant,
                             const NormGrid& grid, int levels, Refinement kind, const SolverConfig& cfg = {});

// Decay rate of the singleton capacity as T_max grows: (1 - q) / (p - 1)
// with q = d(p-1)/gamma < 1.
double predicted_time_decay_rate(const KernelSpec& spec, double p);

}  // namespace frackap
