#pragma once

#include <functional>
#include <optional>

#include "frackap/profile_table.hpp"
#include "frackap/special.hpp"

namespace frackap {

// How a radial profile behaves as r -> infinity. Governs truncation of the
// transform integrals.
struct DecayHint {
  enum class Kind { exponential, power, compact };
  Kind kind = Kind::exponential;
  // exponential: rate lambda in exp(-lambda r^beta); power: exponent q in r^q
  // (negative); compact: support radius.
  double value = 1.0;
  // beta of the exponential kind; unused otherwise.
  double shape = 1.0;

  static DecayHint exponential(double rate, double beta = 1.0) { return {Kind::exponential, rate, beta}; }
  static DecayHint power(double exponent) { return {Kind::power, exponent, 1.0}; }
  static DecayHint compact(double radius) { return {Kind::compact, radius, 1.0}; }

  // Radius beyond which phi(r) r^{2nu+1} is below eps relative to its bulk,
  // or infinity for power decay.
  double truncation_radius(double nu, double eps = 1e-16) const;
  // Length scale over which the profile varies.
  double scale() const;
  // Hinted envelope shape, 1 at r = 0.
  double envelope(double r) const;
};

// A function of one variable r = |x| on [0, inf).
class RadialProfile {
 public:
  RadialProfile(std::function<double(double)> eval, DecayHint decay);

  // Profile backed by a sample table (local Lagrange interpolation); zero
  // beyond the last node unless the hint says otherwise.
  static RadialProfile from_samples(std::vector<double> nodes, std::vector<double> values, DecayHint decay,
                                    int order = 4);

  double operator()(double r) const { return eval_(r); }
  const DecayHint& decay() const noexcept { return decay_; }
  const std::optional<LocalLagrange>& samples() const noexcept { return samples_; }

 private:
  std::function<double(double)> eval_;
  DecayHint decay_;
  std::optional<LocalLagrange> samples_;
};

// True when |phi(2R)| does not exceed 10x the hinted envelope fitted on [0, R].
bool decay_hint_consistent(const RadialProfile& profile, double nu);

struct HankelOptions {
  double rel_tol = 1e-12;
  // Panels beyond this count abort with NonConvergenceError (power decay) or
  // fall back to the truncated sum (finite support).
  int max_panels = 400000;
  bool accelerate = true;
};

// int_0^inf phi(r) j_nu(rho r) r^{2nu+1} dr
double hankel_1d(double nu, const RadialProfile& profile, double rho, const HankelOptions& opts = {});

// Fourier (a = 0) or Hankel (a > 0) transform of the radial function phi(|x|),
// as a function of rho = |xi|.
double radial_transform(const BesselIndex& index, const RadialProfile& profile, double rho,
                        const HankelOptions& opts = {});

// Constant in front of the inverse transform: (2 pi)^{-n} for a = 0 and
// 2^{n-|a|} / prod Gamma(alpha_i+1)^2 for a > 0.
double inversion_constant(const BesselIndex& index);

double inverse_radial_transform(const BesselIndex& index, const RadialProfile& spectral_profile, double r,
                                const HankelOptions& opts = {});

}  // namespace frackap
