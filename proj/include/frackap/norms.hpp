#pragma once

#include <optional>

#include "frackap/operators.hpp"
#include "frackap/translate.hpp"

namespace frackap {

struct NormReport {
  double value = 0.0;
  double quadrature_error_estimate = 0.0;
  double truncation_tail_estimate = 0.0;
};

// (int |f|^p x^a dx)^{1/p} with the grid weights. The quadrature estimate is
// the distance to the trapezoid rule on the same nodes (pessimistic); the tail
// estimate is the share of nodes beyond 90% of the extent on some axis.
NormReport lp_norm_space(const GridFunction& f, double p, const BesselIndex& index);

// Space-time version with the time weights of f. If time_decay is given the
// slice integrals are assumed to fall off like t^{-time_decay} beyond the last
// time node and that tail is estimated analytically (infinite when
// time_decay <= 1).
NormReport lp_norm_spacetime(const SpaceTimeGridFunction& f, double p, const BesselIndex& index,
                             std::optional<double> time_decay = std::nullopt);

// (sum_{k<=m} ||Delta_a^k f||_p^p)^{1/p}. Needs the callable back-end. Each
// application of Delta_a is one Richardson-extrapolated central difference;
// the step grows by 10 per extra level to keep roundoff in check. Bessel
// axes are treated as even, so stencils at 0 reflect.
NormReport sobolev_norm(const GridFunction& f, int m, double p, const BesselIndex& index,
                        const OperatorConfig& cfg = {});

// ||f||_{p,a,nu} for f = G_{a,nu} *_a g, which by definition is ||g||_{p,a}.
NormReport potential_norm(const GridFunction& g, double p, double nu, const BesselIndex& index);

// p = 2 dual norm (int int |u_t^(rho)|^2 / (1 + rho^4) dmu(rho) dt)^{1/2} for
// slices radial in x. dmu is the Plancherel measure, so the value never
// exceeds lp_norm_spacetime(u, 2).
NormReport dual_sobolev_norm_p2(const SpaceTimeGridFunction& u, const BesselIndex& index);

}  // namespace frackap
