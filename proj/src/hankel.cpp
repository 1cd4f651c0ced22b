#include "frackap/hankel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "frackap/errors.hpp"
#include "frackap/quadrature.hpp"

namespace frackap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Highest even column of Wynn's epsilon table over the given partial sums.
double wynn_epsilon(const std::vector<double>& s) {
  std::vector<double> prev(s.size() + 1, 0.0);
  std::vector<double> cur(s);
  double best = s.back();
  for (std::size_t col = 1; cur.size() > 1; ++col) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t k = 0; k + 1 < cur.size(); ++k) {
      const double diff = cur[k + 1] - cur[k];
      if (diff == 0.0 || !std::isfinite(diff)) return best;
      next[k] = prev[k + 1] + 1.0 / diff;
    }
    if (col % 2 == 0) best = next.back();
    prev = std::move(cur);
    cur = std::move(next);
  }
  return best;
}

// Partial sums at Bessel zeros, extrapolated once the block amplitudes settle.
class ZeroBlockSum {
 public:
  ZeroBlockSum(double rel_tol, bool accelerate) : rel_tol_(rel_tol), accelerate_(accelerate) {}

  void add_head(const AdaptiveResult& r) {
    sum_ += r.value;
    l1_ += r.l1;
  }

  // Returns true when the extrapolated value is stable.
  bool add_block(const AdaptiveResult& r) {
    sum_ += r.value;
    l1_ += r.l1;
    blocks_.push_back(std::abs(r.value));
    partial_.push_back(sum_);
    if (!accelerate_ || partial_.size() < 6) return false;
    const std::size_t nb = blocks_.size();
    const bool settled = blocks_[nb - 1] <= blocks_[nb - 2] && blocks_[nb - 2] <= blocks_[nb - 3];
    const std::size_t window = std::min<std::size_t>(partial_.size(), 21);
    std::vector<double> tail(partial_.end() - static_cast<std::ptrdiff_t>(window), partial_.end());
    estimates_.push_back(wynn_epsilon(tail));
    if (!settled || estimates_.size() < 3) return false;
    const std::size_t ne = estimates_.size();
    const double e = estimates_[ne - 1];
    const double tol = std::max(rel_tol_ * std::abs(e), 1e-15 * l1_);
    return std::abs(e - estimates_[ne - 2]) <= tol && std::abs(estimates_[ne - 2] - estimates_[ne - 3]) <= tol;
  }

  double sum() const noexcept { return sum_; }
  double estimate() const { return estimates_.empty() ? sum_ : estimates_.back(); }
  double previous_estimate() const {
    return estimates_.size() < 2 ? std::numeric_limits<double>::quiet_NaN() : estimates_[estimates_.size() - 2];
  }

 private:
  double rel_tol_;
  bool accelerate_;
  double sum_ = 0.0;
  double l1_ = 0.0;
  std::vector<double> blocks_;
  std::vector<double> partial_;
  std::vector<double> estimates_;
};

// Breakpoints s*2^k strictly inside (0, upper), plus 0.
std::vector<double> geometric_points(double scale, double upper) {
  std::vector<double> pts{0.0};
  for (double x = scale / 16.0; x < upper; x *= 2.0) pts.push_back(x);
  pts.push_back(upper);
  return pts;
}

}  // namespace

double DecayHint::scale() const {
  switch (kind) {
    case Kind::exponential: return std::pow(value, -1.0 / shape);
    case Kind::power: return 1.0;
    case Kind::compact: return value;
  }
  return 1.0;
}

double DecayHint::envelope(double r) const {
  switch (kind) {
    case Kind::exponential: return std::exp(-value * std::pow(r, shape));
    case Kind::power: return std::pow(1.0 + r, value);
    case Kind::compact: return r <= value ? 1.0 : 0.0;
  }
  return 0.0;
}

double DecayHint::truncation_radius(double nu, double eps) const {
  switch (kind) {
    case Kind::compact: return value;
    case Kind::power: return kInf;
    case Kind::exponential: {
      // In u = r / scale: u^beta = -ln eps + (2nu+1) ln max(u, 1).
      const double m = 2.0 * nu + 1.0;
      const double base = -std::log(eps);
      double u = std::pow(base, 1.0 / shape);
      for (int i = 0; i < 50; ++i) u = std::pow(base + m * std::log(std::max(u, 1.0)), 1.0 / shape);
      return u * scale();
    }
  }
  return kInf;
}

RadialProfile::RadialProfile(std::function<double(double)> eval, DecayHint decay)
    : eval_(std::move(eval)), decay_(decay) {
  if (!eval_) throw DomainError("RadialProfile: empty evaluator");
  if (!(decay_.value > 0.0) && decay_.kind != DecayHint::Kind::power)
    throw DomainError("RadialProfile: decay rate or support radius must be positive");
  if (decay_.kind == DecayHint::Kind::power && !(decay_.value < 0.0))
    throw DomainError("RadialProfile: power decay exponent must be negative");
  if (decay_.kind == DecayHint::Kind::exponential && !(decay_.shape > 0.0))
    throw DomainError("RadialProfile: exponential decay shape must be positive");
}

RadialProfile RadialProfile::from_samples(std::vector<double> nodes, std::vector<double> values, DecayHint decay,
                                          int order) {
  auto table = LocalLagrange(std::move(nodes), std::move(values), order);
  const double last = table.nodes().back();
  const double last_value = table.values().back();
  auto eval = [table, decay, last, last_value](double r) {
    if (r <= last) return table(r);
    switch (decay.kind) {
      case DecayHint::Kind::compact: return 0.0;
      case DecayHint::Kind::power: return last_value * std::pow(r / last, decay.value);
      case DecayHint::Kind::exponential: {
        const double e = decay.envelope(last);
        return e > 0.0 ? last_value * decay.envelope(r) / e : 0.0;
      }
    }
    return 0.0;
  };
  RadialProfile p(eval, decay);
  p.samples_ = std::move(table);
  return p;
}

bool decay_hint_consistent(const RadialProfile& profile, double nu) {
  const DecayHint& h = profile.decay();
  double R = h.truncation_radius(nu);
  if (!std::isfinite(R)) R = 64.0 * h.scale();
  double amp = 0.0;
  for (int i = 0; i <= 16; ++i) {
    const double r = R * (0.5 + i / 32.0);
    const double e = h.envelope(r);
    if (e > 0.0) amp = std::max(amp, std::abs(profile(r)) / e);
  }
  return std::abs(profile(2.0 * R)) <= 10.0 * amp * h.envelope(2.0 * R);
}

double hankel_1d(double nu, const RadialProfile& profile, double rho, const HankelOptions& opts) {
  if (!(nu >= -0.5)) throw DomainError("hankel_1d: order must satisfy nu >= -1/2");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("hankel_1d: rho must be finite and nonnegative");
  const NormalizedBessel j(nu);
  const double m = 2.0 * nu + 1.0;
  auto integrand = [&](double r) { return profile(r) * std::pow(r, m) * (rho > 0.0 ? j(rho * r) : 1.0); };
  auto panel = [&](double a, double b) { return integrate_adaptive(integrand, a, b, 0.1 * opts.rel_tol); };

  const DecayHint& hint = profile.decay();
  const double R = hint.truncation_radius(nu);
  const double s = hint.scale();
  const double z1 = bessel_zero_estimate(nu, 1);

  if (std::isfinite(R) && rho * R <= z1) {
    const auto pts = geometric_points(s, R);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) sum += panel(pts[i], pts[i + 1]).value;
    return sum;
  }

  if (!std::isfinite(R) && rho == 0.0) {
    const double q = hint.value;
    if (!(q < -m - 1.0)) {
      throw NonConvergenceError("hankel_1d: power decay too slow for the mass integral", kInf, kInf);
    }
    // Doubling panels plus the tail of the hinted power law beyond the last one.
    double sum = 0.0;
    double l1 = 0.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    double prev2 = prev;
    double lo = 0.0;
    double hi = s / 16.0;
    for (int k = 0; k < opts.max_panels && hi < 1e150; ++k, lo = hi, hi *= 2.0) {
      const auto r = panel(lo, hi);
      sum += r.value;
      l1 += r.l1;
      const double total = sum + integrand(hi) * hi / (-q - m - 1.0);
      const double tol = std::max(opts.rel_tol * std::abs(total), 1e-15 * l1);
      if (k > 6 && std::abs(total - prev) <= tol && std::abs(prev - prev2) <= tol) return total;
      prev2 = prev;
      prev = total;
    }
    throw NonConvergenceError("hankel_1d: mass integral did not stabilise", prev, prev2);
  }

  if (!std::isfinite(R) && !(hint.value + nu + 0.5 < 0.0)) {
    throw NonConvergenceError("hankel_1d: power decay too slow for an oscillatory transform", kInf, kInf);
  }

  // Head region up to the first zero, then zero-to-zero blocks.
  ZeroBlockSum acc(opts.rel_tol, opts.accelerate && hint.kind != DecayHint::Kind::compact);
  const double first = std::min(z1 / rho, R);
  const auto head = geometric_points(s, first);
  for (std::size_t i = 0; i + 1 < head.size(); ++i) acc.add_head(panel(head[i], head[i + 1]));
  double lo = first;
  for (int k = 2; lo < R; ++k) {
    if (k > opts.max_panels) {
      if (std::isfinite(R)) break;
      throw NonConvergenceError("hankel_1d: oscillatory tail did not stabilise within the panel budget",
                                acc.estimate(), acc.previous_estimate());
    }
    const double hi = std::min(bessel_zero_estimate(nu, k) / rho, R);
    if (acc.add_block(panel(lo, hi))) return acc.estimate();
    lo = hi;
  }
  return acc.sum();
}

double radial_transform(const BesselIndex& index, const RadialProfile& profile, double rho,
                        const HankelOptions& opts) {
  return sphere_measure(index) * hankel_1d(0.5 * index.d() - 1.0, profile, rho, opts);
}

double inversion_constant(const BesselIndex& index) {
  if (index.is_laplace()) return std::pow(2.0 * std::numbers::pi, -index.n());
  double c = std::pow(2.0, index.n() - index.weight_sum());
  for (int i = 0; i < index.n(); ++i) {
    const double g = gamma_fn(index.alpha(i) + 1.0);
    c /= g * g;
  }
  return c;
}

double inverse_radial_transform(const BesselIndex& index, const RadialProfile& spectral_profile, double r,
                                const HankelOptions& opts) {
  return inversion_constant(index) * radial_transform(index, spectral_profile, r, opts);
}

}  // namespace frackap
