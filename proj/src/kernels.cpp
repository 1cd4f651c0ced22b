#include "frackap/kernels.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "frackap/errors.hpp"

namespace frackap {

namespace {

constexpr double kPi = std::numbers::pi;

void require_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("kernel: t must be positive and finite");
}

// Curvature scale of P(., 1) at the origin: <rho^2>^{-1/2} under the weight
// exp(-rho^gamma) rho^{d-1}, capped at 1. Small gamma makes the peak sharp.
double table_scale(const KernelSpec& spec) {
  const double g = spec.gamma();
  const double d = spec.d();
  const double m2 = std::exp(std::lgamma((d + 2.0) / g) - std::lgamma(d / g));
  return std::min(1.0, 1.0 / std::sqrt(m2));
}

double series_reference_radius(double gamma) { return gamma < 1.0 ? std::pow(4.0, 1.0 / gamma) : 1.0; }

struct Partial {
  double sum = 0.0;
  bool converged = false;
  int terms = 0;
};

// Tracks the stopping rule shared by both expansions: three successive partial
// sums within 1e-12, term cap 200, and the cancellation guard.
class SeriesAccumulator {
 public:
  void add(double term, double magnitude) {
    sum_ += term;
    ++terms_;
    max_term_ = std::max(max_term_, magnitude);
    if (magnitude <= 1e-12 * std::abs(sum_)) {
      ++quiet_;
    } else {
      quiet_ = 0;
    }
  }
  bool done() const { return quiet_ >= 2 || terms_ >= 200; }
  Partial result() const {
    const bool ok = quiet_ >= 2 && max_term_ <= 1e15 * std::abs(sum_) && std::isfinite(sum_);
    return {sum_, ok, terms_};
  }

 private:
  double sum_ = 0.0;
  double max_term_ = 0.0;
  int terms_ = 0;
  int quiet_ = 0;
};

// Large-r expansion without the t / r^{d+gamma} prefactor, in x = t / r^gamma.
Partial mind_sum(double gamma, double d, double x) {
  SeriesAccumulator acc;
  for (int k = 1; !acc.done(); ++k) {
    const double gk = gamma * k;
    const double log_mag = std::lgamma(1.0 + 0.5 * gk) + std::lgamma(0.5 * (d + gk)) + gk * std::numbers::ln2 -
                           std::lgamma(k + 1.0) + (k - 1) * std::log(x);
    const double mag = std::exp(log_mag);
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    acc.add(sign * mag * std::sin(0.5 * kPi * gk), mag);
  }
  return acc.result();
}

// Small-r expansion without the t^{-d/gamma} prefactor, in y = r t^{-1/gamma}.
Partial nagy_sum(double gamma, double d, double y) {
  SeriesAccumulator acc;
  const double ly = y > 0.0 ? std::log(y) : -std::numeric_limits<double>::infinity();
  for (int l = 0; !acc.done(); ++l) {
    double mag = 1.0;
    if (l > 0 || y > 0.0) {
      mag = std::exp(std::lgamma((2.0 * l + d) / gamma) - std::lgamma(l + 1.0) - std::lgamma(l + 0.5 * d) -
                     l * std::log(4.0) + 2.0 * l * ly);
    } else {
      mag = std::exp(std::lgamma(d / gamma) - std::lgamma(0.5 * d));
    }
    acc.add((l % 2 == 0 ? 1.0 : -1.0) * mag, mag);
    if (y == 0.0) break;
  }
  auto r = acc.result();
  if (y == 0.0) r.converged = true;
  return r;
}

// Shape (no constant) of the branch selected by gamma.
Partial series_shape(double gamma, double d, double r, double t) {
  if (gamma == 1.0) return {t / std::pow(t * t + r * r, 0.5 * (d + 1.0)), true, 1};
  if (gamma < 1.0) {
    auto p = mind_sum(gamma, d, t / std::pow(r, gamma));
    p.sum *= t / std::pow(r, d + gamma);
    return p;
  }
  auto p = nagy_sum(gamma, d, r * std::pow(t, -1.0 / gamma));
  p.sum *= std::pow(t, -d / gamma);
  return p;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("kernel table: cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

RadialProfile heat_multiplier(double gamma, double t) {
  return RadialProfile([gamma, t](double rho) { return std::exp(-t * std::pow(rho, gamma)); },
                       DecayHint::exponential(t, gamma));
}

double P_quadrature(const KernelSpec& spec, double r, double t, const HankelOptions& opts) {
  require_time(t);
  if (!(r >= 0.0)) throw DomainError("P_quadrature: r must be nonnegative");
  return inverse_radial_transform(spec.index(), heat_multiplier(spec.gamma(), t), r, opts);
}

SeriesCalibration series_calibration(const KernelSpec& spec) {
  static std::mutex mu;
  static std::map<std::pair<double, std::vector<double>>, SeriesCalibration> cache;
  const auto a = spec.index().a();
  const auto key = std::make_pair(spec.gamma(), std::vector<double>(a.begin(), a.end()));
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  SeriesCalibration c;
  c.r = series_reference_radius(spec.gamma());
  c.t = 1.0;
  c.constant = P_quadrature(spec, c.r, c.t) / series_shape(spec.gamma(), spec.d(), c.r, c.t).sum;
  std::lock_guard lock(mu);
  cache.emplace(key, c);
  return c;
}

SeriesValue P_series(const KernelSpec& spec, double r, double t) {
  require_time(t);
  if (!(r > 0.0)) throw DomainError("P_series: r must be positive");
  const double g = spec.gamma();
  bool inside = true;
  if (g < 1.0) inside = t / std::pow(r, g) <= 0.5;
  if (g > 1.0) inside = r * std::pow(t, -1.0 / g) <= 2.0;
  const auto shape = series_shape(g, spec.d(), r, t);
  const double c = series_calibration(spec).constant;
  return {c * shape.sum, inside && shape.converged, shape.terms};
}

double large_r_shape(double gamma, double d, double r, double t, double* mass) {
  double sum = 0.0;
  double msum = 0.0;
  double prev_mag = std::numeric_limits<double>::infinity();
  int quiet = 0;
  for (int k = 1; k <= 400; ++k) {
    const double gk = gamma * k;
    const double log_mag = std::lgamma(1.0 + 0.5 * gk) + std::lgamma(0.5 * (d + gk)) + gk * std::numbers::ln2 -
                           std::lgamma(k + 1.0) + k * std::log(t) - (d + gk) * std::log(r);
    const double mag = std::exp(log_mag);
    if (gamma > 1.0 && mag > prev_mag) break;
    prev_mag = mag;
    const double term = ((k % 2 == 1) ? 1.0 : -1.0) * mag * std::sin(0.5 * kPi * gk);
    sum += term;
    msum += term * std::pow(r, d) / gk;
    quiet = mag <= 1e-17 * std::abs(sum) ? quiet + 1 : 0;
    if (quiet >= 2) break;
  }
  if (mass != nullptr) *mass = msum;
  return sum;
}

KernelTable::KernelTable(KernelSpec spec, int nodes) : spec_(std::move(spec)) {
  if (nodes < 16) throw DomainError("KernelTable: need at least 16 nodes");
  const double g = spec_.gamma();
  const double R = g < 1.0 ? std::pow(4.0, 1.0 / g) : std::pow(20.0, 1.0 / g);
  const double s0 = table_scale(spec_);
  const double h = std::asinh(R / s0) / (nodes - 1);
  nodes_.resize(static_cast<std::size_t>(nodes));
  values_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i] = i + 1 == nodes_.size() ? R : s0 * std::sinh(h * static_cast<double>(i));
    values_[i] = P_quadrature(spec_, nodes_[i], 1.0);
    if (!(values_[i] > 0.0)) throw NonConvergenceError("KernelTable: non-positive kernel value", values_[i], 0.0);
  }
  finish();
  accuracy_ = 0.0;
  for (int k = 0; k < 24; ++k) {
    const double s = s0 * std::sinh(h * (0.5 + std::floor((nodes - 2) * (k + 0.5) / 24.0)));
    const double exact = P_quadrature(spec_, s, 1.0);
    accuracy_ = std::max(accuracy_, std::abs(base(s) - exact) / exact);
  }
}

KernelTable::KernelTable(KernelSpec spec, std::vector<double> nodes, std::vector<double> values, double accuracy)
    : spec_(std::move(spec)), nodes_(std::move(nodes)), values_(std::move(values)), accuracy_(accuracy) {
  finish();
}

void KernelTable::finish() {
  scale_ = table_scale(spec_);
  std::vector<double> u(nodes_.size());
  std::vector<double> lv(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(values_[i] > 0.0)) throw FormatError("KernelTable: values must be positive");
    u[i] = std::asinh(nodes_[i] / scale_);
    lv[i] = std::log(values_[i]);
  }
  log_interp_ = LocalLagrange(std::move(u), std::move(lv), 8);
  tail_scale_ = values_.back() / large_r_shape(spec_.gamma(), spec_.d(), nodes_.back(), 1.0);
}

double KernelTable::base(double s) const {
  s = std::abs(s);
  if (s <= nodes_.back()) return std::exp(log_interp_(std::asinh(s / scale_)));
  return tail_scale_ * large_r_shape(spec_.gamma(), spec_.d(), s, 1.0);
}

double KernelTable::tail_mass(double R) const {
  double mass = 0.0;
  large_r_shape(spec_.gamma(), spec_.d(), std::max(R, nodes_.back()), 1.0, &mass);
  return tail_scale_ * mass;
}

void KernelTable::write(std::ostream& os) const {
  const auto a = spec_.index().a();
  std::string acsv;
  for (std::size_t i = 0; i < a.size(); ++i) acsv += (i ? "," : "") + format_double(a[i]);
  os << "frackap-table v1 gamma=" << format_double(spec_.gamma()) << " n=" << spec_.index().n() << " a=" << acsv
     << " d=" << format_double(spec_.d()) << "\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) os << format_double(nodes_[i]) << "," << format_double(values_[i]) << "\n";
}

KernelTable KernelTable::read(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("kernel table: empty input");
  const std::string magic = "frackap-table ";
  if (header.rfind(magic, 0) != 0) throw FormatError("kernel table: missing frackap-table header");
  std::istringstream hs(header.substr(magic.size()));
  std::string version;
  hs >> version;
  if (version != "v1") throw FormatError("kernel table: unsupported version '" + version + "'");
  std::map<std::string, std::string> kv;
  for (std::string tok; hs >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("kernel table: bad header field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"gamma", "n", "a", "d"}) {
    if (!kv.count(key)) throw FormatError(std::string("kernel table: header lacks ") + key);
  }
  std::vector<double> a;
  std::string_view as = kv["a"];
  while (!as.empty()) {
    const auto comma = as.find(',');
    a.push_back(parse_double(as.substr(0, comma)));
    as = comma == std::string_view::npos ? std::string_view{} : as.substr(comma + 1);
  }
  if (static_cast<int>(parse_double(kv["n"])) != static_cast<int>(a.size())) {
    throw FormatError("kernel table: n does not match the length of a");
  }
  KernelSpec spec(parse_double(kv["gamma"]), BesselIndex(a));
  if (std::abs(spec.d() - parse_double(kv["d"])) > 1e-12) throw FormatError("kernel table: d inconsistent with a");

  std::vector<double> nodes;
  std::vector<double> values;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("kernel table: row without comma");
    nodes.push_back(parse_double(std::string_view(line).substr(0, comma)));
    values.push_back(parse_double(std::string_view(line).substr(comma + 1)));
  }
  if (nodes.size() < 16) throw FormatError("kernel table: too few rows");
  return KernelTable(std::move(spec), std::move(nodes), std::move(values), std::numeric_limits<double>::quiet_NaN());
}

KernelTable KernelTable::with_scaled_values(double factor) const {
  auto v = values_;
  for (double& x : v) x *= factor;
  return KernelTable(spec_, nodes_, std::move(v), accuracy_);
}

namespace {

std::mutex& table_mutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::pair<double, std::vector<double>>, std::shared_ptr<const KernelTable>>& table_cache() {
  static std::map<std::pair<double, std::vector<double>>, std::shared_ptr<const KernelTable>> cache;
  return cache;
}

std::pair<double, std::vector<double>> table_key(const KernelSpec& spec) {
  return {spec.gamma(), std::vector<double>(spec.index().a().begin(), spec.index().a().end())};
}

}  // namespace

std::shared_ptr<const KernelTable> cached_table(const KernelSpec& spec) {
  const auto key = table_key(spec);
  {
    std::lock_guard lock(table_mutex());
    if (auto it = table_cache().find(key); it != table_cache().end()) return it->second;
  }
  auto table = std::make_shared<const KernelTable>(spec);
  std::lock_guard lock(table_mutex());
  return table_cache().emplace(key, std::move(table)).first->second;
}

void seed_table_cache(KernelTable table) {
  const auto key = table_key(table.spec());
  std::lock_guard lock(table_mutex());
  table_cache()[key] = std::make_shared<const KernelTable>(std::move(table));
}

std::vector<std::shared_ptr<const KernelTable>> cached_tables() {
  std::lock_guard lock(table_mutex());
  std::vector<std::shared_ptr<const KernelTable>> out;
  for (const auto& [key, table] : table_cache()) out.push_back(table);
  return out;
}

double P_eval(const KernelTable& table, double r, double t) {
  require_time(t);
  const double g = table.spec().gamma();
  return std::pow(t, -table.spec().d() / g) * table.base(r * std::pow(t, -1.0 / g));
}

double G_kernel(const BesselIndex& index, double nu, double r) {
  if (!(nu > 0.0)) throw DomainError("G_kernel: nu must be positive");
  if (!(r > 0.0)) throw DomainError("G_kernel: r must be positive");
  double c = std::pow(2.0, 0.5 * (index.n() - index.weight_sum() - nu) + 1.0) / gamma_fn(0.5 * nu);
  for (int i = 0; i < index.n(); ++i) c /= gamma_fn(index.alpha(i) + 1.0);
  const double mu = 0.5 * (index.d() - nu);
  return c * modified_K(mu, r) / std::pow(r, mu);
}

RadialProfile mollified_profile(const KernelSpec& spec, double t) {
  require_time(t);
  const double g = spec.gamma();
  const RadialProfile multiplier([g, t](double rho) { return std::exp(-t * std::pow(rho, g)) / (1.0 + rho * rho); },
                                 DecayHint::exponential(t, g));
  // The power-law extension beyond R misses mass of order R^-3.
  const int count = 289;
  const double R = 400.0 * std::max(1.0, std::pow(t, 1.0 / g));
  const double h = std::asinh(R) / (count - 1);
  std::vector<double> nodes(count);
  std::vector<double> values(count);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    nodes[i] = std::sinh(h * i);
    values[i] = inverse_radial_transform(spec.index(), multiplier, nodes[i]);
  }
  return RadialProfile::from_samples(std::move(nodes), std::move(values), DecayHint::power(-(spec.d() + g)), 6);
}

BesselIndex shift_index(const BesselIndex& index, int i) {
  if (index.is_laplace()) throw UnsupportedCaseError("shift_index: Laplace index has no shifted counterpart");
  if (i < 1 || i > index.n()) throw DomainError("shift_index: axis out of range");
  std::vector<double> a(index.a().begin(), index.a().end());
  a[static_cast<std::size_t>(i - 1)] += 2.0;
  return BesselIndex(std::move(a));
}

}  // namespace frackap
