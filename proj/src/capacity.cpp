#include "frackap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "frackap/errors.hpp"
#include "frackap/quadrature.hpp"

namespace frackap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kPanelOrder = 8;

double conjugate(double p) { return p / (p - 1.0); }

// Offsets 0 = e_0 < ... < e_m = L of m panels whose widths grow
// geometrically from h0 (uniform when m * h0 >= L).
std::vector<double> geometric_offsets(double L, double h0, int m) {
  std::vector<double> e{0.0};
  if (m * h0 >= L) {
    for (int k = 1; k <= m; ++k) e.push_back(L * k / m);
    return e;
  }
  auto total = [&](double r) { return h0 * (std::pow(r, m) - 1.0) / (r - 1.0); };
  double lo = 1.0 + 1e-12;
  double hi = 2.0;
  while (total(hi) < L) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < L ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  double h = h0;
  for (int k = 1; k < m; ++k) {
    e.push_back(e.back() + h);
    h *= r;
  }
  e.push_back(L);
  return e;
}

void sort_unique(std::vector<double>& v, double eps) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > eps) out.push_back(x);
  }
  v = std::move(out);
}

// Panel edges on [lo, hi] graded towards each focus point.
std::vector<double> graded_edges(double lo, double hi, std::vector<double> foci, double h0, int panels) {
  sort_unique(foci, 1e-12 * (hi - lo));
  std::vector<double> marks{lo};
  std::vector<int> toward;  // segment j is graded from its left (0) or right (1) end
  for (std::size_t j = 0; j < foci.size(); ++j) {
    const double f = foci[j];
    if (f > marks.back()) {
      marks.push_back(f);
      toward.push_back(1);
    }
    const double next = j + 1 < foci.size() ? 0.5 * (f + foci[j + 1]) : hi;
    if (next > marks.back()) {
      marks.push_back(next);
      toward.push_back(0);
    }
  }
  double total_log = 0.0;
  for (std::size_t s = 0; s + 1 < marks.size(); ++s) total_log += std::log1p((marks[s + 1] - marks[s]) / h0);
  std::vector<double> edges{lo};
  for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
    const double L = marks[s + 1] - marks[s];
    const int m = std::max(3, static_cast<int>(std::lround(panels * std::log1p(L / h0) / total_log)));
    const auto off = geometric_offsets(L, std::min(h0, L / m), m);
    for (std::size_t k = 1; k < off.size(); ++k) {
      edges.push_back(toward[s] == 0 ? marks[s] + off[k] : marks[s + 1] - off[off.size() - 1 - k]);
    }
  }
  sort_unique(edges, 1e-14 * (hi - lo));
  return edges;
}

GridAxis make_axis(std::vector<double> edges, int order) {
  GridAxis ax;
  const auto gl = gauss_legendre(order);
  for (std::size_t q = 0; q + 1 < edges.size(); ++q) {
    const double h = 0.5 * (edges[q + 1] - edges[q]);
    for (std::size_t i = 0; i < gl->size(); ++i) {
      ax.nodes.push_back(edges[q] + h * (1.0 + gl->nodes[i]));
      ax.weights.push_back(h * gl->weights[i]);
    }
  }
  ax.extent = edges.back();
  return ax;
}

// |S| int_0^inf f(r)^p r^{d-1} dr for a kernel with a power tail r^{-tail}.
double radial_power(const std::function<double(double)>& f, double d, double p, double scale, double tail) {
  double sum = 0.0;
  double lo = 0.0;
  double hi = scale;
  for (int k = 0; k < 60; ++k) {
    const auto part = integrate_adaptive(
        [&](double r) { return std::pow(std::abs(f(r)), p) * std::pow(r, d - 1.0); }, lo, hi, 1e-10, 1e-15 * sum, 16);
    sum += part.value;
    lo = hi;
    hi *= 2.0;
    if (k > 8 && part.value < 1e-12 * sum) break;
  }
  // f ~ f(lo) (lo / r)^tail from lo on.
  const double expo = p * tail - d;
  sum += std::pow(std::abs(f(lo)), p) * std::pow(lo, d) / expo;
  return sum;
}

double q_exponent(const KernelSpec& spec, double p) { return spec.d() * (p - 1.0) / spec.gamma(); }

double P_one_power(const KernelSpec& spec, double p) {
  static std::mutex mu;
  static std::map<std::tuple<double, std::vector<double>, double>, double> cache;
  const auto key = std::make_tuple(spec.gamma(), std::vector<double>(spec.index().a().begin(), spec.index().a().end()), p);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto table = cached_table(spec);
  const double v = sphere_measure(spec.index()) *
                   radial_power([&](double r) { return table->base(r); }, spec.d(), p,
                                std::min(1.0, table->r_max() / 64.0), spec.d() + spec.gamma());
  std::lock_guard lock(mu);
  cache.emplace(key, v);
  return v;
}

void validate_grid(const NormGrid& g) {
  if (!(g.X_max > 0.0 && g.T_max > 0.0)) throw DomainError("NormGrid: X_max and T_max must be positive");
  if (g.nodes_x < 8 * kPanelOrder || g.nodes_t < 4 * kPanelOrder) {
    throw DomainError("NormGrid: need nodes_x >= 64 and nodes_t >= 32");
  }
  if (!(g.layer_fraction > 0.0 && g.layer_fraction < 0.5)) throw DomainError("NormGrid: layer_fraction in (0, 1/2)");
}

bool at_origin(const Atom& a) {
  return std::all_of(a.y.begin(), a.y.end(), [](double v) { return v == 0.0; });
}

}  // namespace

std::string to_string(CapacityVariant v) {
  switch (v) {
    case CapacityVariant::C:
      return "C";
    case CapacityVariant::N:
      return "N";
    case CapacityVariant::Z2:
      return "Z2";
  }
  return "?";
}

CapacityVariant parse_variant(const std::string& s) {
  if (s == "C") return CapacityVariant::C;
  if (s == "N") return CapacityVariant::N;
  if (s == "Z2") return CapacityVariant::Z2;
  throw DomainError("unknown capacity variant '" + s + "'");
}

std::string to_string(TrendClass c) {
  switch (c) {
    case TrendClass::BoundedBelow:
      return "bounded-below";
    case TrendClass::Decaying:
      return "decaying";
    case TrendClass::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

CompactSetSpec CompactSetSpec::from_atoms(std::vector<Atom> atoms) {
  CompactSetSpec s;
  s.atoms = std::move(atoms);
  return s;
}

CompactSetSpec CompactSetSpec::from_box(BoxSpec box) {
  const std::size_t n = box.lo.size();
  if (box.hi.size() != n || box.res.size() != n) throw ShapeError("BoxSpec: lo, hi and res must have equal length");
  if (box.tau_res < 1 || !(box.tau_hi >= box.tau_lo)) throw DomainError("BoxSpec: bad time range");
  std::vector<std::vector<double>> coords(n);
  auto samples = [](double lo, double hi, int m) {
    if (m < 1 || !(hi >= lo)) throw DomainError("BoxSpec: bad axis range or resolution");
    std::vector<double> v;
    if (m == 1) return std::vector<double>{0.5 * (lo + hi)};
    for (int i = 0; i < m; ++i) v.push_back(lo + (hi - lo) * i / (m - 1));
    return v;
  };
  for (std::size_t k = 0; k < n; ++k) coords[k] = samples(box.lo[k], box.hi[k], box.res[k]);
  const auto taus = samples(box.tau_lo, box.tau_hi, box.tau_res);
  CompactSetSpec s;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = coords[k][idx[k]];
    for (double tau : taus) s.atoms.push_back({y, tau});
    std::size_t k = 0;
    while (k < n && ++idx[k] == coords[k].size()) idx[k++] = 0;
    if (k == n) break;
  }
  s.box = std::move(box);
  return s;
}

CompactSetSpec CompactSetSpec::refined(int factor) const {
  if (!box || factor <= 1) return *this;
  BoxSpec b = *box;
  for (auto& r : b.res) r = r == 1 ? 1 : (r - 1) * factor + 1;
  b.tau_res = b.tau_res == 1 ? 1 : (b.tau_res - 1) * factor + 1;
  return from_box(std::move(b));
}

void CompactSetSpec::validate(const BesselIndex& index) const {
  if (atoms.empty()) throw DomainError("compact set: no atoms");
  for (const auto& a : atoms) {
    if (a.y.size() != static_cast<std::size_t>(index.n())) throw ShapeError("compact set: atom dimension mismatch");
    if (!(a.tau > 0.0) || !std::isfinite(a.tau)) throw DomainError("compact set: atom times must be positive");
    for (double v : a.y) {
      if (!std::isfinite(v)) throw DomainError("compact set: non-finite coordinate");
      if (index.is_bessel() && v < 0.0) throw DomainError("compact set: Bessel coordinates must be nonnegative");
    }
  }
}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

SpaceTimeGridFunction ColumnFamily::column_function(std::size_t i) const {
  if (variant == CapacityVariant::Z2) throw UnsupportedCaseError("column_function: Z2 columns live in rho");
  SpaceTimeGridFunction f(spec.index(), axes, times, time_weights);
  const auto& c = columns.at(i);
  for (std::size_t j = 0; j < times.size(); ++j) {
    auto& vals = f.slice(j).values();
    std::copy(c.begin() + static_cast<std::ptrdiff_t>(j * space_size),
              c.begin() + static_cast<std::ptrdiff_t>((j + 1) * space_size), vals.begin());
  }
  return f;
}

double kernel_power(const KernelSpec& spec, CapacityVariant variant, double p, double s) {
  if (!(s > 0.0)) throw DomainError("kernel_power: s must be positive");
  switch (variant) {
    case CapacityVariant::C:
      return P_one_power(spec, p) * std::pow(s, -q_exponent(spec, p));
    case CapacityVariant::N: {
      const auto prof = mollified_profile(spec, s);
      return sphere_measure(spec.index()) *
             radial_power([&](double r) { return prof(r); }, spec.d(), p, 0.25, spec.d() + spec.gamma());
    }
    case CapacityVariant::Z2:
      return 0.0;
  }
  return 0.0;
}

double layer_power(const KernelSpec& spec, CapacityVariant variant, double p, double delta) {
  if (!(delta > 0.0)) return 0.0;
  switch (variant) {
    case CapacityVariant::C: {
      const double q = q_exponent(spec, p);
      if (q >= 1.0) return kInf;
      return P_one_power(spec, p) * std::pow(delta, 1.0 - q) / (1.0 - q);
    }
    case CapacityVariant::N: {
      const auto gl = gauss_legendre(4);
      double sum = 0.0;
      for (std::size_t i = 0; i < gl->size(); ++i) {
        sum += gl->weights[i] * kernel_power(spec, variant, p, 0.5 * delta * (1.0 + gl->nodes[i]));
      }
      return 0.5 * delta * sum;
    }
    case CapacityVariant::Z2:
      return 0.0;
  }
  return 0.0;
}

ColumnFamily build_columns(const KernelSpec& spec, const CompactSetSpec& set, CapacityVariant variant,
                           const NormGrid& grid) {
  const BesselIndex& index = spec.index();
  set.validate(index);
  validate_grid(grid);
  const auto n = static_cast<std::size_t>(index.n());
  const double gamma = spec.gamma();
  const double d = spec.d();
  const bool z2 = variant == CapacityVariant::Z2;
  const double delta = z2 ? 0.0 : grid.layer_fraction * grid.T_max;

  ColumnFamily fam{spec, variant, set.atoms, {}, {}, {}, {}, 0, {}, {}, delta, {}};

  // Coverage.
  for (const auto& a : set.atoms) {
    for (double v : a.y) {
      if (!(std::abs(v) < grid.X_max)) throw CoverageError("build_columns: atom outside the spatial grid");
    }
    if (!(a.tau + std::max(delta, 1e-3 * grid.T_max) < grid.T_max)) {
      throw CoverageError("build_columns: atom time too close to T_max");
    }
    if (z2 && !at_origin(a)) throw UnsupportedCaseError("build_columns: Z2 needs atoms at the spatial origin");
    if (!z2 && index.is_bessel() && n > 1 && !at_origin(a)) {
      throw UnsupportedCaseError("build_columns: Bessel atoms off the origin are supported for n = 1 only");
    }
  }

  // Time panels graded from tau_i + delta for every distinct tau.
  std::vector<double> taus;
  for (const auto& a : set.atoms) taus.push_back(a.tau);
  sort_unique(taus, 0.0);
  const int time_panels = std::max(4, grid.nodes_t / kPanelOrder / static_cast<int>(taus.size()));
  const double h_t = z2 ? grid.layer_fraction * grid.T_max : delta;
  std::vector<double> tedges;
  for (double tau : taus) {
    const double start = tau + delta;
    const auto off = geometric_offsets(grid.T_max - start, h_t, time_panels);
    for (double o : off) tedges.push_back(start + o);
    tedges.push_back(tau);
  }
  sort_unique(tedges, 1e-13 * grid.T_max);
  const GridAxis taxis = make_axis(tedges, kPanelOrder);
  fam.times = taxis.nodes;
  fam.time_weights = taxis.weights;

  if (z2) {
    // rho axis, graded at both ends of the decay scale.
    const double rho_max = 1e3;
    std::vector<double> redges{0.0};
    for (double r = 1e-3; r < rho_max; r *= 1.5) redges.push_back(r);
    redges.push_back(rho_max);
    GridAxis rax = make_axis(redges, kPanelOrder);
    const double ks = inversion_constant(index) * sphere_measure(index);
    for (std::size_t k = 0; k < rax.nodes.size(); ++k) {
      const double rho = rax.nodes[k];
      rax.weights[k] *= ks * std::pow(rho, d - 1.0) / (1.0 + std::pow(rho, 4.0));
    }
    fam.axes = {rax};
  } else {
    const double h0 = variant == CapacityVariant::C ? 0.25 * std::pow(delta, 1.0 / gamma) : 1e-3;
    const int panels = std::max(6, grid.nodes_x / kPanelOrder);
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> foci;
      for (const auto& a : set.atoms) foci.push_back(a.y[k]);
      const double lo = index.is_bessel() ? 0.0 : -grid.X_max;
      auto edges = graded_edges(lo, grid.X_max, foci, h0, panels);
      if (index.is_bessel()) {
        fam.axes.push_back(composite_axis(std::move(edges), kPanelOrder, index.a(static_cast<int>(k)), true));
      } else {
        fam.axes.push_back(composite_axis(std::move(edges), kPanelOrder, 0.0, false));
      }
    }
  }

  // Spatial nodes and weights in GridFunction order.
  std::vector<std::vector<double>> xs;
  std::vector<double> xw;
  if (z2) {
    xs.reserve(fam.axes[0].nodes.size());
    for (double r : fam.axes[0].nodes) xs.push_back({r});
    xw = fam.axes[0].weights;
  } else {
    const GridFunction tmpl(index, fam.axes, {});
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      xs.push_back(tmpl.node(i));
      xw.push_back(tmpl.weight(i));
    }
  }
  fam.space_size = xs.size();
  const std::size_t nt = fam.times.size();
  fam.weights.resize(nt * fam.space_size);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t k = 0; k < fam.space_size; ++k) fam.weights[j * fam.space_size + k] = fam.time_weights[j] * xw[k];
  }

  // Kernel at lag s as a radial function.
  std::shared_ptr<const KernelTable> table;
  if (variant == CapacityVariant::C) table = cached_table(spec);
  std::map<double, RadialProfile> mollified;
  if (variant == CapacityVariant::N) {
    std::set<double> lags;
    for (double tau : taus) {
      for (double t : fam.times) {
        if (t - tau >= delta) lags.insert(t - tau);
      }
    }
    const std::vector<double> lag_list(lags.begin(), lags.end());
    std::vector<RadialProfile> profiles(lag_list.size(), RadialProfile([](double) { return 0.0; }, DecayHint::compact(1.0)));
    for (std::size_t i = 0; i < lag_list.size(); ++i) profiles[i] = mollified_profile(spec, lag_list[i]);
    for (std::size_t i = 0; i < lag_list.size(); ++i) mollified.emplace(lag_list[i], profiles[i]);
  }

  TranslateOptions topts;
  topts.tol = 1e-10;
  fam.columns.assign(set.atoms.size(), std::vector<double>(nt * fam.space_size, 0.0));
  for (std::size_t i = 0; i < set.atoms.size(); ++i) {
    const Atom& atom = set.atoms[i];
    auto& col = fam.columns[i];
    const auto count = static_cast<std::ptrdiff_t>(nt);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t jj = 0; jj < count; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      const double s = fam.times[j] - atom.tau;
      if (!(s > 0.0) || s < delta) continue;
      if (z2) {
        for (std::size_t k = 0; k < fam.space_size; ++k) {
          col[j * fam.space_size + k] = std::exp(-s * std::pow(xs[k][0], gamma));
        }
        continue;
      }
      RadialFunction K;
      if (table) {
        K = [&table, s](double r) { return P_eval(*table, r, s); };
      } else {
        const RadialProfile& prof = mollified.at(s);
        K = [&prof](double r) { return prof(r); };
      }
      for (std::size_t k = 0; k < fam.space_size; ++k) {
        const auto& x = xs[k];
        double v = 0.0;
        if (index.is_laplace()) {
          double r2 = 0.0;
          for (std::size_t m = 0; m < n; ++m) r2 += (x[m] - atom.y[m]) * (x[m] - atom.y[m]);
          v = K(std::sqrt(r2));
        } else if (at_origin(atom)) {
          double r2 = 0.0;
          for (double xm : x) r2 += xm * xm;
          v = K(std::sqrt(r2));
        } else {
          v = bessel_translate_1d(index.alpha(0), K, x[0], atom.y[0], topts);
        }
        col[j * fam.space_size + k] = std::max(v, 0.0);
      }
    }
  }

  for (std::size_t i = 0; i < set.atoms.size(); ++i) {
    std::size_t g = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (set.atoms[j] == set.atoms[i]) {
        g = fam.layer_group[j];
        break;
      }
    }
    fam.layer_group.push_back(g);
    fam.layer_exact.push_back(index.is_laplace() || at_origin(set.atoms[i]));
  }
  return fam;
}

namespace {

// F(w) = sum_k W_k |v_k|^p + L sum_g |m_g|^p, the p-th power of the constraint norm.
struct Objective {
  const ColumnFamily& fam;
  double p;
  double L;

  std::vector<double> combine(const std::vector<double>& w) const {
    std::vector<double> v(fam.weights.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0.0) continue;
      const auto& c = fam.columns[i];
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += w[i] * c[k];
    }
    return v;
  }
  std::vector<double> group_mass(const std::vector<double>& w) const {
    std::vector<double> m(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) m[fam.layer_group[i]] += w[i];
    return m;
  }
  double value(const std::vector<double>& v, const std::vector<double>& m) const {
    double F = 0.0;
    const auto count = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for reduction(+ : F) schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
      F += fam.weights[static_cast<std::size_t>(k)] * std::pow(std::abs(v[static_cast<std::size_t>(k)]), p);
    }
    if (L > 0.0) {
      for (double mg : m) F += L * std::pow(std::abs(mg), p);
    }
    return F;
  }
  // dF/dw_i.
  std::vector<double> gradient(const std::vector<double>& v, const std::vector<double>& m) const {
    std::vector<double> vp(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) vp[k] = fam.weights[k] * std::pow(std::abs(v[k]), p - 1.0);
    std::vector<double> g(fam.size(), 0.0);
    const auto count = static_cast<std::ptrdiff_t>(fam.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const auto& c = fam.columns[i];
      double s = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) s += vp[k] * c[k];
      g[i] = p * (s + L * std::pow(std::abs(m[fam.layer_group[i]]), p - 1.0));
    }
    return g;
  }
  // F'(gamma) along v + gamma dv, m + gamma dm.
  double slope(const std::vector<double>& v, const std::vector<double>& dv, const std::vector<double>& m,
               const std::vector<double>& dm, double gamma) const {
    double s = 0.0;
    const auto count = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for reduction(+ : s) schedule(static)
    for (std::ptrdiff_t kk = 0; kk < count; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      const double x = v[k] + gamma * dv[k];
      s += fam.weights[k] * std::pow(std::abs(x), p - 1.0) * (x < 0.0 ? -1.0 : 1.0) * dv[k];
    }
    if (L > 0.0) {
      for (std::size_t g = 0; g < m.size(); ++g) {
        const double x = m[g] + gamma * dm[g];
        s += L * std::pow(std::abs(x), p - 1.0) * (x < 0.0 ? -1.0 : 1.0) * dm[g];
      }
    }
    return p * s;
  }
};

// Minimiser of the convex F on [0, gmax] from the sign of F'.
double line_minimum(const Objective& obj, const std::vector<double>& v, const std::vector<double>& dv,
                    const std::vector<double>& m, const std::vector<double>& dm, double gmax) {
  if (obj.slope(v, dv, m, dm, gmax) <= 0.0) return gmax;
  double lo = 0.0;
  double hi = gmax;
  for (int it = 0; it < 60 && hi - lo > 1e-14 * gmax; ++it) {
    const double mid = 0.5 * (lo + hi);
    (obj.slope(v, dv, m, dm, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Estimated p-th power of the constraint norm of column i outside the grid.
double atom_tail_power(const ColumnFamily& fam, std::size_t i, double p) {
  const KernelSpec& spec = fam.spec;
  const Atom& atom = fam.atoms[i];
  const double T = fam.times.empty() ? 0.0 : fam.times.back();
  const double sT = T - atom.tau;
  if (fam.variant == CapacityVariant::Z2) {
    const auto& ax = fam.axes[0];
    double s = 0.0;
    for (std::size_t k = 0; k < ax.nodes.size(); ++k) {
      const double rg = std::pow(ax.nodes[k], spec.gamma());
      s += ax.weights[k] * std::exp(-2.0 * sT * rg) / (2.0 * rg);
    }
    return s;
  }
  const double d = spec.d();
  const double q = q_exponent(spec, p);
  double tail = q > 1.0 ? P_one_power(spec, p) * std::pow(sT, 1.0 - q) / (q - 1.0) : kInf;
  double R = kInf;
  for (std::size_t k = 0; k < atom.y.size(); ++k) R = std::min(R, fam.axes[k].extent - std::abs(atom.y[k]));
  const auto table = cached_table(spec);
  const double S = sphere_measure(spec.index());
  for (std::size_t j = 0; j < fam.times.size(); ++j) {
    const double s = fam.times[j] - atom.tau;
    if (s < fam.layer_length || s <= 0.0) continue;
    tail += fam.time_weights[j] * S * std::pow(P_eval(*table, R, s), p) * std::pow(R, d) / (p * (d + spec.gamma()) - d);
  }
  return tail;
}

}  // namespace

double constraint_norm(const ColumnFamily& fam, const std::vector<double>& w, double p) {
  if (w.size() != fam.size()) throw ShapeError("constraint_norm: one weight per column");
  const double L = layer_power(fam.spec, fam.variant, p, fam.layer_length);
  const Objective obj{fam, p, L};
  const auto m = obj.group_mass(w);
  if (std::isinf(L) && std::any_of(m.begin(), m.end(), [](double x) { return x != 0.0; })) return kInf;
  return std::pow(obj.value(obj.combine(w), m), 1.0 / p);
}

CapacityResult solve_capacity(const ColumnFamily& fam, double p, const SolverConfig& cfg) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("solve_capacity: p must lie in (1, inf)");
  if (fam.variant == CapacityVariant::Z2 && p != 2.0) throw UnsupportedCaseError("solve_capacity: Z2 needs p = 2");
  if (fam.size() == 0) throw DomainError("solve_capacity: no atoms");
  if (cfg.max_iter < 1 || !(cfg.gap_tol > 0.0)) throw DomainError("solve_capacity: bad solver configuration");
  const std::size_t N = fam.size();
  CapacityResult res;
  res.variant = fam.variant;
  res.optimal_measure.atoms = fam.atoms;

  const double L = layer_power(fam.spec, fam.variant, p, fam.layer_length);
  if (std::isinf(L)) {
    // Every column has infinite norm near its atom: only the zero measure is admissible.
    res.optimal_measure.weights.assign(N, 0.0);
    res.min_norm = kInf;
    return res;
  }
  bool all_zero = L == 0.0;
  for (const auto& c : fam.columns) {
    if (std::any_of(c.begin(), c.end(), [](double x) { return x != 0.0; })) all_zero = false;
  }
  if (all_zero) throw DegenerateSetError("solve_capacity: every column vanishes on the grid");

  const Objective obj{fam, p, L};
  // Start from the best single atom.
  std::vector<double> w(N, 0.0);
  {
    std::size_t best = 0;
    double bestF = kInf;
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> e(N, 0.0);
      e[i] = 1.0;
      const double F = obj.value(obj.combine(e), obj.group_mass(e));
      if (F < bestF) {
        bestF = F;
        best = i;
      }
    }
    w[best] = 1.0;
  }
  auto v = obj.combine(w);
  auto m = obj.group_mass(w);
  double F = obj.value(v, m);
  double bestF = F;
  int since_improvement = 0;
  double gap = kInf;
  int it = 0;
  std::vector<double> dv(v.size());
  std::vector<double> dm(m.size());
  for (; it < cfg.max_iter; ++it) {
    const auto gF = obj.gradient(v, m);
    // Gradient of phi = F^{1/p}.
    const double scale = std::pow(F, 1.0 / p - 1.0) / p;
    const double phi = std::pow(F, 1.0 / p);
    double gw = 0.0;
    for (std::size_t i = 0; i < N; ++i) gw += gF[i] * w[i];
    const auto s_it = std::min_element(gF.begin(), gF.end());
    const std::size_t s = static_cast<std::size_t>(s_it - gF.begin());
    gap = scale * (gw - *s_it) / phi;
    if (gap <= cfg.gap_tol) break;

    std::size_t a = s;
    double away_gain = -kInf;
    if (cfg.away_steps && cfg.line_search) {
      for (std::size_t i = 0; i < N; ++i) {
        if (w[i] > 0.0 && (away_gain == -kInf || gF[i] > gF[a])) {
          a = i;
          away_gain = gF[i] - gw;
        }
      }
    }
    const double fw_gain = gw - *s_it;
    const bool away = away_gain > fw_gain && w[a] < 1.0;
    double gmax = 1.0;
    if (away) {
      gmax = w[a] / (1.0 - w[a]);
      const auto& ca = fam.columns[a];
      for (std::size_t k = 0; k < v.size(); ++k) dv[k] = v[k] - ca[k];
      for (std::size_t g = 0; g < m.size(); ++g) dm[g] = m[g];
      dm[fam.layer_group[a]] -= 1.0;
    } else {
      const auto& cs = fam.columns[s];
      for (std::size_t k = 0; k < v.size(); ++k) dv[k] = cs[k] - v[k];
      for (std::size_t g = 0; g < m.size(); ++g) dm[g] = -m[g];
      dm[fam.layer_group[s]] += 1.0;
    }
    const double step = cfg.line_search ? line_minimum(obj, v, dv, m, dm, gmax) : 2.0 / (it + 2.0);
    if (away) {
      for (auto& wi : w) wi *= 1.0 + step;
      w[a] -= step;
      if (w[a] < 1e-15) w[a] = 0.0;
    } else {
      for (auto& wi : w) wi *= 1.0 - step;
      w[s] += step;
    }
    if ((it + 1) % 100 == 0) {
      v = obj.combine(w);
      m = obj.group_mass(w);
    } else {
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += step * dv[k];
      for (std::size_t g = 0; g < m.size(); ++g) m[g] += step * dm[g];
    }
    F = obj.value(v, m);
    if (F < bestF * (1.0 - 1e-15)) {
      bestF = F;
      since_improvement = 0;
    } else if (++since_improvement >= 1000) {
      throw NonConvergenceError("solve_capacity: objective stagnated for 1000 iterations, relative gap " +
                                    std::to_string(gap),
                                std::pow(F, 1.0 / p), std::pow(bestF, 1.0 / p));
    }
  }
  res.iterations = it;
  res.duality_gap = gap;
  if (gap > cfg.gap_tol) {
    throw NonConvergenceError("solve_capacity: iteration budget exhausted with relative gap " + std::to_string(gap),
                              std::pow(F, 1.0 / p), std::pow(bestF, 1.0 / p));
  }
  v = obj.combine(w);
  m = obj.group_mass(w);
  const double phi = std::pow(obj.value(v, m), 1.0 / p);
  res.min_norm = phi;
  res.raw_mass = 1.0 / phi;
  res.capacity_value = std::pow(phi, -conjugate(p));
  res.optimal_measure.weights.resize(N);
  for (std::size_t i = 0; i < N; ++i) res.optimal_measure.weights[i] = w[i] / phi;

  // Minkowski bound on the missing part, for the normalised measure.
  double tail_root = 0.0;
  double inexact = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double nu = res.optimal_measure.weights[i];
    if (nu == 0.0) continue;
    tail_root += nu * std::pow(atom_tail_power(fam, i, p), 1.0 / p);
    if (!fam.layer_exact[i]) inexact += std::pow(nu, p) * L;
  }
  res.norm_truncation_error = std::pow(1.0 + std::pow(tail_root, p) + inexact, 1.0 / p) - 1.0;

  if (!cfg.monotone_subset.empty()) {
    ColumnFamily sub{fam.spec, fam.variant, {}, fam.axes, fam.times, fam.time_weights, fam.weights, fam.space_size,
                     {}, {}, fam.layer_length, {}};
    std::map<std::size_t, std::size_t> regroup;
    for (std::size_t idx : cfg.monotone_subset) {
      if (idx >= N) throw DomainError("solve_capacity: monotone_subset index out of range");
      sub.atoms.push_back(fam.atoms[idx]);
      sub.columns.push_back(fam.columns[idx]);
      const auto g = regroup.emplace(fam.layer_group[idx], sub.columns.size() - 1).first->second;
      sub.layer_group.push_back(g);
      sub.layer_exact.push_back(fam.layer_exact[idx]);
    }
    SolverConfig sub_cfg = cfg;
    sub_cfg.monotone_subset.clear();
    const auto sr = solve_capacity(sub, p, sub_cfg);
    res.subset_capacity = sr.capacity_value;
    // Each value is within a relative gap of its optimum in the norm.
    const double slack = std::pow(1.0 + sr.duality_gap + res.duality_gap, conjugate(p));
    if (sr.capacity_value > res.capacity_value * slack) {
      throw NonConvergenceError("solve_capacity: subset capacity exceeds the full capacity", sr.capacity_value,
                                res.capacity_value);
    }
  }
  return res;
}

CapacityResult solve_capacity(const KernelSpec& spec, const CompactSetSpec& set, double p, CapacityVariant variant,
                              const NormGrid& grid, const SolverConfig& cfg) {
  return solve_capacity(build_columns(spec, set, variant, grid), p, cfg);
}

double predicted_time_decay_rate(const KernelSpec& spec, double p) {
  const double q = q_exponent(spec, p);
  if (!(q < 1.0)) throw DomainError("predicted_time_decay_rate: needs d(p-1)/gamma < 1");
  return (1.0 - q) / (p - 1.0);
}

TrendReport refine_and_trend(const KernelSpec& spec, const CompactSetSpec& set, double p, CapacityVariant variant,
                             const NormGrid& grid, int levels, Refinement kind, const SolverConfig& cfg) {
  if (levels < 3) throw DomainError("refine_and_trend: need at least 3 levels");
  TrendReport rep;
  for (int l = 0; l < levels; ++l) {
    NormGrid g = grid;
    CompactSetSpec s = set;
    double param = 1.0;
    switch (kind) {
      case Refinement::Grid:
        g.nodes_x = grid.nodes_x << l;
        g.nodes_t = grid.nodes_t << l;
        s = set.refined(1 << l);
        param = std::ldexp(1.0, l);
        break;
      case Refinement::TimeExtent:
        g.T_max = std::ldexp(grid.T_max, l);
        param = g.T_max;
        break;
      case Refinement::Repeat:
        param = 1.0;
        break;
    }
    auto r = solve_capacity(spec, s, p, variant, g, cfg);
    rep.parameters.push_back(param);
    rep.capacities.push_back(r.capacity_value);
    rep.results.push_back(std::move(r));
  }
  const auto& c = rep.capacities;
  const double first = c.front();
  const bool constant = std::all_of(c.begin(), c.end(), [&](double x) { return std::abs(x - first) <= 1e-12 * std::abs(first); });
  if (std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; })) {
    rep.rate = kInf;
    rep.classification = TrendClass::Decaying;
    return rep;
  }
  if (constant || kind == Refinement::Repeat) {
    rep.classification = TrendClass::Inconclusive;
    return rep;
  }
  // Least-squares slope of log c against log parameter.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = std::log(rep.parameters[i]);
    const double y = std::log(c[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.rate = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  bool decreasing = true;
  for (std::size_t i = 1; i < c.size(); ++i) decreasing = decreasing && c[i] < c[i - 1];
  const double last_step = c.back() / c[c.size() - 2];
  if (decreasing && last_step < 0.95) {
    rep.classification = TrendClass::Decaying;
  } else if (std::abs(last_step - 1.0) < 0.05) {
    rep.classification = TrendClass::BoundedBelow;
  } else {
    rep.classification = TrendClass::Inconclusive;
  }
  return rep;
}

}  // namespace frackap
