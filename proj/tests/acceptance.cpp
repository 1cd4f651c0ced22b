// One PASS/FAIL line per acceptance criterion. Exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "frackap/capacity.hpp"
#include "frackap/harness.hpp"
#include "frackap/hankel.hpp"
#include "frackap/kernels.hpp"
#include "frackap/norms.hpp"

using namespace frackap;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
  if (!ok) ++failures;
}

// Runs fn, turning an escaped exception into a FAIL line.
void criterion(int n, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

std::vector<BesselIndex> mass_indices() {
  return {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0}), BesselIndex({1.0, 1.0})};
}

// Worst value and all-pass over the harness rows with this id.
struct Rows {
  double worst = 0.0;
  bool all_pass = true;
  int count = 0;
};

Rows rows(const std::vector<CheckReport>& reports, const std::string& id) {
  Rows r;
  for (const auto& c : reports) {
    if (c.check_id != id) continue;
    ++r.count;
    r.worst = std::max(r.worst, c.value);
    r.all_pass = r.all_pass && c.status == CheckStatus::Pass;
  }
  return r;
}

double gaussian(double r) { return std::exp(-0.5 * r * r); }

int run_tool(const std::vector<std::string>& args, std::string& out) {
  std::vector<const char*> argv{"frackap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream os, es;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), os, es);
  out = os.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  unsetenv("FRACKAP_TABLE_DIR");

  criterion(1, [] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    int tuples = 0;
    for (double g : {0.5, 1.0, 1.5}) {
      for (const auto& I : mass_indices()) {
        const auto table = cached_table(KernelSpec(g, I));
        for (double t : {0.25, 1.0, 4.0}) {
          worst = std::max(worst, std::abs(kernel_mass(*table, t) - 1.0));
          ++tuples;
        }
      }
    }
    const double secs = seconds_since(t0);
    report(1, tuples == 36 && worst < 1e-6 && secs < 120.0,
           "max |mass - 1| = " + sci(worst) + " over " + std::to_string(tuples) + " tuples in " + sci(secs) + " s");
  });

  criterion(2, [] {
    const KernelSpec lap(1.0, BesselIndex::laplace(1));
    const KernelSpec bes(1.0, BesselIndex({1.0}));
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double r = 0.25 * i;
      for (int k = 0; k <= 12; ++k) {
        const double t = 0.2 * std::pow(25.0, k / 12.0);
        worst = std::max(worst, rel(P_quadrature(lap, r, t), t / (std::numbers::pi * (t * t + r * r))));
        worst = std::max(worst, rel(P_quadrature(bes, r, t), t / std::pow(t * t + r * r, 1.5)));
      }
    }
    report(2, worst < 1e-8, "max relative error " + sci(worst) + " on 273 (r, t) nodes x 2 specs");
  });

  criterion(3, [] {
    double worst = 0.0;
    int inside = 0, flagged = 0, wrong_flags = 0;
    for (const auto& I : {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0})}) {
      for (double g : {0.5, 1.5}) {
        const KernelSpec spec(g, I);
        for (int i = 0; i < 10; ++i) {
          for (int k = 0; k < 10; ++k) {
            const double r = 0.1 + 0.55 * i;
            const double t = 0.2 + 0.5 * k;
            const auto s = P_series(spec, r, t);
            const bool region = g < 1.0 ? t / std::pow(r, g) <= 0.5 : r * std::pow(t, -1.0 / g) <= 2.0;
            if (s.converged != region) ++wrong_flags;
            if (s.converged) {
              ++inside;
              worst = std::max(worst, rel(s.value, P_quadrature(spec, r, t)));
            } else {
              ++flagged;
            }
          }
        }
      }
    }
    report(3, worst < 1e-6 && wrong_flags == 0 && inside > 0,
           "max relative error " + sci(worst) + " at " + std::to_string(inside) + " converged points; " +
               std::to_string(flagged) + " flagged, " + std::to_string(wrong_flags) + " mislabelled");
  });

  criterion(4, [] {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ur(0.0, 5.0), ut(std::log(0.2), std::log(5.0));
    double worst = 0.0;
    int pairs = 0;
    for (double g : {0.5, 1.0, 1.5}) {
      for (const auto& I : {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0})}) {
        const KernelSpec spec(g, I);
        for (int k = 0; k < 25; ++k, ++pairs) {
          const double r = ur(rng), t = std::exp(ut(rng));
          const double lhs = P_quadrature(spec, r, t);
          const double rhs = std::pow(t, -spec.d() / g) * P_quadrature(spec, r * std::pow(t, -1.0 / g), 1.0);
          worst = std::max(worst, rel(lhs, rhs));
        }
      }
    }
    report(4, worst < 1e-8, "max relative error " + sci(worst) + " on " + std::to_string(pairs) + " random pairs");
  });

  const auto t_harness = Clock::now();
  const auto reports = run_checks(HarnessConfig::full());
  std::cout << "(harness: " << reports.size() << " reports in " << sci(seconds_since(t_harness)) << " s)" << std::endl;

  criterion(5, [&] {
    const Rows s = rows(reports, "semigroup");
    report(5, s.count == 4 && s.all_pass && s.worst < 1e-5,
           "max sup-norm residual " + sci(s.worst) + " over " + std::to_string(s.count) + " (gamma, d) cases");
  });

  criterion(6, [&] {
    double round = 0.0;
    for (const auto& I : {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0}), BesselIndex({1.0, 1.0})}) {
      const RadialProfile g(gaussian, DecayHint::exponential(0.5, 2.0));
      std::vector<double> rho(961), val(961);
#pragma omp parallel for
      for (int k = 0; k <= 960; ++k) {
        rho[k] = 0.0125 * k;
        val[k] = radial_transform(I, g, rho[k]);
      }
      const auto hat = RadialProfile::from_samples(rho, val, DecayHint::compact(12.0), 8);
      double err2 = 0.0, norm2 = 0.0;
      for (double r = 0.0; r <= 8.0; r += 0.2) {
        const double w = std::pow(std::max(r, 0.1), I.d() - 1.0);
        err2 += w * std::pow(inverse_radial_transform(I, hat, r) - gaussian(r), 2.0);
        norm2 += w * gaussian(r) * gaussian(r);
      }
      round = std::max(round, std::sqrt(err2 / norm2));
    }
    double pair = 0.0;
    for (double nu : {-0.5, 0.0, 0.5, 1.0, 2.5}) {
      const RadialProfile g(gaussian, DecayHint::exponential(0.5, 2.0));
      for (double rho = 0.0; rho <= 8.0; rho += 0.5) {
        const double ref = std::pow(2.0, nu) * std::tgamma(nu + 1.0) * gaussian(rho);
        pair = std::max(pair, std::abs(hankel_1d(nu, g, rho) - ref) / (std::pow(2.0, nu) * std::tgamma(nu + 1.0)));
      }
    }
    const Rows conv = rows(reports, "convolution_transform");
    report(6, round < 1e-6 && pair < 1e-8 && conv.count > 0 && conv.all_pass && conv.worst < 1e-5,
           "round trip " + sci(round) + ", Gaussian pair " + sci(pair) + ", convolution theorem " + sci(conv.worst));
  });

  criterion(7, [&] {
    const Rows eig = rows(reports, "bessel_eigen");
    const Rows com = rows(reports, "translation_commutes");
    const Rows dia = rows(reports, "transform_diagonalizes");
    const Rows frac = rows(reports, "frac_forms_agree");
    const bool ok = eig.count && com.count && dia.count && frac.count && eig.worst < 1e-5 && com.worst < 1e-4 &&
                    dia.worst < 1e-5 && frac.worst < 1e-3;
    report(7, ok,
           "eigenrelation " + sci(eig.worst) + ", commutation " + sci(com.worst) + ", diagonalization " +
               sci(dia.worst) + ", spectral vs integral " + sci(frac.worst));
  });

  criterion(8, [&] {
    const Rows s = rows(reports, "sphere_multiplier");
    report(8, s.count == 6 && s.all_pass && s.worst < 1e-5,
           "max relative residual " + sci(s.worst) + " over " + std::to_string(s.count) + " (d, r) cases");
  });

  criterion(9, [&] {
    bool ok = true;
    std::string detail;
    for (const auto& id : inequality_check_ids()) {
      const Rows s = rows(reports, id);
      ok = ok && s.count == 1 && s.all_pass && std::isfinite(s.worst);
      detail += id + "=" + sci(s.worst) + " ";
    }
    const Rows c = rows(reports, "contraction");
    ok = ok && c.worst <= 1.0 + 1e-8;
    const Rows m = rows(reports, "multiplier_integrability");
    ok = ok && m.count == 2 && m.all_pass;
    report(9, ok, detail + "multiplier_integrability " + (m.all_pass ? "plateau found" : "no plateau"));
  });

  criterion(10, [] {
    const KernelSpec cauchy_spec(1.0, BesselIndex::laplace(1));
    const KernelSpec spec(1.5, BesselIndex::laplace(1));
    NormGrid g;
    g.X_max = 60.0;
    g.T_max = 4.0;
    g.nodes_x = 200;
    g.nodes_t = 100;
    bool ok = true;
    std::string detail;

    const double p = 1.5;
    const auto fam = build_columns(cauchy_spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}}), CapacityVariant::C, g);
    const auto single = solve_capacity(fam, p);
    const auto u = SpaceTimeGridFunction::sample(
        cauchy_spec.index(), fam.axes, fam.times, fam.time_weights, [&](std::span<const double> x, double t) {
          const double s = t - 1.0;
          return s < fam.layer_length ? 0.0 : s / (std::numbers::pi * (s * s + x[0] * x[0]));
        });
    // ||P_1||_p^p for the Cauchy kernel by x = tan(th); the layer follows s^{1-p}.
    double p1 = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
      const double c2 = std::pow(std::cos(-0.5 * std::numbers::pi + (i + 0.5) * std::numbers::pi / m), 2.0);
      p1 += std::pow(c2 / std::numbers::pi, p) / c2 * std::numbers::pi / m;
    }
    const double layer = p1 * std::pow(fam.layer_length, 2.0 - p) / (2.0 - p);
    const double oracle = std::pow(std::pow(lp_norm_spacetime(u, p, cauchy_spec.index()).value, p) + layer, -1.0 / p);
    const double e_single = rel(single.raw_mass, oracle);
    ok = ok && e_single < 1e-2;
    detail += "singleton " + sci(e_single);

    const auto one = solve_capacity(spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}}), 2.0, CapacityVariant::C, g);
    const auto dup =
        solve_capacity(spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}, {{0.0}, 1.0}}), 2.0, CapacityVariant::C, g);
    const double e_dup = rel(dup.capacity_value, one.capacity_value);
    ok = ok && e_dup <= 1e-4;
    detail += ", duplicate " + sci(e_dup);

    SolverConfig sub;
    sub.monotone_subset = {0};
    const auto three = solve_capacity(spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}, {{2.0}, 1.5}, {{-3.0}, 0.5}}),
                                      2.0, CapacityVariant::C, g, sub);
    ok = ok && three.subset_capacity <= three.capacity_value * (1.0 + 1e-4);
    detail += ", subset " + sci(three.subset_capacity) + " <= " + sci(three.capacity_value);

    const auto two_fam =
        build_columns(spec, CompactSetSpec::from_atoms({{{-25.0}, 1.0}, {{25.0}, 1.0}}), CapacityVariant::C, g);
    const auto two = solve_capacity(two_fam, 2.0);
    double best = INFINITY;
    for (int i = 0; i <= 2000; ++i) best = std::min(best, constraint_norm(two_fam, {i / 2000.0, 1.0 - i / 2000.0}, 2.0));
    const double e_two = rel(two.capacity_value, std::pow(best, -2.0));
    ok = ok && e_two < 0.05;
    detail += ", two-point " + sci(e_two);

    const double gap = std::max({single.duality_gap, one.duality_gap, dup.duality_gap, three.duality_gap, two.duality_gap});
    const int iters = std::max({single.iterations, one.iterations, dup.iterations, three.iterations, two.iterations});
    ok = ok && gap < 1e-4 && iters <= 5000;
    detail += ", gap " + sci(gap) + " in <= " + std::to_string(iters) + " iterations";

    const auto n = solve_capacity(spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}}), 2.0, CapacityVariant::N, g);
    ok = ok && one.capacity_value <= n.capacity_value * (1.0 + 1e-4);
    detail += ", C " + sci(one.capacity_value) + " <= N " + sci(n.capacity_value);

    double slowest = 0.0;
    for (const char* f : {"capacity_singleton.json", "capacity_two_point.json", "capacity_trend.json",
                          "capacity_box.json"}) {
      const auto t0 = Clock::now();
      std::string out;
      const int code = run_tool({"capacity", "--input", std::string(FRACKAP_FIXTURE_DIR) + "/" + f}, out);
      slowest = std::max(slowest, seconds_since(t0));
      ok = ok && code == 0;
    }
    ok = ok && slowest < 300.0;
    detail += ", slowest fixture " + sci(slowest) + " s";
    report(10, ok, detail);
  });

  criterion(11, [] {
    const KernelSpec spec(1.0, BesselIndex::laplace(1));
    NormGrid g;
    g.X_max = 60.0;
    g.T_max = 4.0;
    g.nodes_x = 200;
    g.nodes_t = 100;
    const double p = 1.5;
    const auto tr = refine_and_trend(spec, CompactSetSpec::from_atoms({{{0.0}, 1.0}}), p, CapacityVariant::C, g, 4,
                                     Refinement::TimeExtent);
    bool decreasing = tr.capacities.size() == 4;
    for (std::size_t i = 1; i < tr.capacities.size(); ++i) decreasing = decreasing && tr.capacities[i] < tr.capacities[i - 1];
    const double predicted = predicted_time_decay_rate(spec, p);
    const double q = spec.d() * (p - 1.0) / spec.gamma();
    const bool ok = decreasing && std::abs(tr.rate / predicted - 1.0) <= 0.2;
    report(11, ok,
           "capacities " + sci(tr.capacities.front()) + " .. " + sci(tr.capacities.back()) + ", fitted rate " +
               sci(tr.rate) + " vs (1 - q)/(p - 1) = " + sci(predicted) + " with q = d(p-1)/gamma = " + sci(q));
  });

  criterion(12, [] {
    const fs::path dir = fs::temp_directory_path() / "frackap_acceptance";
    fs::create_directories(dir);
    const std::string tool = FRACKAP_TOOL;
    std::vector<std::string> csv;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = dir / ("verify_" + std::to_string(k) + ".csv");
      fs::remove(out);
      const std::string cmd = "\"" + tool + "\" verify --seed 7 --output \"" + out.string() + "\"";
      const int status = std::system(cmd.c_str());
      if (status != 0) {
        report(12, false, "verify exited with status " + std::to_string(status));
        return;
      }
      csv.push_back(slurp(out));
    }
    report(12, !csv[0].empty() && csv[0] == csv[1],
           "two full verify runs, " + std::to_string(csv[0].size()) + " bytes each, " +
               (csv[0] == csv[1] ? "identical" : "different"));
  });

  std::cout << (12 - failures) << " of 12 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
