#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "frackap/errors.hpp"
#include "frackap/kernels.hpp"

using namespace frackap;

namespace {

constexpr double pi = std::numbers::pi;

// gamma = 1 closed forms, normalised to unit mass: n = 1, a = 0 and a = (1).
double cauchy(double r, double t) { return t / (pi * (t * t + r * r)); }
double poisson_a1(double r, double t) { return t / std::pow(t * t + r * r, 1.5); }

}  // namespace

TEST_CASE("P_quadrature at gamma = 1") {
  const KernelSpec lap(1.0, BesselIndex::laplace(1));
  const KernelSpec bes(1.0, BesselIndex({1.0}));
  CHECK(P_quadrature(lap, 0.0, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-12));
  CHECK(P_quadrature(bes, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double r : {0.0, 0.7, 3.0, 5.0}) {
    for (double t : {0.2, 1.0, 5.0}) {
      CHECK(P_quadrature(lap, r, t) == doctest::Approx(cauchy(r, t)).epsilon(1e-9));
      CHECK(P_quadrature(bes, r, t) == doctest::Approx(poisson_a1(r, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("P_series at gamma = 1 is the closed form") {
  for (const auto& I : {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({0.5, 2.0})}) {
    const KernelSpec spec(1.0, I);
    for (double r : {0.5, 1.0, 2.0}) {
      for (double t : {0.5, 1.0, 2.0}) {
        const auto s = P_series(spec, r, t);
        if (!s.converged) continue;
        CHECK(s.value == doctest::Approx(P_quadrature(spec, r, t)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("P_series leading behaviour") {
  SUBCASE("gamma = 0.5: P r^(d+gamma) / t settles as t -> 0") {
    const KernelSpec spec(0.5, BesselIndex({1.0}));
    const double r = 2.0;
    auto ratio = [&](double t) {
      const auto s = P_series(spec, r, t);
      REQUIRE(s.converged);
      return s.value * std::pow(r, spec.d() + 0.5) / t;
    };
    const double a = ratio(1e-2), b = ratio(1e-3), c = ratio(1e-4);
    CHECK(std::abs(c - b) < 0.2 * std::abs(b - a));
    CHECK(std::abs(c - b) / c < 1e-3);
  }
  SUBCASE("gamma = 1.5: P(r, 1) / P(0, 1) -> 1 as r -> 0") {
    const KernelSpec spec(1.5, BesselIndex({2.0}));
    const double p0 = P_quadrature(spec, 0.0, 1.0);
    CHECK(P_quadrature(spec, 1e-3, 1.0) / p0 == doctest::Approx(1.0).epsilon(1e-5));
    const auto s = P_series(spec, 1e-3, 1.0);
    REQUIRE(s.converged);
    CHECK(s.value / p0 == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("series agrees with quadrature inside its region and flags the rest") {
  for (const auto& I : {BesselIndex::laplace(1), BesselIndex({1.0}), BesselIndex({2.0})}) {
    for (double g : {0.5, 1.5}) {
      const KernelSpec spec(g, I);
      int inside = 0;
      for (int i = 0; i < 10; ++i) {
        for (int k = 0; k < 10; ++k) {
          const double r = 0.1 + 0.55 * i;
          const double t = 0.2 + 0.5 * k;
          const auto s = P_series(spec, r, t);
          const bool region = g < 1.0 ? t / std::pow(r, g) <= 0.5 : r * std::pow(t, -1.0 / g) <= 2.0;
          CHECK(s.converged == region);
          if (s.converged) {
            ++inside;
            CHECK(s.value == doctest::Approx(P_quadrature(spec, r, t)).epsilon(1e-6));
          }
        }
      }
      CHECK(inside > 0);
    }
  }
}

TEST_CASE("kernel table") {
  const KernelSpec spec(1.5, BesselIndex({1.0}));
  const auto table = cached_table(spec);
  SUBCASE("positivity and accuracy") {
    for (double v : table->values()) CHECK(v > 0.0);
    CHECK(table->accuracy() < 1e-6);
    for (double r : {0.013, 0.61, 1.7, 4.4, 9.1}) {
      CHECK(P_eval(*table, r, 1.0) == doctest::Approx(P_quadrature(spec, r, 1.0)).epsilon(1e-6));
    }
  }
  SUBCASE("scaling law") {
    CHECK(P_eval(*table, 1.0, 0.3) == doctest::Approx(P_quadrature(spec, 1.0, 0.3)).epsilon(1e-6));
    const double t = 2.7;
    CHECK(P_eval(*table, 0.8, t) ==
          doctest::Approx(std::pow(t, -spec.d() / 1.5) * P_eval(*table, 0.8 * std::pow(t, -1 / 1.5), 1.0)).epsilon(1e-14));
  }
  SUBCASE("head value") { CHECK(P_eval(*table, 0.0, 1.0) == doctest::Approx(table->values().front()).epsilon(1e-14)); }
  SUBCASE("text round trip") {
    std::stringstream ss;
    table->write(ss);
    const auto back = KernelTable::read(ss);
    CHECK(back.spec() == spec);
    for (double r : {0.0, 0.37, 2.9, 2.0 * table->r_max()}) CHECK(back.base(r) == doctest::Approx(table->base(r)).epsilon(1e-15));
    std::stringstream bad("frackap-table v0\n");
    CHECK_THROWS_AS(KernelTable::read(bad), FormatError);
  }
  SUBCASE("scaled copy") {
    const auto scaled = table->with_scaled_values(1.01);
    CHECK(scaled.base(0.5) == doctest::Approx(1.01 * table->base(0.5)).epsilon(1e-13));
  }
}

TEST_CASE("tail law beyond the table") {
  const KernelSpec spec(0.5, BesselIndex::laplace(1));
  const auto table = cached_table(spec);
  // Far enough out that the second term of the expansion is below 1e-3.
  const double R = 1e4 * table->r_max();
  const double slope = std::log(table->base(2.0 * R) / table->base(R)) / std::log(2.0);
  CHECK(slope == doctest::Approx(-(spec.d() + 0.5)).epsilon(1e-2));
}

TEST_CASE("local comparability on bounded sets") {
  for (double g : {0.5, 1.5}) {
    const KernelSpec spec(g, BesselIndex({1.0}));
    const auto table = cached_table(spec);
    double lo = INFINITY, hi = 0.0;
    for (int i = 1; i <= 10; ++i) {
      for (int k = 1; k <= 10; ++k) {
        const double r = 0.2 * i, t = 0.2 * k;
        const double q = P_eval(*table, r, t) * std::pow(std::pow(t, 2 / g) + r * r, 0.5 * (spec.d() + g)) / t;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
    }
    const double C = std::max(hi, 1.0 / lo);
    MESSAGE("gamma=" << g << " comparability constant C=" << C);
    CHECK(std::isfinite(C));
    CHECK(lo > 0.0);
  }
}

TEST_CASE("G_kernel") {
  // Laplace case: 2^n times the unit-mass kernels exp(-r) / 2 (n = 1) and
  // exp(-r) / (4 pi r) (n = 3), both at nu = 2.
  CHECK(G_kernel(BesselIndex::laplace(1), 2.0, 1.3) == doctest::Approx(std::exp(-1.3)).epsilon(1e-10));
  CHECK(G_kernel(BesselIndex::laplace(3), 2.0, 1.0) == doctest::Approx(8.0 * std::exp(-1.0) / (4 * pi)).epsilon(1e-10));
  const BesselIndex I({1.0});
  CHECK(G_kernel(I, 2.0, 1.0) > G_kernel(I, 2.0, 2.0));
  // Multiplier (1 + rho^2)^{-1}: n = 1, a = (2) has d - nu = 1, a finite profile at 0.
  const BesselIndex J({2.0});
  const RadialProfile G([&](double r) { return r > 0 ? G_kernel(J, 2.0, r) : G_kernel(J, 2.0, 1e-300); },
                        DecayHint::exponential(1.0));
  for (double rho : {0.0, 1.0, 2.0}) {
    CHECK(radial_transform(J, G, rho) == doctest::Approx(1.0 / (1.0 + rho * rho)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(G_kernel(I, 0.0, 1.0), DomainError);
}

TEST_CASE("mollified_profile") {
  const KernelSpec spec(1.0, BesselIndex({2.0}));
  const auto m = mollified_profile(spec, 1.0);
  CHECK(radial_transform(spec.index(), m, 1.0) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-5));
  CHECK(radial_transform(spec.index(), m, 0.0) == doctest::Approx(1.0).epsilon(1e-5));
  const auto early = mollified_profile(spec, 1e-4);
  CHECK(early(1.0) == doctest::Approx(G_kernel(spec.index(), 2.0, 1.0)).epsilon(1e-3));
}

TEST_CASE("shift_index") {
  const BesselIndex I({1.0});
  const auto J = shift_index(I, 1);
  CHECK(J.a(0) == 3.0);
  CHECK(I.d() == 2.0);
  CHECK(J.d() == 4.0);
  CHECK(shift_index(J, 1).a(0) == 5.0);
  CHECK(shift_index(BesselIndex({1.0, 2.0}), 2).n() == 2);
  CHECK_THROWS_AS(shift_index(I, 2), DomainError);
}
