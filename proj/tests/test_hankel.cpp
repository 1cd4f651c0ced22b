#include <doctest.h>

#include <cmath>
#include <vector>
#include <numbers>

#include "frackap/errors.hpp"
#include "frackap/hankel.hpp"
#include "frackap/quadrature.hpp"

using namespace frackap;

namespace {

RadialProfile gaussian() {
  return RadialProfile([](double r) { return std::exp(-0.5 * r * r); }, DecayHint::exponential(0.5, 2.0));
}

RadialProfile exponential() { return RadialProfile([](double r) { return std::exp(-r); }, DecayHint::exponential(1.0)); }

}  // namespace

TEST_CASE("hankel_1d Gaussian pair") {
  for (double nu : {-0.5, 0.0, 0.5, 1.5, 4.0}) {
    for (double rho : {0.0, 0.5, 1.0, 3.0, 6.0}) {
      const double ref = std::pow(2.0, nu) * std::tgamma(nu + 1.0) * std::exp(-0.5 * rho * rho);
      CHECK(hankel_1d(nu, gaussian(), rho) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
  CHECK(hankel_1d(-0.5, gaussian(), 0.0) == doctest::Approx(1.2533141373155).epsilon(1e-12));
  // Independent cosine integral at nu = -1/2.
  const double cos_quad =
      integrate_adaptive([](double r) { return std::exp(-0.5 * r * r) * std::cos(2.0 * r); }, 0.0, 40.0, 1e-14).value;
  CHECK(hankel_1d(-0.5, gaussian(), 2.0) == doctest::Approx(cos_quad).epsilon(1e-10));
}

TEST_CASE("hankel_1d moments and the exponential pair") {
  const double m = integrate_adaptive([](double r) { return std::exp(-r) * std::pow(r, 4.0); }, 0.0, 80.0, 1e-14).value;
  CHECK(hankel_1d(1.5, exponential(), 0.0) == doctest::Approx(m).epsilon(1e-10));
  CHECK(hankel_1d(-0.5, exponential(), 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  for (double rho : {0.3, 2.0, 7.0}) {
    CHECK(hankel_1d(-0.5, exponential(), rho) == doctest::Approx(1.0 / (1.0 + rho * rho)).epsilon(1e-9));
  }
}

TEST_CASE("radial_transform") {
  const BesselIndex lap = BesselIndex::laplace(1);
  for (double rho : {0.0, 1.0, 2.5}) {
    CHECK(radial_transform(lap, gaussian(), rho) ==
          doctest::Approx(std::sqrt(2 * std::numbers::pi) * std::exp(-0.5 * rho * rho)).epsilon(1e-10));
  }
  CHECK(radial_transform(BesselIndex({1.0}), exponential(), 0.0) == doctest::Approx(1.0).epsilon(1e-11));
  const BesselIndex I({1.0, 2.0});
  const double moment =
      integrate_adaptive([](double r) { return std::exp(-0.5 * r * r) * std::pow(r, 4.0); }, 0.0, 40.0, 1e-14).value;
  CHECK(radial_transform(I, gaussian(), 0.0) == doctest::Approx(sphere_measure(I) * moment).epsilon(1e-10));
}

TEST_CASE("inverse_radial_transform") {
  const RadialProfile spectral([](double r) { return std::exp(-r); }, DecayHint::exponential(1.0));
  for (double r : {0.0, 0.5, 2.0, 10.0}) {
    CHECK(inverse_radial_transform(BesselIndex::laplace(1), spectral, r) ==
          doctest::Approx(1.0 / (std::numbers::pi * (1.0 + r * r))).epsilon(1e-9));
  }
  CHECK(inverse_radial_transform(BesselIndex({1.0}), spectral, 0.0) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("Gaussian round trip on [0, 10]") {
  for (const auto& I : {BesselIndex::laplace(1), BesselIndex::laplace(3), BesselIndex({1.0}), BesselIndex({0.5, 2.0})}) {
    // Forward transform tabulated once; it is below 1e-30 beyond rho = 12.
    std::vector<double> rho, val;
    for (int k = 0; k <= 960; ++k) {
      rho.push_back(0.0125 * k);
      val.push_back(radial_transform(I, gaussian(), rho.back()));
    }
    const auto hat = RadialProfile::from_samples(rho, val, DecayHint::compact(12.0), 8);
    double err2 = 0.0;
    double norm2 = 0.0;
    for (double r = 0.0; r <= 10.0; r += 0.25) {
      const double back = inverse_radial_transform(I, hat, r);
      err2 += std::pow(back - gaussian()(r), 2.0);
      norm2 += std::pow(gaussian()(r), 2.0);
    }
    CHECK(std::sqrt(err2 / norm2) < 1e-6);
  }
}

TEST_CASE("decay hints") {
  CHECK(decay_hint_consistent(gaussian(), 0.0));
  const RadialProfile wrong([](double r) { return 1.0 / (1.0 + r * r); }, DecayHint::exponential(4.0, 2.0));
  CHECK_FALSE(decay_hint_consistent(wrong, 0.0));
  // r^{-2} at nu = 1 is not integrable against r^3.
  const RadialProfile heavy([](double r) { return 1.0 / (1.0 + r * r); }, DecayHint::power(-2.0));
  CHECK_THROWS_AS(hankel_1d(1.0, heavy, 0.0), NonConvergenceError);
  const RadialProfile heavier([](double r) { return 1.0 / (1.0 + r); }, DecayHint::power(-1.0));
  CHECK_THROWS_AS(hankel_1d(1.0, heavier, 1.0), NonConvergenceError);
}

TEST_CASE("sampled profiles") {
  std::vector<double> nodes, values;
  for (int i = 0; i <= 800; ++i) {
    nodes.push_back(0.0125 * i);
    values.push_back(std::exp(-0.5 * nodes.back() * nodes.back()));
  }
  const auto p = RadialProfile::from_samples(nodes, values, DecayHint::compact(10.0), 8);
  CHECK(p.samples().has_value());
  CHECK(p(1.2345) == doctest::Approx(std::exp(-0.5 * 1.2345 * 1.2345)).epsilon(1e-12));
  CHECK(hankel_1d(0.0, p, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
}
