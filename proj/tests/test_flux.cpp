#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/norms.hpp"
#include "support.hpp"

using namespace fburgers;
using std::numbers::pi;

namespace {

// independent least-squares slope of log|f'| against log y
double growth_oracle(const std::function<double(double)>& fp, double lo, double hi) {
  const int n = 50;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double y = lo * std::pow(hi / lo, double(i) / (n - 1));
    double lx = std::log(y), ly = std::log(std::abs(fp(y)));
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("flux") {

TEST_CASE("Burgers flux passes validation") {
  auto r = validate(flux::burgers());
  CHECK(r.pass);
  CHECK(r.sigma_observed == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.h1_fit == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.derivative_mismatch < 1e-6);
}

TEST_CASE("quartic growth is rejected") {
  FluxSpec f = flux::burgers_quartic_mix(1.0);
  CHECK(growth_oracle(f.deriv, 10, 100) > 2.9);
  CHECK(fit_growth_exponent(f, 10, 100) == doctest::Approx(growth_oracle(f.deriv, 10, 100)).epsilon(0.01));
  CHECK_THROWS_AS(validate(f), GrowthError);
}

TEST_CASE("a tiny quartic coefficient stays admissible") {
  CHECK(validate(flux::burgers_quartic_mix(1e-6)).pass);
}

TEST_CASE("cosh is convex but grows too fast") {
  FluxSpec f = flux::cosh_capped(5.0);
  CHECK(growth_oracle(f.deriv, 5, 50) > 2.0);
  try {
    validate(f);
    FAIL("expected GrowthError");
  } catch (const GrowthError& e) {
    CHECK(e.exponent() >= 2.0);
  }
}

TEST_CASE("non-convex flux reports the violating point") {
  FluxSpec f = flux::burgers();
  f.eval = [](double y) { return 0.5 * y * y + 0.6 * std::cos(y); };
  f.deriv = [](double y) { return y - 0.6 * std::sin(y); };
  f.deriv2 = [](double y) { return 1.0 - 0.6 * std::cos(y); };
  f.sigma = 0.5;
  f.batch = nullptr;
  try {
    validate(f);
    FAIL("expected ConvexityError");
  } catch (const ConvexityError& e) {
    CHECK(1.0 - 0.6 * std::cos(e.y()) < 0.5);
  }
}

TEST_CASE("by_name lookup") {
  CHECK(flux::by_name("burgers").name == "burgers");
  CHECK_THROWS_AS(flux::by_name("nope"), InvalidInput);
}

TEST_CASE("nonlinear term of the zero field is zero") {
  CHECK(nonlinear_term(SpectralField::zeros(Grid(64)), flux::burgers()).is_zero());
}

TEST_CASE("Burgers term of the sine is -pi sin(4 pi x)") {
  Grid g(64);
  auto n = inverse_transform(nonlinear_term(fbtest::sine(g), flux::burgers()));
  for (std::size_t j = 0; j < 64; ++j) CHECK(std::abs(n[j] + pi * std::sin(4 * pi * g.x(j))) < 1e-12);
}

TEST_CASE("output has zero mean and is dealiased on random fields") {
  std::mt19937_64 rng(1);
  Grid g(96);
  for (int trial = 0; trial < 100; ++trial) {
    auto n = nonlinear_term(fbtest::random_field(g, 40, rng), flux::burgers());
    CHECK(n.coeffs()[0] == Complex(0.0, 0.0));
    for (std::size_t k = g.dealias_cutoff() + 1; k < g.n_modes(); ++k) CHECK(n.coeffs()[k] == Complex(0.0, 0.0));
  }
}

TEST_CASE("the nonlinear term is energy neutral") {
  std::mt19937_64 rng(12);
  Grid g(256);
  for (int trial = 0; trial < 30; ++trial) {
    auto u = dealias(fbtest::random_field(g, 120, rng));
    auto n = nonlinear_term(u, flux::burgers());
    auto uu = inverse_transform(u);
    auto nn = inverse_transform(n);
    double dot = 0.0;
    for (std::size_t j = 0; j < uu.size(); ++j) dot += uu[j] * nn[j];
    dot *= g.dx();
    CHECK(std::abs(dot) <= 1e-9 * norm(u, NormRequest::hs(0)) * norm(n, NormRequest::hs(0)));
  }
}

TEST_CASE("Burgers reflection symmetry") {
  // v(x) = -u(-x) maps to term(v)(x) = -term(u)(-x); for even f also term(-u) = term(u)
  std::mt19937_64 rng(6);
  Grid g(128);
  auto u = fbtest::random_field(g, 40, rng);
  std::vector<Complex> vc(g.n_modes());
  for (std::size_t k = 0; k < vc.size(); ++k) vc[k] = -std::conj(u.coeffs()[k]);
  auto nu = nonlinear_term(u, flux::burgers());
  auto nv = nonlinear_term(SpectralField(g, vc), flux::burgers());
  auto nneg = nonlinear_term(combine(-1.0, u, 0.0, u), flux::burgers());
  double scale = norm(nu, NormRequest::hs(0));
  for (std::size_t k = 0; k < g.n_modes(); ++k) {
    CHECK(std::abs(nv.coeffs()[k] + std::conj(nu.coeffs()[k])) <= 1e-9 * scale);
    CHECK(std::abs(nneg.coeffs()[k] - nu.coeffs()[k]) <= 1e-9 * scale);
  }
}

TEST_CASE("overflowing flux evaluation is reported") {
  Grid g(32);
  auto u = fbtest::sine(g, 1000.0);
  CHECK_THROWS_AS(nonlinear_term(u, flux::cosh_capped()), NonFiniteError);
}

}
