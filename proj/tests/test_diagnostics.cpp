#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fburgers/diagnostics.hpp"
#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/norms.hpp"
#include "fburgers/stepper.hpp"
#include "support.hpp"

using namespace fburgers;
using std::numbers::pi;

namespace {

StepperConfig config(double nu, double alpha) {
  StepperConfig c;
  c.nu = nu;
  c.alpha = alpha;
  return c;
}

SolverRun static_sine(std::size_t n, double amp = 1.0) {
  const double times[] = {0.0, 0.5, 1.0};
  return static_run(fbtest::sine(Grid(n), amp), times, config(1e-3, 2.0));
}

const TimeWindow kUnit{0.0, 1.0, 1.0};

SolverRun burgers_run() {
  auto cfg = config(0.004, 2.0);
  cfg.t_end = 1.0;
  MonitorConfig m;
  m.sample_times = geometric_schedule(1e-3, 1.0, 80);
  m.norms = {NormRequest::lp(kInf)};
  return integrate(fbtest::sine(Grid(512)), cfg, flux::burgers(), m);
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("D of the sine") {
  auto d = compute_D(fbtest::sine(Grid(4096)));
  CHECK(d.inv_l1 == doctest::Approx(pi / 2).epsilon(1e-6));
  CHECK(d.w1inf == doctest::Approx(2 * pi).epsilon(1e-12));
  CHECK(d.value == doctest::Approx(6.2832).epsilon(1e-5));
}

TEST_CASE("D of a small sine is set by the inverse L1 norm") {
  auto d = compute_D(fbtest::sine(Grid(4096), 0.1));
  CHECK(d.inv_l1 == doctest::Approx(15.708).epsilon(1e-4));
  CHECK(d.w1inf == doctest::Approx(0.2 * pi).epsilon(1e-12));
  CHECK(d.value == d.inv_l1);
}

TEST_CASE("D bounds the low-order norms of the initial data") {
  for (double amp : {1.0, 0.1}) {
    auto u = fbtest::sine(Grid(4096), amp);
    const double D = compute_D(u).value;
    CHECK(D > 1.0);
    for (int m : {0, 1}) {
      for (double p : {1.0, 2.0, kInf}) {
        const double v = norm(u, NormRequest::wmp(m, p));
        CHECK(v >= 1.0 / D * (1 - 1e-12));
        CHECK(v <= D * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("zero initial data is degenerate") {
  CHECK_THROWS_AS(compute_D(SpectralField::zeros(Grid(32))), DegenerateInitialData);
}

TEST_CASE("range partition constants") {
  auto r = RangePartition::make(4, 2.0, 1e-3);
  CHECK(r.beta == 1.0);
  CHECK(r.C1 == doctest::Approx(1.0 / 64));
  CHECK(r.C2 == doctest::Approx(1.0 / 5120));
  CHECK(r.nu0 == doctest::Approx(1.0 / 96));
  CHECK(r.j1_upper() < r.j2_upper());
  CHECK(r.C1 / r.C2 >= 5 * 16);
  CHECK(r.in_j1(r.j1_upper()));
  CHECK(r.in_j2(r.j2_upper()));
  CHECK(r.in_j3(1.0));
  CHECK_THROWS_AS(RangePartition::make(0.5, 2.0, 1e-3), InvalidInput);
  CHECK_THROWS_AS(RangePartition::make(4, 2.0, 0.02), InvalidInput);
  auto r15 = RangePartition::make(2, 1.5, 1e-3);
  CHECK(r15.beta == doctest::Approx(2.0));
  CHECK(r15.nu0 == doctest::Approx(std::sqrt(1.0 / 24)));
}

TEST_CASE("time window arithmetic") {
  auto w = TimeWindow::make(2.0, 1.0, 1.0);
  CHECK(w.T1 == doctest::Approx(0.0625));
  CHECK(w.T2 == doctest::Approx(4.0));
  auto tight = TimeWindow::make(1.01, 100.0, 1e-3);
  CHECK(tight.T2 / tight.T1 >= 1.5);
}

TEST_CASE("time window needs a covering run") {
  auto cfg = config(0.05, 2.0);
  cfg.t_end = 0.5;
  auto run = integrate(fbtest::sine(Grid(64)), cfg, flux::burgers(), MonitorConfig{});
  auto D = compute_D(fbtest::sine(Grid(64)));
  CHECK_THROWS_AS(time_window(D, 1.0, run), WindowNotCovered);
}

TEST_CASE("static sine structure functions") {
  auto run = static_sine(4096);
  const double dx = 1.0 / 4096;
  for (std::size_t j : {1u, 5u, 100u, 1024u, 2048u, 3000u}) {
    const double ell = j * dx;
    CHECK(structure_function(run, kUnit, 2, ell) == doctest::Approx(2 * std::pow(std::sin(pi * ell), 2)).epsilon(1e-12));
    CHECK(structure_function(run, kUnit, 0, ell) == 1.0);
    CHECK(flatness(run, kUnit, ell) == doctest::Approx(1.5).epsilon(1e-10));
  }
  CHECK(structure_function(run, kUnit, 2, 0.5) == doctest::Approx(2.0));
  CHECK(structure_function(run, kUnit, 1, 0.5) == doctest::Approx(4 / pi).epsilon(1e-6));
}

TEST_CASE("flatness of the zero field is degenerate") {
  const double times[] = {0.0, 1.0};
  auto run = static_run(SpectralField::zeros(Grid(64)), times, config(1e-3, 2.0));
  CHECK_THROWS_AS(flatness(run, kUnit, 0.25), DegenerateFlatness);
  CHECK(energy_spectrum(run, kUnit, 3) == 0.0);
}

TEST_CASE("shifts must be on the lattice") {
  Grid g(64);
  CHECK(lattice_index(g, 3.0 / 64) == 3);
  CHECK(lattice_index(g, 1.0) == 64);
  CHECK_THROWS_AS(lattice_index(g, 0.0), LatticeShiftError);
  CHECK_THROWS_AS(lattice_index(g, 0.01), LatticeShiftError);
  CHECK_THROWS_AS(lattice_index(g, 65.0 / 64), LatticeShiftError);
}

TEST_CASE("static sine spectrum") {
  auto run = static_sine(64);
  CHECK(energy_spectrum(run, kUnit, 1, 2.0) == doctest::Approx(0.125));
  CHECK(energy_spectrum(run, kUnit, 1, 1.0) == doctest::Approx(0.25));
  CHECK(energy_spectrum(run, kUnit, 5, 2.0) == 0.0);
}

TEST_CASE("band counts") {
  CHECK(band_count(1, 2.0) == 4);
  CHECK(band_count(3, 2.0) == 10);
  CHECK(band_count(7, 1.0) == 2);
  CHECK(band_count(4, 1.5) == 8);
}

TEST_CASE("M = 1 bands reproduce the energy") {
  std::mt19937_64 rng(31);
  Grid g(128);
  auto u = fbtest::random_field(g, 60, rng);
  const double times[] = {0.0, 1.0};
  auto run = static_run(u, times, config(1e-3, 2.0));
  double sum = 0.0;
  for (std::size_t k = 1; k < g.nyquist(); ++k) sum += 2 * energy_spectrum(run, kUnit, k, 1.0);
  const double e = std::pow(norm(u, NormRequest::hs(0)), 2);
  CHECK(std::abs(sum - e) <= 1e-8 * e);
}

TEST_CASE("time averages") {
  const double t[] = {0.0, 0.3, 0.7, 1.0, 2.0};
  const double c[] = {3.0, 3.0, 3.0, 3.0, 3.0};
  const double lin[] = {1.0, 1.6, 2.4, 3.0, 5.0};
  const TimeWindow w{0.2, 1.5, 1.0};
  CHECK(time_average(t, c, w, 1.0) == doctest::Approx(3.0));
  CHECK(time_average(t, c, w, 2.0) == doctest::Approx(3.0));
  CHECK(time_average(t, lin, w, 1.0) == doctest::Approx(1.0 + 2.0 * 0.85));
  CHECK(time_average(t, lin, w, 2.0) >= time_average(t, lin, w, 1.0));
  CHECK_THROWS_AS(time_average(t, c, TimeWindow{0.5, 2.5, 1.0}, 1.0), WindowNotCovered);
}

TEST_CASE("heat flow budget") {
  auto cfg = config(0.01, 2.0);
  cfg.t_end = 0.5;
  cfg.allow_underresolved = true;
  MonitorConfig m;
  m.sample_times = geometric_schedule(1e-3, 0.5, 200);
  auto run = integrate(fbtest::sine(Grid(64)), cfg, flux::zero(), m);
  CHECK(std::abs(dissipation_residual(run, 0.0, 0.5)) < 1e-6);
  auto zero = integrate(SpectralField::zeros(Grid(64)), cfg, flux::zero(), m);
  CHECK(dissipation_residual(zero, 0.0, 0.5) == 0.0);
}

TEST_CASE("properties of a decaying Burgers run") {
  auto run = burgers_run();
  const TimeWindow w{0.2, 1.0, 1.0};
  const double dx = run.grid().dx();
  for (double p : {1.0, 2.0, 3.0, 4.0}) {
    CHECK(structure_function(run, w, p, dx) <= structure_function(run, w, p, 2 * dx));
    const double bound = std::pow(2.0, p) * time_average(run, w, [p](const DiagnosticsRecord& r) { return std::pow(r.norms.at("Linf"), p); });
    for (double ell : {dx, 10 * dx, 0.25, 0.5}) CHECK(structure_function(run, w, p, ell) <= bound * (1 + 1e-12));
  }
  auto en = [](const DiagnosticsRecord& r) { return r.energy; };
  CHECK(time_average(run, w, en, 2.0) >= time_average(run, w, en, 1.0));
  CHECK(std::abs(dissipation_residual(run, 0.0, 1.0)) < 1e-4);
}

TEST_CASE("batched structure table matches single evaluations") {
  auto run = burgers_run();
  const TimeWindow w{0.2, 1.0, 1.0};
  const double orders[] = {0.5, 2.0, 4.0};
  const std::size_t shifts[] = {1, 7, 64};
  auto table = structure_functions(run, w, orders, shifts);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(table.values[i][j] == doctest::Approx(structure_function(run, w, orders[i], shifts[j] * run.grid().dx())).epsilon(1e-13));
  const std::size_t ks[] = {1, 4, 30};
  auto e = energy_spectra(run, w, ks, 2.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(e[i] == doctest::Approx(energy_spectrum(run, w, ks[i], 2.0)).epsilon(1e-13));
}

}
