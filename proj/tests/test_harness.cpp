#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fburgers/errors.hpp"
#include "fburgers/harness.hpp"
#include "support.hpp"

using namespace fburgers;
using std::numbers::pi;

namespace {

Target norm_target(NormRequest r, Convention c = Convention::Moment) {
  Target t;
  t.kind = TargetKind::NormVsNu;
  t.norm = r;
  t.convention = c;
  return t;
}

Target target(TargetKind k, Range r, double p = 2.0) {
  Target t;
  t.kind = k;
  t.range = r;
  t.p = p;
  return t;
}

SweepPlan small_plan(std::vector<double> nus) {
  SweepPlan plan;
  plan.alpha = 2.0;
  plan.nu_list = std::move(nus);
  plan.n = 2048;
  plan.K = 1.0;
  plan.ranges.j1_mode = "crossover";
  plan.n_samples = 160;
  plan.targets = default_targets();
  return plan;
}

const SweepReport& smoke_sweep() {
  static const SweepReport rep = run_sweep(small_plan({0.008, 0.005, 0.003}));
  return rep;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("default initial condition") {
  Grid g(64);
  auto u = InitialCondition{}.sample(g);
  auto v = inverse_transform(u);
  for (std::size_t j = 0; j < 64; ++j) {
    const double x = g.x(j);
    CHECK(v[j] == doctest::Approx(std::sin(2 * pi * x) + 0.6 * std::sin(4 * pi * x + 1)).epsilon(1e-12));
  }
  InitialCondition m{"modes", {{3, 0.5, 0.2}}};
  CHECK(std::abs(m.sample(g).coeffs()[3]) == doctest::Approx(0.25));
  CHECK_THROWS_AS((InitialCondition{"nope", {}}.sample(g)), InvalidInput);
}

TEST_CASE("exponent examples") {
  CHECK(theoretical_exponent(norm_target(NormRequest::hs(1)), 1.5) == doctest::Approx(-1.0));
  CHECK(expected_slope(norm_target(NormRequest::hs(1), Convention::Power), 1.5, 2.0) == doctest::Approx(-2.0));
  CHECK(expected_slope(norm_target(NormRequest::hs(1), Convention::Moment), 1.5, 2.0) == doctest::Approx(-1.0));
  CHECK(theoretical_exponent(norm_target(NormRequest::wmp(1, kInf)), 2.0) == doctest::Approx(-1.0));
  CHECK(theoretical_exponent(norm_target(NormRequest::wmp(1, 1)), 2.0) == doctest::Approx(0.0));
  CHECK(theoretical_exponent(norm_target(NormRequest::wmp(2, 2)), 1.5) == doctest::Approx(-3.0));
  CHECK(theoretical_exponent(norm_target(NormRequest::lp(2)), 1.5) == doctest::Approx(0.0));
  CHECK(theoretical_exponent(norm_target(NormRequest::hs(0.75)), 2.0) == doctest::Approx(-0.25));
  CHECK(theoretical_exponent(target(TargetKind::SpVsEll, Range::J2, 4), 2.0) == 1.0);
  CHECK(theoretical_exponent(target(TargetKind::SpVsEll, Range::J2, 0.5), 2.0) == 0.5);
  CHECK(theoretical_exponent(target(TargetKind::SpVsEll, Range::J1, 3), 1.5) == 3.0);
  CHECK(theoretical_exponent(target(TargetKind::SpVsNu, Range::J1, 3), 1.5) == doctest::Approx(-4.0));
  CHECK(theoretical_exponent(target(TargetKind::SpVsNu, Range::J1, 0.5), 2.0) == 0.0);
  CHECK(theoretical_exponent(target(TargetKind::SpectrumVsK, Range::J2), 1.5) == -2.0);
  CHECK(theoretical_exponent(target(TargetKind::FlatnessVsEll, Range::J2), 1.5) == -1.0);
}

TEST_CASE("the classical endpoint has beta = 1") {
  SweepPlan p;
  p.alpha = 2.0;
  CHECK(p.beta() == 1.0);
  p.alpha = 1.25;
  CHECK(p.beta() == doctest::Approx(4.0));
}

TEST_CASE("targets without a stated exponent are unsupported") {
  CHECK_THROWS_AS(theoretical_exponent(target(TargetKind::SpVsNu, Range::J2), 2.0), UnsupportedTarget);
  CHECK_THROWS_AS(theoretical_exponent(target(TargetKind::SpectrumVsK, Range::J1), 2.0), UnsupportedTarget);
  CHECK_THROWS_AS(theoretical_exponent(target(TargetKind::FlatnessVsEll, Range::J1), 2.0), UnsupportedTarget);
}

TEST_CASE("exact power laws") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {0.5, 1.0, 2.0, 7.0}) pts.emplace_back(x, 3 * x * x);
  auto f = fit_loglog(pts);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 4);
  const std::pair<double, double> three[] = {{1, 1}, {10, 0.01}, {100, 0.0001}};
  CHECK(fit_loglog(three).slope == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("noisy inverse law") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 20; ++i) {
    const double x = std::pow(10.0, 2.0 * i / 19.0);
    pts.emplace_back(x, (1.0 + nd(rng)) / x);
  }
  auto f = fit_loglog(pts);
  CHECK(f.slope >= -1.1);
  CHECK(f.slope <= -0.9);
  CHECK(f.r2 <= 1.0);
  CHECK(f.r2 >= 0.0);
}

TEST_CASE("fit preconditions") {
  const std::pair<double, double> two[] = {{1, 1}, {2, 2}};
  CHECK_THROWS_AS(fit_loglog(two), InvalidInput);
  const std::pair<double, double> unordered[] = {{1, 1}, {3, 2}, {2, 2}};
  CHECK_THROWS_AS(fit_loglog(unordered), InvalidInput);
  const std::pair<double, double> negative[] = {{1, 1}, {2, -2}, {3, 2}};
  CHECK_THROWS_AS(fit_loglog(negative), LogDomainError);
  const std::pair<double, double> decreasing[] = {{3, 1}, {2, 2}, {1, 3}};
  CHECK_NOTHROW(fit_loglog(decreasing));
}

TEST_CASE("pass means the slope is within tolerance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    FitResult f;
    f.slope = ud(rng);
    const double th = ud(rng), tol = std::abs(ud(rng)) / 3;
    grade(f, th, tol, Check::TwoSided);
    CHECK(f.pass == (std::abs(f.slope - th) <= tol));
    CHECK(f.abs_error == std::abs(f.slope - th));
    grade(f, th, tol, Check::AtLeast);
    CHECK(f.pass == (f.slope >= th));
    grade(f, th, tol, Check::AtMost);
    CHECK(f.pass == (f.slope <= th));
  }
}

TEST_CASE("plan validation") {
  auto p = small_plan({0.008, 0.005});
  CHECK_NOTHROW(p.validate());
  p.nu_list = {0.005, 0.008};
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p.nu_list = {0.5};
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p.nu_list = {1e-4};
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  SweepPlan automatic;
  automatic.alpha = 2.0;
  automatic.c_res = 0.5;
  CHECK(automatic.grid_size(1e-3) == 2048);
  CHECK(automatic.grid_size(0.1) == 256);
}

TEST_CASE("shift and wavenumber tables") {
  auto s = default_shifts(1024);
  CHECK(s.front() == 1);
  CHECK(s.back() == 512);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  for (std::size_t j = 1; j <= 16; ++j) CHECK(s[j - 1] == j);
  auto k = default_wavenumbers(1024, 2.0);
  CHECK(k.front() == 1);
  CHECK(k.back() <= 170);
  CHECK(k.back() * 1.08 > 170);
  for (std::size_t i = 1; i < k.size(); ++i) CHECK(k[i] > k[i - 1]);
}

TEST_CASE("a single viscosity gives within-run fits and skipped viscosity fits") {
  auto rep = run_sweep(small_plan({0.005}));
  REQUIRE_FALSE(rep.aborted);
  REQUIRE(rep.runs.size() == 1);
  bool any_within = false;
  for (const auto& row : rep.fits) {
    if (row.target.kind == TargetKind::NormVsNu) {
      CHECK(row.skipped);
      CHECK(std::isnan(row.nu));
    } else if (!row.skipped) {
      any_within = true;
      CHECK(row.nu == 0.005);
    }
  }
  CHECK(any_within);
}

TEST_CASE("every target is fitted or explicitly skipped") {
  const auto& rep = smoke_sweep();
  REQUIRE_FALSE(rep.aborted);
  for (const auto& t : rep.plan.targets) {
    const auto n = std::count_if(rep.fits.begin(), rep.fits.end(), [&](const FitRow& r) { return r.target == t; });
    CHECK(n >= 1);
  }
  for (const auto& r : rep.fits) CHECK((r.skipped ? !r.skip_reason.empty() : r.fit.n_points >= 3));
}

TEST_CASE("smoke sweep physics") {
  const auto& rep = smoke_sweep();
  for (const auto& run : rep.runs) {
    CHECK(run.ok);
    CHECK(std::abs(run.budget_residual) < 1e-4);
    CHECK(run.min_maxprin_margin >= 0.0);
    CHECK(run.min_supnorm_margin >= 0.0);
    CHECK(run.min_w11_margin >= 0.0);
    CHECK(run.window.T2 / run.window.T1 >= 1.5);
  }
  for (const auto& r : rep.fits) {
    if (r.skipped) continue;
    if (r.target == default_targets()[0]) CHECK(r.fit.slope == doctest::Approx(-0.5).epsilon(0.15));
    if (r.target.kind == TargetKind::SpVsEll && r.target.range == Range::J1) CHECK(r.fit.slope == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("sweeps are deterministic") {
  const auto& a = smoke_sweep();
  auto b = run_sweep(a.plan);
  REQUIRE(a.fits.size() == b.fits.size());
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    CHECK(a.fits[i].observable == b.fits[i].observable);
    CHECK(a.fits[i].skipped == b.fits[i].skipped);
    CHECK(std::memcmp(&a.fits[i].fit.slope, &b.fits[i].fit.slope, sizeof(double)) == 0);
  }
  for (std::size_t r = 0; r < a.runs.size(); ++r) CHECK(a.runs[r].structure.values == b.runs[r].structure.values);
}

}
