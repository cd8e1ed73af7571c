#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fburgers/cli_io.hpp"
#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/stepper.hpp"
#include "support.hpp"

using namespace fburgers;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fburgers_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RunConfig c;
  c.stepper.alpha = 1.0 + 1e-3 + u(rng) * (1.0 - 1e-3);
  c.stepper.nu = std::pow(10.0, -4 + 3 * u(rng));
  c.stepper.dt_cfl = 0.1 + u(rng);
  c.stepper.dt_max = u(rng) * 0.1 + 1e-6;
  c.stepper.scheme = u(rng) < 0.5 ? Scheme::ETDRK2 : Scheme::ETDRK4;
  c.stepper.t_end = u(rng) * 5;
  c.stepper.c_res = 0.1 + u(rng);
  c.stepper.allow_underresolved = u(rng) < 0.5;
  c.n = 8 + 2 * static_cast<std::size_t>(u(rng) * 5000);
  c.flux_name = u(rng) < 0.7 ? "burgers" : "burgers_quartic_mix";
  const double pick = u(rng);
  if (pick < 0.3) {
    c.u0.name = "sine";
  } else if (pick < 0.6) {
    c.u0.name = "modes";
    for (int i = 0, m = 1 + int(u(rng) * 4); i < m; ++i) c.u0.modes.push_back({1 + long(u(rng) * 20), u(rng) * 2 - 1, u(rng) * 6});
  }
  c.schedule = u(rng) < 0.5 ? "uniform" : "geometric";
  c.samples = 1 + static_cast<std::size_t>(u(rng) * 1000);
  c.t_first = u(rng) * 1e-2 + 1e-9;
  c.norms = {NormRequest::lp(1 + u(rng) * 3), NormRequest::wmp(int(u(rng) * 3), kInf), NormRequest::hs(u(rng) * 2),
             NormRequest::hs_increment(0.1 + 0.8 * u(rng))};
  c.sp_orders = {u(rng) * 4, 2.0, 0.1 + u(rng)};
  c.K = 1 + u(rng) * 10;
  c.M = 1 + u(rng) * 3;
  c.kappa = 0.1 + u(rng) * 3;
  c.output_dir = "dir_" + std::to_string(int(u(rng) * 1000));
  return c;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("minimal config gets defaults") {
  auto cfg = parse_config(R"({"alpha": 1.5, "nu": 1e-3, "n": 8192, "flux": "burgers"})");
  REQUIRE(std::holds_alternative<RunConfig>(cfg));
  const auto& c = std::get<RunConfig>(cfg);
  CHECK(c.stepper.alpha == 1.5);
  CHECK(c.stepper.nu == 1e-3);
  CHECK(c.n == 8192);
  CHECK(c.stepper.dt_cfl == 0.4);
  CHECK(c.stepper.scheme == Scheme::ETDRK4);
  CHECK(c.u0 == InitialCondition{});
  CHECK(c.K == 4.0);
}

TEST_CASE("supercritical alpha is rejected by key") {
  try {
    parse_config(R"({"alpha": 0.8, "nu": 1e-3})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "alpha");
  }
  CHECK_THROWS_AS(parse_config(R"({"alpha": 2.5})"), ConfigError);
}

TEST_CASE("unknown and malformed keys are rejected") {
  try {
    parse_config(R"({"alpha": 1.5, "viscosity": 1e-3})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "viscosity");
  }
  CHECK_THROWS_AS(parse_config(R"({"nu": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n": 9})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"flux": "cubic"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"alpha": "two"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  try {
    parse_config(R"({"nu_list": [1e-3], "ranges": {"j1_mod": "nominal"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "ranges.j1_mod");
  }
}

TEST_CASE("run configs round-trip") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const RunConfig c = random_config(rng);
    const auto back = parse_run_config(serialize(c));
    CHECK(back == c);
    CHECK(serialize(back) == serialize(c));
  }
}

TEST_CASE("sweep plans round-trip") {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    SweepPlan p;
    p.alpha = 1.5 + 0.5 * u(rng);
    p.nu_list = {0.005 * (1 + u(rng)), 0.004, 0.001 * (1 + u(rng))};
    p.n_min = u(rng) < 0.5 ? 256 : 512;
    p.kappa = 0.5 + u(rng);
    p.ranges.j1_mode = u(rng) < 0.5 ? "nominal" : "crossover";
    p.ranges.j2_upper = u(rng) * 0.1;
    p.targets = default_targets();
    p.targets[0].tolerance = u(rng);
    const auto cfg = parse_config(serialize(p));
    REQUIRE(std::holds_alternative<SweepPlan>(cfg));
    CHECK(std::get<SweepPlan>(cfg) == p);
  }
}

TEST_CASE("norm labels parse back") {
  for (auto r : {NormRequest::lp(2), NormRequest::lp(kInf), NormRequest::wmp(1, kInf), NormRequest::wmp(2, 3),
                 NormRequest::hs(0.75), NormRequest::hs_increment(0.5)})
    CHECK(parse_norm_label(r.label()) == r);
  CHECK_THROWS_AS(parse_norm_label("X2"), InvalidInput);
}

TEST_CASE("snapshots are bit-exact") {
  auto dir = scratch("snap");
  std::mt19937_64 rng(4);
  SolverState s{fbtest::random_field(Grid(128), 50, rng), 0.123456789, 42, 3.3e-4, 0.0171};
  save_snapshot(dir / "a.fbrg", s, 1.5, 1e-3);
  auto snap = load_snapshot(dir / "a.fbrg");
  CHECK(snap.alpha == 1.5);
  CHECK(snap.nu == 1e-3);
  CHECK(snap.state.t == s.t);
  CHECK(snap.state.step_count == 42);
  CHECK(snap.state.dt_last == s.dt_last);
  CHECK(snap.state.dissipated == s.dissipated);
  REQUIRE(snap.state.field.grid() == s.field.grid());
  for (std::size_t k = 0; k < 65; ++k) CHECK(snap.state.field.coeffs()[k] == s.field.coeffs()[k]);
  const std::string bytes = slurp(dir / "a.fbrg");
  CHECK(bytes.substr(0, 4) == "FBRG");
  CHECK(bytes.size() == 4 + 4 + 8 + 24 + 65 * 16 + 24);
}

TEST_CASE("damaged snapshots are rejected") {
  auto dir = scratch("bad");
  save_snapshot(dir / "a.fbrg", SolverState{fbtest::sine(Grid(32))}, 2.0, 0.01);
  const std::string bytes = slurp(dir / "a.fbrg");
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  CHECK_THROWS_AS(load_snapshot(write("trunc", bytes.substr(0, bytes.size() - 9))), SnapshotError);
  CHECK_THROWS_AS(load_snapshot(write("short", bytes.substr(0, 10))), SnapshotError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(load_snapshot(write("magic", magic)), SnapshotError);
  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(load_snapshot(write("version", version)), SnapshotError);
  CHECK_THROWS_AS(load_snapshot(write("long", bytes + "x")), SnapshotError);
  std::string mean = bytes;
  mean[4 + 4 + 8 + 24] = 1;
  CHECK_THROWS_AS(load_snapshot(write("mean", mean)), SnapshotError);
  CHECK_THROWS_AS(load_snapshot(dir / "missing"), IoError);
}

TEST_CASE("resuming from a snapshot replays the uninterrupted run") {
  auto dir = scratch("resume");
  StepperConfig cfg;
  cfg.nu = 0.01;
  cfg.alpha = 1.7;
  cfg.allow_underresolved = true;
  cfg.t_end = 0.2;
  MonitorConfig m;
  m.sample_times = {0.05, 0.1, 0.15, 0.2};
  const auto u0 = InitialCondition{}.sample(Grid(256));
  auto straight = integrate(u0, cfg, flux::burgers(), m);

  cfg.t_end = 0.1;
  auto first = integrate(u0, cfg, flux::burgers(), m);
  save_snapshot(dir / "mid.fbrg", first.final_state, cfg.alpha, cfg.nu);
  cfg.t_end = 0.2;
  auto second = integrate(load_snapshot(dir / "mid.fbrg").state, cfg, flux::burgers(), m);

  const auto& a = straight.final_state;
  const auto& b = second.final_state;
  CHECK(a.t == b.t);
  CHECK(a.step_count == b.step_count);
  double diff = 0.0;
  bool exact = true;
  for (std::size_t k = 0; k < a.field.coeffs().size(); ++k) {
    diff = std::max(diff, std::abs(a.field.coeffs()[k] - b.field.coeffs()[k]));
    exact = exact && a.field.coeffs()[k] == b.field.coeffs()[k];
  }
  CHECK(diff <= 1e-12);
  CHECK(exact);
  CHECK(a.dissipated == b.dissipated);
}

TEST_CASE("doubles survive the CSV text format") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> e(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::pow(10.0, e(rng)) * (i % 2 ? -1 : 1) * (1 + e(rng) / 1000);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(kInf) == "inf");
  CHECK(format_double(-kInf) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double("-inf") == -kInf);
}

TEST_CASE("empty sweep writes a manifest and header-only tables") {
  auto dir = scratch("empty");
  SweepReport rep;
  rep.plan.nu_list = {1e-3};
  write_outputs(rep, dir);
  CHECK(fs::exists(dir / "manifest.json"));
  for (const char* name : {"norms.csv", "structure.csv", "spectrum.csv", "fits.csv"}) {
    auto t = read_csv(dir / name);
    CHECK_FALSE(t.header.empty());
    CHECK(t.rows.empty());
  }
  auto fits = read_csv(dir / "fits.csv");
  const std::vector<std::string> lead{"observable", "slope", "theoretical", "abs_error", "r2", "pass"};
  CHECK(std::equal(lead.begin(), lead.end(), fits.header.begin()));
}

TEST_CASE("unknown CSV versions are rejected") {
  auto dir = scratch("csv");
  std::ofstream(dir / "x.csv") << "# fburgers-csv 99\na,b\n1,2\n";
  CHECK_THROWS_AS(read_csv(dir / "x.csv"), InvalidInput);
}

TEST_CASE("unwritable output directory") {
  auto dir = scratch("ro");
  std::ofstream(dir / "file") << "x";
  CHECK_THROWS_AS(write_outputs(SweepReport{}, dir / "file" / "sub"), IoError);
}

TEST_CASE("single-viscosity sweep outputs") {
  auto dir = scratch("sweep");
  SweepPlan plan;
  plan.alpha = 2.0;
  plan.nu_list = {0.008};
  plan.n = 1024;
  plan.K = 1.0;
  plan.n_samples = 120;
  plan.targets = default_targets();
  auto rep = run_sweep(plan);
  REQUIRE_FALSE(rep.aborted);
  write_outputs(rep, dir);
  auto fits = read_csv(dir / "fits.csv");
  bool found = false;
  for (std::size_t r = 0; r < fits.rows.size(); ++r) {
    if (fits.rows[r][0].rfind("E(k) vs k on J2", 0) == 0) {
      found = true;
      CHECK(fits.number(r, 2) == -2.0);
    }
  }
  CHECK(found);
  const auto run_dir = dir / run_dir_name(0.008);
  CHECK(run_dir_name(0.008) == "nu_0.008");
  for (const char* f : {"norms.csv", "structure.csv", "spectrum.csv", "manifest.json", "final.fbrg"})
    CHECK(fs::exists(run_dir / f));
  auto st = read_csv(run_dir / "structure.csv");
  CHECK(st.header == std::vector<std::string>{"ell", "p", "S_p"});
  auto norms = read_csv(run_dir / "norms.csv");
  CHECK(norms.header.front() == "t");
  CHECK(fs::exists(dir / "plots"));

  auto again = scratch("sweep2");
  write_outputs(run_sweep(plan), again);
  CHECK(diff_output_dirs(dir, again).empty());
}

TEST_CASE("single run from a config and its resumption") {
  auto dir = scratch("single");
  auto cfg = parse_run_config(R"({"alpha": 2, "nu": 0.01, "n": 256, "t_end": 0.05, "samples": 5, "out": "x"})");
  auto res = run_single(cfg);
  CHECK(res.final_state.t == 0.05);
  write_run_outputs(res.products, res.manifest_json, dir);
  CHECK(read_csv(dir / "norms.csv").rows.size() == 6);
  save_snapshot(dir / "s.fbrg", res.final_state, 2.0, 0.01);
  auto snap = load_snapshot(dir / "s.fbrg");
  cfg.stepper.t_end = 0.1;
  auto cont = run_single(cfg, snap);
  CHECK(cont.final_state.t == doctest::Approx(0.1));
  auto an = analyze_snapshot(snap, cfg);
  CHECK(an.products.records.size() == 1);
}

}
