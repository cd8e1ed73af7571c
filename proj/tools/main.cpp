#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fburgers/acceptance.hpp"
#include "fburgers/cli_io.hpp"
#include "fburgers/errors.hpp"
#include "fburgers/harness.hpp"

namespace fs = std::filesystem;
using namespace fburgers;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  auto cfg = parse_config(read_text(path));
  if (!std::holds_alternative<RunConfig>(cfg)) throw ConfigError("nu_list", "expected a single-run config");
  return std::get<RunConfig>(cfg);
}

SweepPlan load_plan(const std::string& path) {
  if (path.empty()) return acceptance_plan(1.5);
  auto cfg = parse_config(read_text(path));
  if (!std::holds_alternative<SweepPlan>(cfg)) throw ConfigError("nu_list", "expected a sweep plan");
  return std::get<SweepPlan>(cfg);
}

void print_fits(const SweepReport& rep) {
  for (const auto& f : rep.fits) {
    std::cout << (f.skipped ? "SKIP " : f.fit.pass ? "ok   " : "off  ") << f.observable;
    if (f.skipped) {
      std::cout << "  (" << f.skip_reason << ")\n";
    } else {
      std::cout << "  slope " << f.fit.slope << " expected " << f.fit.theoretical << " r2 " << f.fit.r2 << "\n";
    }
  }
}

int seed_check_main(const std::string& config, const std::string& out) {
  const SweepPlan plan = load_plan(config);
  const auto diffs = seed_check(plan, out.empty() ? fs::path("seed_check") : fs::path(out));
  if (diffs.empty()) {
    std::cout << "seed check: outputs are byte-identical\n";
    return 0;
  }
  std::cout << "seed check: outputs differ:";
  for (const auto& d : diffs) std::cout << " " << d;
  std::cout << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral fractional Burgers solver and scaling harness"};
  app.require_subcommand(0, 1);
  std::string config, out, resume;
  bool seed = false;
  app.add_option("--config", config, "JSON run config or sweep plan");
  app.add_option("--out", out, "output directory");
  app.add_flag("--seed-check", seed, "rerun the plan's smallest viscosity twice and compare outputs byte for byte");

  auto* run = app.add_subcommand("run", "integrate a single run config");
  run->add_option("--config", config, "JSON run config")->required();
  run->add_option("--out", out, "output directory (overrides the config)");
  run->add_option("--resume", resume, "continue from a snapshot");

  auto* sweep = app.add_subcommand("sweep", "run a viscosity sweep and fit exponents");
  sweep->add_option("--config", config, "JSON sweep plan")->required();
  sweep->add_option("--out", out, "output directory")->required();

  std::vector<std::string> snapshots;
  auto* analyze = app.add_subcommand("analyze", "diagnostics of saved snapshots");
  analyze->add_option("--config", config, "JSON run config for norms and orders");
  analyze->add_option("--out", out, "output directory")->required();
  analyze->add_option("snapshots", snapshots, "snapshot files")->required();

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--out", out, "output directory");
  verify->add_flag("--seed-check", seed, "only run the determinism check");
  verify->add_option("--config", config, "sweep plan for --seed-check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunConfig cfg = load_run_config(config);
      if (!out.empty()) cfg.output_dir = out;
      std::optional<Snapshot> snap;
      if (!resume.empty()) snap = load_snapshot(resume);
      const auto res = run_single(cfg, snap);
      write_run_outputs(res.products, res.manifest_json, cfg.output_dir);
      save_snapshot(fs::path(cfg.output_dir) / "final.fbrg", res.final_state, cfg.stepper.alpha, cfg.stepper.nu);
      std::cout << "run finished at t = " << res.final_state.t << " after " << res.final_state.step_count
                << " steps; outputs in " << cfg.output_dir << "\n";
      return 0;
    }
    if (*sweep) {
      const SweepPlan plan = load_plan(config);
      const auto rep = run_sweep(plan);
      write_outputs(rep, out);
      print_fits(rep);
      if (rep.aborted) {
        std::cerr << "sweep aborted: " << rep.abort_reason << "\n";
        return 2;
      }
      return 0;
    }
    if (*analyze) {
      const RunConfig cfg = load_run_config(config);
      for (const auto& s : snapshots) {
        const auto res = analyze_snapshot(load_snapshot(s), cfg);
        const auto dir = fs::path(out) / fs::path(s).stem();
        write_run_outputs(res.products, res.manifest_json, dir);
        std::cout << s << " -> " << dir.string() << "\n";
      }
      return 0;
    }
    if (*verify) {
      if (seed) return seed_check_main(config, out);
      const auto results = run_acceptance(out.empty() ? fs::path("acceptance") : fs::path(out), std::cout);
      bool all = true;
      std::cout << "\nsummary\n";
      for (const auto& r : results) {
        std::cout << format_result(r) << "\n";
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
    if (seed) return seed_check_main(config, out);
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
