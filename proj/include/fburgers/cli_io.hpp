#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fburgers/harness.hpp"
#include "fburgers/run.hpp"

namespace fburgers {

/// A single simulation.
struct RunConfig {
  StepperConfig stepper;
  std::size_t n = 4096;
  std::string flux_name = "burgers";
  InitialCondition u0;
  /// Sample cadence: "uniform" (samples equal steps up to t_end) or "geometric"
  /// (from t_first to t_end).
  std::string schedule = "uniform";
  std::size_t samples = 200;
  double t_first = 1e-4;
  std::vector<NormRequest> norms{NormRequest::lp(2.0), NormRequest::hs(1.0), NormRequest::wmp(1, kInf)};
  std::vector<double> sp_orders{0.5, 1.0, 2.0, 3.0, 4.0};
  double K = 4.0;
  double M = 2.0;
  double kappa = 2.0;
  std::string output_dir = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

using Config = std::variant<RunConfig, SweepPlan>;

/// Parses a JSON document. A document with "nu_list" is a SweepPlan, otherwise a
/// RunConfig. Unknown keys and out-of-range values raise ConfigError naming the key.
Config parse_config(std::string_view text);
RunConfig parse_run_config(std::string_view text);
SweepPlan parse_sweep_plan(std::string_view text);

std::string serialize(const RunConfig& cfg);
std::string serialize(const SweepPlan& plan);

/// "L2", "W1,inf", "H0.75", "Hinc0.5".
NormRequest parse_norm_label(const std::string& label);

struct Snapshot {
  SolverState state;
  double alpha;
  double nu;
};

constexpr std::uint32_t kSnapshotVersion = 1;

/// Binary snapshot: "FBRG", u32 version, u64 n, f64 alpha, f64 nu, f64 t, then n/2+1
/// little-endian (re, im) pairs for k = 0..n/2, then the step state (f64 dt_last,
/// u64 step_count, f64 dissipated) so that a resumed run replays the step schedule.
void save_snapshot(const std::filesystem::path& path, const SolverState& state, double alpha, double nu);
/// Throws SnapshotError on a bad magic, version or length, IoError when unreadable.
Snapshot load_snapshot(const std::filesystem::path& path);

/// Shortest text with 17 significant digits ("inf", "-inf", "nan" for non-finite values).
std::string format_double(double v);

constexpr int kCsvVersion = 1;

/// A parsed CSV table (the "# fburgers-csv <version>" line is checked and dropped).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  double number(std::size_t row, std::size_t col) const;
};
/// Throws IoError when unreadable and InvalidInput on an unknown format version.
CsvTable read_csv(const std::filesystem::path& path);
double parse_double(std::string_view text);

/// Products of one run for the output writers.
struct RunProducts {
  std::vector<std::string> norm_labels;
  std::vector<DiagnosticsRecord> records;
  StructureTable structure;
  double dx = 0.0;
  std::vector<std::size_t> spectrum_ks;
  std::vector<double> spectrum;
};

RunProducts products_of(const RunSummary& run);

/// Writes norms.csv, structure.csv, spectrum.csv, fits.csv, manifest.json and plots/
/// for a sweep; each finished run also gets its own nu_<value>/ directory.
/// Throws IoError when the directory cannot be written.
void write_outputs(const SweepReport& report, const std::filesystem::path& dir);

/// Single-run variant used by the `run` and `analyze` verbs.
void write_run_outputs(const RunProducts& products, const std::string& manifest_json,
                       const std::filesystem::path& dir);

/// Directory name of one run inside a sweep output, e.g. "nu_0.008".
std::string run_dir_name(double nu);

/// Reruns the plan's smallest viscosity into `dir`/rerun and compares its run directory
/// byte for byte with `reference` (a run directory from an earlier sweep). Without a
/// reference the run is executed twice. Returns the names of differing files.
std::vector<std::string> seed_check(const SweepPlan& plan, const std::filesystem::path& dir,
                                    const std::optional<std::filesystem::path>& reference = std::nullopt);

struct SingleRun {
  RunProducts products;
  std::string manifest_json;
  SolverState final_state;
};

/// Integrates one RunConfig (optionally from a snapshot). S_p and E(k) are averaged over
/// [T1, T2] when the run covers the window and taken at the final time otherwise.
SingleRun run_single(const RunConfig& cfg, const std::optional<Snapshot>& resume = std::nullopt);

/// Instantaneous diagnostics of a saved state.
SingleRun analyze_snapshot(const Snapshot& snap, const RunConfig& cfg);

/// Files of `a` and `b` that differ (or exist in only one); manifest.json is compared
/// with wall_seconds entries removed.
std::vector<std::string> diff_output_dirs(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace fburgers
