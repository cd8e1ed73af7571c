#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fburgers/diagnostics.hpp"
#include "fburgers/norms.hpp"
#include "fburgers/run.hpp"
#include "fburgers/spectral.hpp"

namespace fburgers {

/// Initial datum: sum of amplitude * sin(2 pi k x + phase).
struct SineMode {
  long k;
  double amplitude;
  double phase;
  friend bool operator==(const SineMode&, const SineMode&) = default;
};

struct InitialCondition {
  /// "default" (sin 2 pi x + 0.6 sin(4 pi x + 1)), "sine", or "modes".
  std::string name = "default";
  std::vector<SineMode> modes;

  std::vector<SineMode> resolved_modes() const;
  /// Sampled on the grid, mean removed and dealiased.
  SpectralField sample(const Grid& grid) const;
  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

enum class TargetKind { NormVsNu, SpVsEll, SpVsNu, SpectrumVsK, SpectrumTail, FlatnessVsEll };
enum class Range { J1, J2 };
/// Moment: fit ({A^kappa})^{1/kappa}. Power: fit {A^kappa}, whose exponent is kappa times larger.
enum class Convention { Moment, Power };
/// TwoSided: |slope - theoretical| <= tol. AtLeast / AtMost: one-sided against the bound.
enum class Check { TwoSided, AtLeast, AtMost };

std::string to_string(TargetKind k);
std::string to_string(Range r);
std::string to_string(Convention c);
std::string to_string(Check c);

/// One fitted observable of a sweep.
struct Target {
  TargetKind kind = TargetKind::NormVsNu;
  NormRequest norm{};
  double p = 2.0;
  Range range = Range::J2;
  Convention convention = Convention::Moment;
  Check check = Check::TwoSided;
  /// Tolerance on the slope for TwoSided checks; a fraction of |expected| when `relative`.
  double tolerance = 0.2;
  bool relative = false;
  /// One-sided checks compare against bound_factor * expected slope.
  double bound_factor = 1.0;

  std::string label() const;
  friend bool operator==(const Target&, const Target&) = default;
};

/// Predicted exponent for a target before any convention adjustment.
/// Throws UnsupportedTarget when the target has no stated exponent.
double theoretical_exponent(const Target& target, double alpha);
/// Exponent of the quantity actually fitted (Power multiplies by kappa).
double expected_slope(const Target& target, double alpha, double kappa);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double theoretical = 0.0;
  double abs_error = 0.0;
  double tolerance = 0.0;
  Check check = Check::TwoSided;
  bool pass = false;
  std::size_t n_points = 0;
};

/// Least squares on (log x, log y). Needs >= 3 points with x strictly monotone
/// (InvalidInput otherwise); a nonpositive coordinate raises LogDomainError.
FitResult fit_loglog(std::span<const std::pair<double, double>> points);

/// Fills theoretical, abs_error, tolerance and pass for a fitted slope.
void grade(FitResult& fit, double theoretical, double tolerance, Check check);

/// Where J1 ends and J2 ends for the within-run fits.
struct FitRanges {
  /// "nominal": J1 upper = C1 nu^beta from K. "crossover": J1 upper is the scale where
  /// the local log-slope of S_2 first drops below `crossover_slope`.
  std::string j1_mode = "nominal";
  double crossover_slope = 1.5;
  /// Upper end of J2; <= 0 means C2 from K.
  double j2_upper = 0.0;
  /// Margin in decades applied inside both ends of J2 and below the J1 upper end.
  double margin_decades = 0.5;
  friend bool operator==(const FitRanges&, const FitRanges&) = default;
};

struct SweepPlan {
  double alpha = 2.0;
  /// Decreasing.
  std::vector<double> nu_list;
  /// Fixed grid size; 0 selects the smallest power of two >= n_min with dx <= c_res nu^beta.
  std::size_t n = 0;
  std::size_t n_min = 256;
  std::string flux_name = "burgers";
  InitialCondition u0;
  double kappa = 2.0;
  double K = 4.0;
  double M = 2.0;
  FitRanges ranges;
  Scheme scheme = Scheme::ETDRK4;
  double dt_cfl = 0.4;
  double dt_max = 1e-2;
  double c_res = 0.5;
  /// Geometric sample schedule from t_first_fraction * T to T = 2D/sigma.
  std::size_t n_samples = 480;
  double t_first_fraction = 1e-5;
  /// S_p orders evaluated per run; flatness needs 2 and 4.
  std::vector<double> sp_orders{0.5, 1.0, 2.0, 3.0, 4.0};
  std::vector<Target> targets;

  /// Throws InvalidInput when a run would violate nu <= nu0(K) or the resolution rule.
  void validate() const;
  std::size_t grid_size(double nu) const;
  double beta() const { return 1.0 / (alpha - 1.0); }
  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;
};

/// The acceptance targets with their tolerances.
std::vector<Target> default_targets();

/// Everything kept from one viscosity of a sweep.
struct RunSummary {
  double nu = 0.0;
  std::size_t n = 0;
  bool ok = false;
  std::string failure;
  std::vector<std::string> warnings;
  DQuantity D{};
  TimeWindow window{};
  RangePartition partition{};
  double j1_upper = 0.0;  ///< J1 upper end actually used by the fits
  double j2_upper = 0.0;
  std::uint64_t steps = 0;
  double wall_seconds = 0.0;
  double budget_residual = 0.0;  ///< dissipation_residual over [0, T2]
  double min_maxprin_margin = 0.0;
  double min_supnorm_margin = 0.0;
  double min_w11_margin = 0.0;
  /// label -> ({A^kappa})^{1/kappa} over the window.
  std::map<std::string, double> norm_moments;
  StructureTable structure;
  std::vector<std::size_t> spectrum_ks;
  std::vector<double> spectrum;
  /// p -> C_env on J1 (S_p / (l^p nu^{-beta(p-1)})) and J2 (S_p / l), max over the range.
  std::map<double, double> envelope_j1;
  std::map<double, double> envelope_j2;
  /// Monitor records without stored fields.
  std::vector<DiagnosticsRecord> records;
  StepperConfig config;
  /// Final state (for snapshots).
  std::optional<SolverState> final_state;
};

struct FitRow {
  Target target;
  std::string observable;
  /// NaN for fits against nu; the run's nu for within-run fits.
  double nu;
  bool skipped = false;
  std::string skip_reason;
  FitResult fit;
};

struct SweepReport {
  SweepPlan plan;
  std::vector<RunSummary> runs;
  std::vector<FitRow> fits;
  bool aborted = false;
  std::string abort_reason;
  double wall_seconds = 0.0;
};

/// Runs every viscosity in order and fits every target. Fully deterministic.
SweepReport run_sweep(const SweepPlan& plan);

/// Post-processing of one finished run (exposed for analysis of saved snapshots).
RunSummary summarize_run(const SweepPlan& plan, double nu, const SolverRun& run, const DQuantity& D);

/// Fits of all targets for a set of summaries (keyed by nu).
std::vector<FitRow> fit_targets(const SweepPlan& plan, std::span<const RunSummary> runs);

/// Log-spaced lattice shifts 1..n/2 (every shift up to 16, then ratio ~1.08).
std::vector<std::size_t> default_shifts(std::size_t n);
/// Wavenumbers for the spectrum table: all k <= 16, then log-spaced up to n/(3M).
std::vector<std::size_t> default_wavenumbers(std::size_t n, double M);

/// Stepper settings for one run of a plan.
StepperConfig run_config(const SweepPlan& plan, double nu, double t_end);

}  // namespace fburgers
