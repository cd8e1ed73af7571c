#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fburgers/norms.hpp"
#include "fburgers/spectral.hpp"

namespace fburgers {

enum class Scheme { ETDRK2, ETDRK4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct StepperConfig {
  double nu = 1e-3;
  double alpha = 2.0;
  double dt_cfl = 0.4;
  double dt_max = 1e-2;
  Scheme scheme = Scheme::ETDRK4;
  double t_end = 1.0;
  /// Resolution rule dx <= c_res * nu^beta.
  double c_res = 0.5;
  /// Proceed (with a recorded warning) when the resolution rule fails.
  bool allow_underresolved = false;

  /// Throws InvalidInput unless alpha in (1, 2], nu > 0 and the step controls are positive.
  void validate() const;
  double beta() const { return 1.0 / (alpha - 1.0); }

  friend bool operator==(const StepperConfig&, const StepperConfig&) = default;
};

struct SolverState {
  SpectralField field;
  double t = 0.0;
  std::uint64_t step_count = 0;
  /// Last CFL-proposed step (before clipping to sample times); 0 means no history.
  double dt_last = 0.0;
  /// int_0^t 2 nu ||u||_{alpha/2}^2, accumulated per step by the trapezoid rule.
  double dissipated = 0.0;
};

/// Time-stamped monitor output.
struct DiagnosticsRecord {
  double t = 0.0;
  std::uint64_t step = 0;
  /// Keyed by NormRequest::label().
  std::map<std::string, double> norms;
  /// (p, lattice index j) -> int |u(x + j dx) - u(x)|^p dx at this instant.
  std::map<std::pair<double, std::size_t>, double> sp;
  /// k -> band-average of |c_n|^2 over |n| in [k/M, Mk] at this instant.
  std::map<std::size_t, double> spectrum;

  double energy = 0.0;             ///< |u|^2
  double dissipation_rate = 0.0;   ///< nu ||u||_{alpha/2}^2
  double dissipated = 0.0;         ///< cumulative 2 nu int ||u||_{alpha/2}^2
  double budget_residual = 0.0;    ///< (|u|^2 - |u0|^2 + dissipated) / |u0|^2
  double max_ux = 0.0;
  double sup_norm = 0.0;
  double w11 = 0.0;
  /// Bound min(D, 1/(sigma t)); +inf at t = 0 unless D is known.
  double oleinik_bound = 0.0;
  /// bound*(1 + eps) - value for u_x, |u|_inf and |u|_{1,1}/2; negative means violated.
  double maxprin_margin = 0.0;
  double supnorm_margin = 0.0;
  double w11_margin = 0.0;
};

struct MonitorConfig {
  /// Absolute sample times; the integrator lands on each exactly. Times outside
  /// (t_start, t_end] are ignored; the start time is always recorded.
  std::vector<double> sample_times;
  std::vector<NormRequest> norms;
  std::vector<double> sp_orders;
  std::vector<std::size_t> sp_shifts;
  std::vector<std::size_t> spectrum_ks;
  double band_m = 2.0;
  /// D and sigma for the a-priori bound monitors; D <= 0 disables the D cap.
  double d_value = 0.0;
  double sigma = 1.0;
  double eps_disc = 0.05;
  bool keep_fields = true;
};

/// Geometric schedule t_end * ratio^i from t_first to t_end (count points) plus t = 0.
std::vector<double> geometric_schedule(double t_first, double t_end, std::size_t count);

struct SolverRun {
  StepperConfig config;
  std::string flux_name;
  double sigma = 1.0;
  std::vector<DiagnosticsRecord> records;
  /// Field at each record time when MonitorConfig::keep_fields is set.
  std::vector<SpectralField> fields;
  SolverState final_state;
  std::vector<std::string> warnings;

  const Grid& grid() const { return final_state.field.grid(); }
};

}  // namespace fburgers
