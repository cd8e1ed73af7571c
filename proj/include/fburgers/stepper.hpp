#pragma once

#include <vector>

#include "fburgers/flux.hpp"
#include "fburgers/run.hpp"
#include "fburgers/spectral.hpp"

namespace fburgers {

/// c_k -> exp(-nu (2 pi |k|)^alpha t) c_k.
SpectralField heat_semigroup(const SpectralField& field, double nu, double alpha, double t);

/// phi_j(z) = sum_i z^i / (i + j)!, j in {0,1,2,3}; phi_0 = exp.
/// phi_1 switches to its 6th-order Taylor polynomial for |z| < 1e-3; phi_2 and phi_3
/// use the full series for |z| < 1, where their closed forms cancel catastrophically.
double phi(int j, double z);

/// Per-mode ETD coefficients for the linear rates lambda_k = nu (2 pi |k|)^alpha.
struct EtdCoefficients {
  double dt;
  std::vector<double> lambda;
  std::vector<double> decay;       ///< exp(-lambda dt)
  std::vector<double> decay_half;  ///< exp(-lambda dt / 2)
  std::vector<double> phi1;        ///< phi_1(-lambda dt)
  std::vector<double> phi2;        ///< phi_2(-lambda dt)
  std::vector<double> phi3;        ///< phi_3(-lambda dt)
  std::vector<double> phi1_half;   ///< phi_1(-lambda dt / 2)
};

EtdCoefficients etd_coefficients(double nu, double alpha, double dt, Grid grid);

/// One ETD step of size dt (linear part exact, nonlinear part per the configured scheme).
/// Throws NonFiniteError on blow-up.
SolverState step(const SolverState& state, const StepperConfig& cfg, const FluxSpec& flux, double dt);

/// min(dt_max, dt_cfl * dx / max|f'(u)|, 2 * dt_last); dt_max for a zero field.
double cfl_dt(const SolverState& state, const StepperConfig& cfg, const FluxSpec& flux);

/// Resolution rule dx <= c_res * nu^beta.
bool resolution_ok(const Grid& grid, const StepperConfig& cfg);

/// Integrates to cfg.t_end recording diagnostics at every sample time. Throws
/// InvalidInput on an under-resolved grid unless cfg.allow_underresolved is set.
SolverRun integrate(const SolverState& initial, const StepperConfig& cfg, const FluxSpec& flux,
                    const MonitorConfig& monitors);
SolverRun integrate(const SpectralField& u0, const StepperConfig& cfg, const FluxSpec& flux,
                    const MonitorConfig& monitors);

/// Fills the monitor quantities of a record for one field.
DiagnosticsRecord make_record(const SpectralField& u, const StepperConfig& cfg, const MonitorConfig& monitors);

/// nu ||u||_{alpha/2}^2.
double dissipation_rate(const SpectralField& u, double nu, double alpha);

}  // namespace fburgers
