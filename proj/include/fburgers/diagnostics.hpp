#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fburgers/run.hpp"
#include "fburgers/spectral.hpp"

namespace fburgers {

/// D = max(|u0|_1^{-1}, |u0|_{1,inf}), always > 1 for a nonzero zero-mean field.
struct DQuantity {
  double value;
  double inv_l1;
  double w1inf;
};

/// Throws DegenerateInitialData for the zero field.
DQuantity compute_D(const SpectralField& u0);

/// Dissipation / inertial / energy ranges J1 = (0, C1 nu^beta], J2 = (C1 nu^beta, C2], J3 = (C2, 1].
struct RangePartition {
  double K;
  double alpha;
  double nu;
  double beta;
  double C1;
  double C2;
  double nu0;

  /// Throws InvalidInput if K < 1 or nu > nu0 (ranges would intersect).
  static RangePartition make(double K, double alpha, double nu);

  double j1_upper() const { return C1 * std::pow(nu, beta); }
  double j2_upper() const { return C2; }
  bool in_j1(double ell) const { return ell > 0.0 && ell <= j1_upper(); }
  bool in_j2(double ell) const { return ell > j1_upper() && ell <= C2; }
  bool in_j3(double ell) const { return ell > C2 && ell <= 1.0; }
};

struct TimeWindow {
  double T1;
  double T2;
  double C_tilde;

  /// T1 = D^-2 C~^-1 / 4, T2 = max(3 T1 / 2, 2 D / sigma).
  static TimeWindow make(double D, double sigma, double C_tilde);
};

/// Window from an empirical C~ = 1.2 * max_t nu ||u(t)||_{alpha/2}^2 over the run.
/// Throws WindowNotCovered if the run ends before T2.
TimeWindow time_window(const DQuantity& D, double sigma, const SolverRun& run);

/// int |v(x + j dx) - v(x)|^p dx by the rectangle rule (|0|^0 = 1).
double increment_moment(std::span<const double> samples, double p, std::size_t shift);

/// Band average of |c_n|^2 over signed n with |n| in [k/M, Mk], endpoints included.
double band_energy(const SpectralField& u, std::size_t k, double M);
/// Number of signed wavenumbers in the band, 2 * #{j >= 1 : k/M <= j <= Mk}.
std::size_t band_count(std::size_t k, double M);

/// Trapezoid mean of A over [window.T1, window.T2], with linear interpolation at the
/// ends, raised as ({A^kappa})^{1/kappa}. Throws WindowNotCovered on a coverage gap.
double time_average(std::span<const double> times, std::span<const double> values, const TimeWindow& window,
                    double kappa = 1.0);
double time_average(const SolverRun& run, const TimeWindow& window,
                    const std::function<double(const DiagnosticsRecord&)>& observable, double kappa = 1.0);

/// Lattice index of a shift ell = j dx, j in [1, n]; throws LatticeShiftError otherwise.
std::size_t lattice_index(const Grid& grid, double ell);

/// Time-averaged S_p(ell) from the stored fields of the run.
double structure_function(const SolverRun& run, const TimeWindow& window, double p, double ell);

/// S_4 / S_2^2; throws DegenerateFlatness when S_2 vanishes.
double flatness(const SolverRun& run, const TimeWindow& window, double ell);

/// Time-averaged layer spectrum E(k) with band parameter M >= 1.
double energy_spectrum(const SolverRun& run, const TimeWindow& window, std::size_t k, double M = 2.0);

/// (|u(tb)|^2 - |u(ta)|^2 + 2 nu int_ta^tb ||u||_{alpha/2}^2) / |u(ta)|^2 using the recorded
/// cumulative dissipation. t_a and t_b must be record times.
double dissipation_residual(const SolverRun& run, double t_a, double t_b);

/// Batched S_p over many (p, j) pairs; computes each physical field once.
struct StructureTable {
  std::vector<double> orders;
  std::vector<std::size_t> shifts;
  /// values[i][j] = S_{orders[i]}(shifts[j] dx)
  std::vector<std::vector<double>> values;
};
StructureTable structure_functions(const SolverRun& run, const TimeWindow& window, std::span<const double> orders,
                                   std::span<const std::size_t> shifts);

/// Time-averaged E(k) for many k at once.
std::vector<double> energy_spectra(const SolverRun& run, const TimeWindow& window, std::span<const std::size_t> ks,
                                   double M);

/// A run holding `field` unchanged at each of `times`; used to test post-processing.
SolverRun static_run(const SpectralField& field, std::span<const double> times, const StepperConfig& cfg);

}  // namespace fburgers
