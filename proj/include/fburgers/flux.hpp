#pragma once

#include <functional>
#include <span>
#include <string>

#include "fburgers/spectral.hpp"

namespace fburgers {

/// The flux f with user-supplied derivatives and its hypothesis metadata.
struct FluxSpec {
  std::string name;
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  std::function<double(double)> deriv2;
  /// Convexity floor: f''(y) >= sigma on [-R, R].
  double sigma = 1.0;
  /// Claimed growth exponent of f'; must lie in [1, 2).
  double growth_h1 = 1.0;
  /// Sampling radius R used by validate().
  double validation_radius = 10.0;
  /// Optional fused kernel: replaces each value y by f(y) and returns max |f'(y)|.
  /// Must agree with eval/deriv; the built-in fluxes provide one.
  std::function<double(std::span<double>)> batch;
};

struct FluxReport {
  double sigma_observed;
  double h1_fit;
  /// Largest relative mismatch between the supplied f', f'' and central differences.
  double derivative_mismatch;
  bool pass;
};

/// Dense-sampling check of strong convexity and subquadratic growth of f'.
/// Throws ConvexityError (with the violating y) or GrowthError.
FluxReport validate(const FluxSpec& spec, int n_samples = 2001);

/// Growth exponent of |f'| from a log-log least-squares fit over y in [lo, hi].
double fit_growth_exponent(const FluxSpec& spec, double lo, double hi, int n_samples = 200);

/// -dealias(d/dx F[f(u)]) with the zero mode forced to 0.
SpectralField nonlinear_term(const SpectralField& u, const FluxSpec& spec);

namespace detail {

/// Buffer-reusing evaluator of the nonlinear term for the time stepper.
class NonlinearOperator {
 public:
  NonlinearOperator(Grid grid, const FluxSpec& spec);

  /// out = -P d/dx F[f(u)]; returns max |f'(u)| over the grid. Throws NonFiniteError
  /// (tagged with `t`) if f(u) overflows.
  double apply(std::span<const Complex> u, std::span<Complex> out, double t);

 private:
  Grid grid_;
  FluxSpec spec_;
  Fft fft_;
  std::vector<double> phys_;
  std::vector<Complex> coeffs_;
};

}  // namespace detail

namespace flux {

/// f(y) = y^2 / 2.
FluxSpec burgers(double radius = 10.0);
/// f(y) = y^2 / 2 + eps y^4. Only passes validation when eps is small enough that the
/// quartic part stays invisible to the growth fit on [-R, R].
FluxSpec burgers_quartic_mix(double eps, double radius = 10.0);
/// f(y) = cosh(y). Test-only: strongly convex with sigma = 1 but fails the growth check.
FluxSpec cosh_capped(double radius = 5.0);
/// f(y) = c y. Linear transport; not strictly convex, so only usable unvalidated.
FluxSpec linear_transport(double speed);
/// f = 0. Reduces the dynamics to the fractional heat flow.
FluxSpec zero();

/// Looks up "burgers", "burgers_quartic_mix", "cosh_capped". Throws InvalidInput otherwise.
FluxSpec by_name(const std::string& name, double radius = 10.0);

}  // namespace flux

}  // namespace fburgers
