#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fburgers/spectral.hpp"

namespace fburgers {

enum class NormKind { Lp, Wmp, Hs, HsIncrement };

/// Which norm to evaluate. `p` may be +infinity.
struct NormRequest {
  NormKind kind = NormKind::Hs;
  int m = 0;
  double p = 2.0;
  double s = 0.0;

  static NormRequest lp(double p) { return {NormKind::Lp, 0, p, 0.0}; }
  static NormRequest wmp(int m, double p) { return {NormKind::Wmp, m, p, 0.0}; }
  static NormRequest hs(double s) { return {NormKind::Hs, 0, 2.0, s}; }
  static NormRequest hs_increment(double s) { return {NormKind::HsIncrement, 0, 2.0, s}; }

  /// Throws InvalidInput on out-of-range parameters.
  void validate() const;
  /// Stable column label, e.g. "W1inf", "H0.75", "L2".
  std::string label() const;

  friend bool operator==(const NormRequest&, const NormRequest&) = default;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Lp and W^{m,p} norms use the rectangle rule on the collocation grid; p = inf is
/// the grid maximum. Hs is the Fourier-side norm counting +-k. HsIncrement is the
/// increment double integral over lattice shifts.
double norm(const SpectralField& field, const NormRequest& req);

/// Lp norm of physical samples with the rectangle rule (p = inf gives the max).
double lp_norm(std::span<const double> samples, double p);

/// S2(j dx) = int |v(x + j dx) - v(x)|^2 dx for j = 0..n, computed from the power spectrum.
std::vector<double> lattice_increment_s2(const SpectralField& field);

struct InterpolationCheck {
  double lhs;
  double rhs;
  double ratio;
};

/// ||v||_{s2} against ||v||_{s1}^theta ||v||_{s3}^{1-theta}, theta = (s3 - s2)/(s3 - s1).
InterpolationCheck interpolation_check(const SpectralField& field, double s1, double s2, double s3);

}  // namespace fburgers
