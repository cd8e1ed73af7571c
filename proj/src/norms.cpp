#include "fburgers/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fburgers/errors.hpp"

namespace fburgers {

void NormRequest::validate() const {
  switch (kind) {
    case NormKind::Lp:
    case NormKind::Wmp:
      if (m < 0) throw InvalidInput("derivative order must be >= 0");
      if (!(p >= 1.0)) throw InvalidInput("Lebesgue exponent must lie in [1, inf]");
      break;
    case NormKind::Hs:
      if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("Sobolev order must be >= 0");
      break;
    case NormKind::HsIncrement:
      if (!(s > 0.0 && s < 1.0)) throw InvalidInput("increment norm requires s in (0, 1)");
      break;
  }
}

namespace {

std::string number_label(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string NormRequest::label() const {
  switch (kind) {
    case NormKind::Lp:
      return "L" + number_label(p);
    case NormKind::Wmp:
      return "W" + std::to_string(m) + "," + number_label(p);
    case NormKind::Hs:
      return "H" + number_label(s);
    case NormKind::HsIncrement:
      return "Hinc" + number_label(s);
  }
  return "?";
}

double lp_norm(std::span<const double> samples, double p) {
  if (samples.empty()) return 0.0;
  if (std::isinf(p)) {
    double mx = 0.0;
    for (double v : samples) mx = std::max(mx, std::abs(v));
    return mx;
  }
  double sum = 0.0;
  if (p == 1.0) {
    for (double v : samples) sum += std::abs(v);
  } else if (p == 2.0) {
    for (double v : samples) sum += v * v;
  } else {
    for (double v : samples) sum += std::pow(std::abs(v), p);
  }
  return std::pow(sum / static_cast<double>(samples.size()), 1.0 / p);
}

std::vector<double> lattice_increment_s2(const SpectralField& field) {
  const std::size_t n = field.grid().n_points();
  std::vector<Complex> power(field.grid().n_modes());
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(field.coeffs()[k]);
  std::vector<double> autocorr(n);
  detail::Fft(n).inverse(power, autocorr);
  std::vector<double> s2(n + 1);
  for (std::size_t j = 0; j < n; ++j) s2[j] = std::max(0.0, 2.0 * (autocorr[0] - autocorr[j]));
  s2[0] = 0.0;
  s2[n] = 0.0;
  return s2;
}

namespace {

double hs_norm(const SpectralField& field, double s) {
  const auto c = field.coeffs();
  const std::size_t n = field.grid().n_points();
  double sum = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double weight = s == 0.0 ? 1.0 : std::pow(static_cast<double>(k), 2.0 * s);
    sum += detail::mode_multiplicity(k, n) * weight * std::norm(c[k]);
  }
  return std::pow(2.0 * std::numbers::pi, s) * std::sqrt(sum);
}

// Cells [(j-1)dx, j dx]. The first cell uses the quadratic small-shift behaviour of S2;
// later cells pair the trapezoid value of S2 with the exact integral of l^{-(2s+1)}.
double hs_increment_norm(const SpectralField& field, double s) {
  const auto s2 = lattice_increment_s2(field);
  const std::size_t n = field.grid().n_points();
  const double dx = field.grid().dx();
  double total = s2[1] * std::pow(dx, -2.0 * s) / (2.0 - 2.0 * s);
  for (std::size_t j = 2; j <= n; ++j) {
    const double lo = static_cast<double>(j - 1) * dx;
    const double hi = static_cast<double>(j) * dx;
    const double weight = (std::pow(lo, -2.0 * s) - std::pow(hi, -2.0 * s)) / (2.0 * s);
    total += 0.5 * (s2[j - 1] + s2[j]) * weight;
  }
  return std::sqrt(total);
}

}  // namespace

double norm(const SpectralField& field, const NormRequest& req) {
  req.validate();
  switch (req.kind) {
    case NormKind::Hs:
      return hs_norm(field, req.s);
    case NormKind::HsIncrement:
      return hs_increment_norm(field, req.s);
    case NormKind::Lp:
    case NormKind::Wmp: {
      const int m = req.kind == NormKind::Lp ? 0 : req.m;
      const auto samples =
          m == 0 ? inverse_transform(field) : inverse_transform(spectral_derivative(field, m));
      return lp_norm(samples, req.p);
    }
  }
  return 0.0;
}

InterpolationCheck interpolation_check(const SpectralField& field, double s1, double s2, double s3) {
  if (!(s1 <= s2 && s2 <= s3) || s1 < 0.0) {
    throw InvalidInput("interpolation orders must satisfy 0 <= s1 <= s2 <= s3");
  }
  const double lhs = hs_norm(field, s2);
  if (s1 == s3) return {lhs, lhs, 1.0};
  const double theta = (s3 - s2) / (s3 - s1);
  const double rhs = std::pow(hs_norm(field, s1), theta) * std::pow(hs_norm(field, s3), 1.0 - theta);
  if (rhs == 0.0) return {lhs, rhs, 1.0};
  return {lhs, rhs, lhs / rhs};
}

}  // namespace fburgers
