#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fburgers {

using Complex = std::complex<double>;

/// Uniform collocation grid on the unit torus R/Z.
class Grid {
 public:
  /// Throws InvalidInput unless n_points is even and at least 8.
  explicit Grid(std::size_t n_points);

  std::size_t n_points() const noexcept { return n_; }
  /// Number of stored one-sided coefficients, n/2 + 1.
  std::size_t n_modes() const noexcept { return n_ / 2 + 1; }
  std::size_t nyquist() const noexcept { return n_ / 2; }
  /// Largest wavenumber kept by the two-thirds rule.
  std::size_t dealias_cutoff() const noexcept { return n_ / 3; }
  double dx() const noexcept { return 1.0 / static_cast<double>(n_); }
  double x(std::size_t j) const noexcept { return static_cast<double>(j) * dx(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_;
};

/// Zero-mean real periodic field stored as one-sided Fourier coefficients.
///
/// Coefficient convention: u(x) = sum_k c_k exp(2 pi i k x), c_{-k} = conj(c_k),
/// so sin(2 pi x) has c_1 = -i/2. The k = 0 entry is always exactly zero and the
/// Nyquist entry is real.
class SpectralField {
 public:
  /// Validates size, finiteness, zero mean and a real Nyquist coefficient.
  SpectralField(Grid grid, std::vector<Complex> coeffs, double time = 0.0);

  static SpectralField zeros(Grid grid, double time = 0.0);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const Complex> coeffs() const noexcept { return coeffs_; }
  double time() const noexcept { return time_; }
  SpectralField with_time(double t) const;

  /// Coefficient for a signed wavenumber |k| <= n/2.
  Complex mode(long k) const;

  bool is_zero() const noexcept;

 private:
  Grid grid_;
  std::vector<Complex> coeffs_;
  double time_;
};

/// Result of a forward transform: the zero-mean field and the mean that was removed.
struct ForwardResult {
  SpectralField field;
  double removed_mean;
};

ForwardResult forward_transform(Grid grid, std::span<const double> samples, double time = 0.0);
std::vector<double> inverse_transform(const SpectralField& field);

/// c_k -> scale * (2 pi |k|)^alpha * c_k.
SpectralField apply_multiplier(const SpectralField& field, double alpha, double scale = 1.0);

/// c_k -> (2 pi i k)^order * c_k. Odd orders drop the Nyquist mode to stay real.
SpectralField spectral_derivative(const SpectralField& field, int order);

/// Zeroes every |k| > floor(n/3).
SpectralField dealias(const SpectralField& field);

/// Linear combination a*v + b*w on the same grid; time tag taken from v.
SpectralField combine(double a, const SpectralField& v, double b, const SpectralField& w);

namespace detail {

/// Thread-safe r2c/c2r transforms of a fixed length, backed by cached FFTW plans.
/// Forward output is normalized by 1/n; inverse is the plain synthesis sum.
class Fft {
 public:
  explicit Fft(std::size_t n);

  void forward(std::span<const double> in, std::span<Complex> out) const;
  /// `in` is copied; callers keep their coefficients.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  void* r2c_;
  void* c2r_;
};

/// Weight of one-sided index k when summing over all signed wavenumbers.
inline double mode_multiplicity(std::size_t k, std::size_t n) {
  return (k == 0 || 2 * k == n) ? 1.0 : 2.0;
}

}  // namespace detail

}  // namespace fburgers
