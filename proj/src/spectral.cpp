#include "fburgers/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "fburgers/errors.hpp"

namespace fburgers {

Grid::Grid(std::size_t n_points) : n_(n_points) {
  if (n_points < 8 || n_points % 2 != 0) {
    throw InvalidInput("grid size must be even and >= 8, got " + std::to_string(n_points));
  }
}

SpectralField::SpectralField(Grid grid, std::vector<Complex> coeffs, double time)
    : grid_(grid), coeffs_(std::move(coeffs)), time_(time) {
  if (coeffs_.size() != grid_.n_modes()) {
    throw InvalidInput("expected " + std::to_string(grid_.n_modes()) + " coefficients, got " +
                       std::to_string(coeffs_.size()));
  }
  for (const auto& c : coeffs_) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw NonFiniteError("non-finite Fourier coefficient", time_);
    }
  }
  if (coeffs_[0] != Complex{}) throw InvalidInput("zero mode must vanish");
  if (coeffs_.back().imag() != 0.0) throw InvalidInput("Nyquist coefficient must be real");
}

SpectralField SpectralField::zeros(Grid grid, double time) {
  return SpectralField(grid, std::vector<Complex>(grid.n_modes()), time);
}

SpectralField SpectralField::with_time(double t) const {
  SpectralField out = *this;
  out.time_ = t;
  return out;
}

Complex SpectralField::mode(long k) const {
  const auto a = static_cast<std::size_t>(k < 0 ? -k : k);
  if (a > grid_.nyquist()) throw InvalidInput("wavenumber out of range");
  return k < 0 ? std::conj(coeffs_[a]) : coeffs_[a];
}

bool SpectralField::is_zero() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) { return c == Complex{}; });
}

namespace detail {
namespace {

struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

// FFTW's planner is not re-entrant; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  const int ni = static_cast<int>(n);
  double* r = fftw_alloc_real(n);
  fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
  // FFTW_ESTIMATE keeps the chosen algorithm, and hence the rounding, reproducible.
  PlanPair p{fftw_plan_dft_r2c_1d(ni, r, c, FFTW_ESTIMATE),
             fftw_plan_dft_c2r_1d(ni, c, r, FFTW_ESTIMATE)};
  fftw_free(r);
  fftw_free(c);
  cache.emplace(n, p);
  return p;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

struct Scratch {
  std::size_t n = 0;
  std::unique_ptr<double, FftwDeleter> real;
  std::unique_ptr<fftw_complex, FftwDeleter> cplx;

  void ensure(std::size_t size) {
    if (n == size) return;
    real.reset(fftw_alloc_real(size));
    cplx.reset(fftw_alloc_complex(size / 2 + 1));
    n = size;
  }
};

Scratch& scratch(std::size_t n) {
  thread_local Scratch s;
  s.ensure(n);
  return s;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  const auto p = plans_for(n);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void Fft::forward(std::span<const double> in, std::span<Complex> out) const {
  auto& s = scratch(n_);
  std::copy(in.begin(), in.end(), s.real.get());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), s.real.get(), s.cplx.get());
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k < n_ / 2 + 1; ++k) {
    out[k] = Complex{s.cplx.get()[k][0] * inv_n, s.cplx.get()[k][1] * inv_n};
  }
}

void Fft::inverse(std::span<const Complex> in, std::span<double> out) const {
  auto& s = scratch(n_);
  std::memcpy(s.cplx.get(), in.data(), sizeof(fftw_complex) * (n_ / 2 + 1));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), s.cplx.get(), s.real.get());
  std::copy(s.real.get(), s.real.get() + n_, out.begin());
}

}  // namespace detail

ForwardResult forward_transform(Grid grid, std::span<const double> samples, double time) {
  const std::size_t n = grid.n_points();
  if (samples.size() != n) throw InvalidInput("sample count does not match grid");
  for (double v : samples) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite sample");
  }
  std::vector<Complex> c(grid.n_modes());
  detail::Fft(n).forward(samples, c);
  const double mean = c[0].real();
  c[0] = Complex{};
  c.back() = Complex{c.back().real(), 0.0};
  return {SpectralField(grid, std::move(c), time), mean};
}

std::vector<double> inverse_transform(const SpectralField& field) {
  std::vector<double> out(field.grid().n_points());
  detail::Fft(out.size()).inverse(field.coeffs(), out);
  return out;
}

SpectralField apply_multiplier(const SpectralField& field, double alpha, double scale) {
  if (!(alpha >= 0.0)) throw InvalidInput("multiplier exponent must be >= 0");
  std::vector<Complex> c(field.coeffs().begin(), field.coeffs().end());
  for (std::size_t k = 1; k < c.size(); ++k) {
    c[k] *= scale * std::pow(2.0 * std::numbers::pi * static_cast<double>(k), alpha);
  }
  return SpectralField(field.grid(), std::move(c), field.time());
}

SpectralField spectral_derivative(const SpectralField& field, int order) {
  if (order < 1) throw InvalidInput("derivative order must be >= 1");
  static constexpr Complex kIPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex phase = kIPowers[order % 4];
  std::vector<Complex> c(field.coeffs().begin(), field.coeffs().end());
  for (std::size_t k = 1; k < c.size(); ++k) {
    double mag = 1.0;
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
    for (int i = 0; i < order; ++i) mag *= w;
    c[k] *= phase * mag;
  }
  if (order % 2 == 1) {
    c.back() = Complex{};
  } else {
    c.back() = Complex{c.back().real(), 0.0};
  }
  return SpectralField(field.grid(), std::move(c), field.time());
}

SpectralField dealias(const SpectralField& field) {
  std::vector<Complex> c(field.coeffs().begin(), field.coeffs().end());
  for (std::size_t k = field.grid().dealias_cutoff() + 1; k < c.size(); ++k) c[k] = Complex{};
  return SpectralField(field.grid(), std::move(c), field.time());
}

SpectralField combine(double a, const SpectralField& v, double b, const SpectralField& w) {
  if (!(v.grid() == w.grid())) throw InvalidInput("grid mismatch");
  std::vector<Complex> c(v.coeffs().size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = a * v.coeffs()[k] + b * w.coeffs()[k];
  return SpectralField(v.grid(), std::move(c), v.time());
}

}  // namespace fburgers
