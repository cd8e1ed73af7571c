#include "fburgers/flux.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fburgers/errors.hpp"

namespace fburgers {

double fit_growth_exponent(const FluxSpec& spec, double lo, double hi, int n_samples) {
  if (!(lo > 0.0 && hi > lo) || n_samples < 3) throw InvalidInput("bad growth fit range");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double y = lo * std::pow(hi / lo, static_cast<double>(i) / (n_samples - 1));
    const double g = std::max(std::abs(spec.deriv(y)), std::abs(spec.deriv(-y)));
    if (!(g > 0.0) || !std::isfinite(g)) throw GrowthError("|f'| not positive and finite on fit range", 0.0);
    const double lx = std::log(y);
    const double ly = std::log(g);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = n_samples;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FluxReport validate(const FluxSpec& spec, int n_samples) {
  const double r = spec.validation_radius;
  if (!(r > 0.0)) throw InvalidInput("validation radius must be positive");
  if (n_samples < 100) throw InvalidInput("validation needs at least 100 samples");
  if (!(spec.sigma > 0.0)) throw InvalidInput("convexity floor sigma must be positive");

  double sigma_obs = std::numeric_limits<double>::infinity();
  double y_min = 0.0;
  double mismatch = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double y = -r + 2.0 * r * static_cast<double>(i) / (n_samples - 1);
    const double f2 = spec.deriv2(y);
    if (f2 < sigma_obs) {
      sigma_obs = f2;
      y_min = y;
    }
    // Central-difference cross-check of the supplied derivatives.
    const double h = 1e-4 * std::max(1.0, std::abs(y));
    const double fd1 = (spec.eval(y + h) - spec.eval(y - h)) / (2.0 * h);
    const double fd2 = (spec.deriv(y + h) - spec.deriv(y - h)) / (2.0 * h);
    const double d1 = spec.deriv(y);
    mismatch = std::max(mismatch, std::abs(fd1 - d1) / std::max(1.0, std::abs(d1)));
    mismatch = std::max(mismatch, std::abs(fd2 - f2) / std::max(1.0, std::abs(f2)));
  }
  if (mismatch > 1e-6) {
    throw InvalidInput("flux '" + spec.name + "': supplied derivatives disagree with central differences");
  }
  if (sigma_obs < spec.sigma * (1.0 - 1e-6)) {
    throw ConvexityError("flux '" + spec.name + "': f'' below sigma", y_min);
  }
  const double h1 = fit_growth_exponent(spec, r, 10.0 * r);
  if (h1 >= 2.0) {
    throw GrowthError("flux '" + spec.name + "': growth exponent of f' is >= 2", h1);
  }
  return {sigma_obs, h1, mismatch, true};
}

namespace detail {

NonlinearOperator::NonlinearOperator(Grid grid, const FluxSpec& spec)
    : grid_(grid), spec_(spec), fft_(grid.n_points()), phys_(grid.n_points()), coeffs_(grid.n_modes()) {}

double NonlinearOperator::apply(std::span<const Complex> u, std::span<Complex> out, double t) {
  fft_.inverse(u, phys_);
  double speed = 0.0;
  if (spec_.batch) {
    speed = spec_.batch(phys_);
  } else {
    for (double& v : phys_) {
      speed = std::max(speed, std::abs(spec_.deriv(v)));
      v = spec_.eval(v);
    }
  }
  for (double v : phys_) {
    if (!std::isfinite(v)) throw NonFiniteError("flux evaluation overflowed", t);
  }
  fft_.forward(phys_, coeffs_);
  const std::size_t cutoff = grid_.dealias_cutoff();
  out[0] = Complex{};
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (k > cutoff) {
      out[k] = Complex{};
      continue;
    }
    // -(2 pi i k) c_k
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
    out[k] = Complex{w * coeffs_[k].imag(), -w * coeffs_[k].real()};
  }
  return speed;
}

}  // namespace detail

SpectralField nonlinear_term(const SpectralField& u, const FluxSpec& spec) {
  std::vector<Complex> out(u.grid().n_modes());
  detail::NonlinearOperator(u.grid(), spec).apply(u.coeffs(), out, u.time());
  return SpectralField(u.grid(), std::move(out), u.time());
}

namespace flux {

FluxSpec burgers(double radius) {
  FluxSpec f{"burgers", [](double y) { return 0.5 * y * y; }, [](double y) { return y; },
             [](double) { return 1.0; }, 1.0, 1.0, radius, {}};
  f.batch = [](std::span<double> v) {
    double speed = 0.0;
    for (double& y : v) {
      speed = std::max(speed, std::abs(y));
      y = 0.5 * y * y;
    }
    return speed;
  };
  return f;
}

FluxSpec burgers_quartic_mix(double eps, double radius) {
  return {"burgers_quartic_mix",
          [eps](double y) { return 0.5 * y * y + eps * y * y * y * y; },
          [eps](double y) { return y + 4.0 * eps * y * y * y; },
          [eps](double y) { return 1.0 + 12.0 * eps * y * y; },
          1.0,
          1.0,
          radius,
          {}};
}

FluxSpec cosh_capped(double radius) {
  return {"cosh_capped", [](double y) { return std::cosh(y); }, [](double y) { return std::sinh(y); },
          [](double y) { return std::cosh(y); }, 1.0, 1.0, radius, {}};
}

FluxSpec linear_transport(double speed) {
  return {"linear_transport", [speed](double y) { return speed * y; }, [speed](double) { return speed; },
          [](double) { return 0.0; }, 0.0, 0.0, 1.0, {}};
}

FluxSpec zero() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
          0.0, 0.0, 1.0, {}};
}

FluxSpec by_name(const std::string& name, double radius) {
  if (name == "burgers") return burgers(radius);
  if (name == "burgers_quartic_mix") return burgers_quartic_mix(1e-6, radius);
  if (name == "cosh_capped") return cosh_capped(radius);
  throw InvalidInput("unknown flux '" + name + "'");
}

}  // namespace flux

}  // namespace fburgers
