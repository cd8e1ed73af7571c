#include "fburgers/stepper.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fburgers/diagnostics.hpp"
#include "fburgers/errors.hpp"

namespace fburgers {

std::string to_string(Scheme s) { return s == Scheme::ETDRK2 ? "ETDRK2" : "ETDRK4"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "ETDRK2") return Scheme::ETDRK2;
  if (s == "ETDRK4") return Scheme::ETDRK4;
  throw InvalidInput("unknown scheme '" + s + "'");
}

void StepperConfig::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw InvalidInput("alpha must lie in (1, 2]");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidInput("nu must be positive");
  if (!(dt_cfl > 0.0) || !(dt_max > 0.0)) throw InvalidInput("step controls must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be finite and >= 0");
  if (!(c_res > 0.0)) throw InvalidInput("c_res must be positive");
}

std::vector<double> geometric_schedule(double t_first, double t_end, std::size_t count) {
  std::vector<double> out{0.0};
  if (!(t_end > 0.0) || count == 0) return out;
  if (count == 1 || !(t_first > 0.0) || t_first >= t_end) {
    out.push_back(t_end);
    return out;
  }
  const double ratio = std::log(t_end / t_first) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i + 1 < count; ++i) out.push_back(t_first * std::exp(ratio * static_cast<double>(i)));
  out.push_back(t_end);
  return out;
}

namespace {

std::vector<double> linear_rates(double nu, double alpha, Grid grid) {
  std::vector<double> lambda(grid.n_modes());
  for (std::size_t k = 1; k < lambda.size(); ++k) {
    lambda[k] = nu * std::pow(2.0 * std::numbers::pi * static_cast<double>(k), alpha);
  }
  return lambda;
}

double rate_from_coeffs(std::span<const Complex> c, std::span<const double> lambda, std::size_t n) {
  // nu ||u||_{alpha/2}^2 = sum over signed k of lambda_k |c_k|^2
  double sum = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) sum += detail::mode_multiplicity(k, n) * lambda[k] * std::norm(c[k]);
  return sum;
}

void check_finite(std::span<const Complex> c, double t) {
  for (const auto& v : c) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NonFiniteError("solution became non-finite at t = " + std::to_string(t), t);
    }
  }
}

double phi_series(int j, double z, int terms) {
  // sum_{i < terms} z^i / (i + j)!
  double fact = 1.0;
  for (int i = 2; i <= j; ++i) fact *= i;
  double term = 1.0 / fact;
  double sum = term;
  for (int i = 1; i < terms; ++i) {
    term *= z / static_cast<double>(i + j);
    sum += term;
  }
  return sum;
}

EtdCoefficients coefficients_from_rates(std::vector<double> lambda, double dt);

/// Owns the per-grid buffers for the ETD stage evaluations.
class Engine {
 public:
  Engine(Grid grid, const StepperConfig& cfg, const FluxSpec& flux)
      : grid_(grid),
        cfg_(cfg),
        op_(grid, flux),
        lambda_(linear_rates(cfg.nu, cfg.alpha, grid)),
        na_(grid.n_modes()),
        nb_(grid.n_modes()),
        nc_(grid.n_modes()),
        a_(grid.n_modes()),
        b_(grid.n_modes()),
        c_(grid.n_modes()) {}

  double evaluate(std::span<const Complex> u, std::span<Complex> out, double t) { return op_.apply(u, out, t); }

  const std::vector<double>& lambda() const { return lambda_; }

  /// Advances u by dt given nu_ = N(u).
  void advance(std::vector<Complex>& u, std::span<const Complex> nu_, double dt, double t) {
    const auto& e = coefficients(dt);
    const std::size_t m = u.size();
    if (cfg_.scheme == Scheme::ETDRK2) {
      for (std::size_t k = 0; k < m; ++k) a_[k] = e.decay[k] * u[k] + dt * e.phi1[k] * nu_[k];
      op_.apply(a_, na_, t + dt);
      for (std::size_t k = 0; k < m; ++k) u[k] = a_[k] + dt * e.phi2[k] * (na_[k] - nu_[k]);
    } else {
      const double h2 = 0.5 * dt;
      for (std::size_t k = 0; k < m; ++k) a_[k] = e.decay_half[k] * u[k] + h2 * e.phi1_half[k] * nu_[k];
      op_.apply(a_, na_, t + h2);
      for (std::size_t k = 0; k < m; ++k) b_[k] = e.decay_half[k] * u[k] + h2 * e.phi1_half[k] * na_[k];
      op_.apply(b_, nb_, t + h2);
      for (std::size_t k = 0; k < m; ++k) {
        c_[k] = e.decay_half[k] * a_[k] + h2 * e.phi1_half[k] * (2.0 * nb_[k] - nu_[k]);
      }
      op_.apply(c_, nc_, t + dt);
      for (std::size_t k = 0; k < m; ++k) {
        const double p1 = e.phi1[k], p2 = e.phi2[k], p3 = e.phi3[k];
        const double f1 = p1 - 3.0 * p2 + 4.0 * p3;
        const double f2 = p2 - 2.0 * p3;
        const double f3 = -p2 + 4.0 * p3;
        u[k] = e.decay[k] * u[k] + dt * (f1 * nu_[k] + 2.0 * f2 * (na_[k] + nb_[k]) + f3 * nc_[k]);
      }
    }
    u[0] = Complex{};
    u.back() = Complex{u.back().real(), 0.0};
    check_finite(u, t + dt);
  }

 private:
  // Two slots: the running step size and the occasional step clipped to a sample time.
  const EtdCoefficients& coefficients(double dt) {
    for (auto& slot : cache_) {
      if (!slot.lambda.empty() && slot.dt == dt) return slot;
    }
    std::swap(cache_[0], cache_[1]);
    cache_[0] = coefficients_from_rates(lambda_, dt);
    return cache_[0];
  }

  Grid grid_;
  StepperConfig cfg_;
  detail::NonlinearOperator op_;
  std::vector<double> lambda_;
  std::array<EtdCoefficients, 2> cache_{};
  std::vector<Complex> na_, nb_, nc_, a_, b_, c_;
};

double propose_dt(double speed, double dt_last, const StepperConfig& cfg, const Grid& grid) {
  double dt = cfg.dt_max;
  if (speed > 0.0) dt = std::min(dt, cfg.dt_cfl * grid.dx() / speed);
  if (dt_last > 0.0) dt = std::min(dt, 2.0 * dt_last);
  return dt;
}

/// Largest dt_max * 2^(-m/16) not above dt, so ETD tables are reused across steps.
double ladder_dt(double dt, double dt_max) {
  if (dt >= dt_max) return dt_max;
  const double m = std::ceil(16.0 * std::log2(dt_max / dt) - 1e-9);
  return dt_max * std::exp2(-m / 16.0);
}

}  // namespace

SpectralField heat_semigroup(const SpectralField& field, double nu, double alpha, double t) {
  if (!(t >= 0.0)) throw InvalidInput("semigroup time must be >= 0");
  std::vector<Complex> c(field.coeffs().begin(), field.coeffs().end());
  for (std::size_t k = 1; k < c.size(); ++k) {
    c[k] *= std::exp(-nu * std::pow(2.0 * std::numbers::pi * static_cast<double>(k), alpha) * t);
  }
  return SpectralField(field.grid(), std::move(c), field.time() + t);
}

double phi(int j, double z) {
  switch (j) {
    case 0:
      return std::exp(z);
    case 1:
      if (std::abs(z) < 1e-3) return phi_series(1, z, 7);
      return std::expm1(z) / z;
    case 2:
      if (std::abs(z) < 1.0) return phi_series(2, z, 24);
      return (std::expm1(z) - z) / (z * z);
    case 3:
      if (std::abs(z) < 1.0) return phi_series(3, z, 24);
      return (std::expm1(z) - z - 0.5 * z * z) / (z * z * z);
    default:
      throw InvalidInput("phi index must be 0..3");
  }
}

namespace {

EtdCoefficients coefficients_from_rates(std::vector<double> lambda, double dt) {
  EtdCoefficients e;
  e.dt = dt;
  e.lambda = std::move(lambda);
  const std::size_t m = e.lambda.size();
  e.decay.resize(m);
  e.decay_half.resize(m);
  e.phi1.resize(m);
  e.phi2.resize(m);
  e.phi3.resize(m);
  e.phi1_half.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double z = -e.lambda[k] * dt;
    e.decay[k] = std::exp(z);
    e.decay_half[k] = std::exp(0.5 * z);
    e.phi1[k] = phi(1, z);
    e.phi2[k] = phi(2, z);
    e.phi3[k] = phi(3, z);
    e.phi1_half[k] = phi(1, 0.5 * z);
  }
  return e;
}

}  // namespace

EtdCoefficients etd_coefficients(double nu, double alpha, double dt, Grid grid) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  return coefficients_from_rates(linear_rates(nu, alpha, grid), dt);
}

SolverState step(const SolverState& state, const StepperConfig& cfg, const FluxSpec& flux, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const Grid grid = state.field.grid();
  Engine eng(grid, cfg, flux);
  std::vector<Complex> u(state.field.coeffs().begin(), state.field.coeffs().end());
  std::vector<Complex> nu_(grid.n_modes());
  eng.evaluate(u, nu_, state.t);
  const double r0 = rate_from_coeffs(u, eng.lambda(), grid.n_points());
  eng.advance(u, nu_, dt, state.t);
  const double r1 = rate_from_coeffs(u, eng.lambda(), grid.n_points());
  const double t = state.t + dt;
  return {SpectralField(grid, std::move(u), t), t, state.step_count + 1, dt, state.dissipated + dt * (r0 + r1)};
}

double cfl_dt(const SolverState& state, const StepperConfig& cfg, const FluxSpec& flux) {
  if (state.field.is_zero()) return cfg.dt_max;
  double speed = 0.0;
  for (double v : inverse_transform(state.field)) speed = std::max(speed, std::abs(flux.deriv(v)));
  return propose_dt(speed, state.dt_last, cfg, state.field.grid());
}

bool resolution_ok(const Grid& grid, const StepperConfig& cfg) {
  return grid.dx() <= cfg.c_res * std::pow(cfg.nu, cfg.beta());
}

double dissipation_rate(const SpectralField& u, double nu, double alpha) {
  return rate_from_coeffs(u.coeffs(), linear_rates(nu, alpha, u.grid()), u.grid().n_points());
}

DiagnosticsRecord make_record(const SpectralField& u, const StepperConfig& cfg, const MonitorConfig& monitors) {
  DiagnosticsRecord r;
  r.t = u.time();
  const auto phys = inverse_transform(u);
  const auto ux = inverse_transform(spectral_derivative(u, 1));
  r.energy = std::pow(norm(u, NormRequest::hs(0.0)), 2);
  r.dissipation_rate = dissipation_rate(u, cfg.nu, cfg.alpha);
  r.max_ux = *std::max_element(ux.begin(), ux.end());
  r.sup_norm = lp_norm(phys, kInf);
  r.w11 = lp_norm(ux, 1.0);
  for (const auto& req : monitors.norms) r.norms[req.label()] = norm(u, req);
  for (double p : monitors.sp_orders) {
    for (std::size_t j : monitors.sp_shifts) r.sp[{p, j}] = increment_moment(phys, p, j);
  }
  for (std::size_t k : monitors.spectrum_ks) r.spectrum[k] = band_energy(u, k, monitors.band_m);

  double bound = kInf;
  if (r.t > 0.0) bound = 1.0 / (monitors.sigma * r.t);
  if (monitors.d_value > 0.0) bound = std::min(bound, monitors.d_value);
  r.oleinik_bound = bound;
  const double cap = bound * (1.0 + monitors.eps_disc);
  r.maxprin_margin = cap - r.max_ux;
  r.supnorm_margin = cap - r.sup_norm;
  r.w11_margin = cap - 0.5 * r.w11;
  return r;
}

SolverRun integrate(const SpectralField& u0, const StepperConfig& cfg, const FluxSpec& flux,
                    const MonitorConfig& monitors) {
  return integrate(SolverState{u0, u0.time(), 0, 0.0, 0.0}, cfg, flux, monitors);
}

SolverRun integrate(const SolverState& initial, const StepperConfig& cfg, const FluxSpec& flux,
                    const MonitorConfig& monitors) {
  cfg.validate();
  const Grid grid = initial.field.grid();
  SolverRun run{cfg, flux.name, flux.sigma, {}, {}, initial, {}};
  if (!resolution_ok(grid, cfg)) {
    const std::string msg = "grid under-resolves nu^beta: dx = " + std::to_string(grid.dx()) +
                            " > c_res * nu^beta = " + std::to_string(cfg.c_res * std::pow(cfg.nu, cfg.beta()));
    if (!cfg.allow_underresolved) throw InvalidInput(msg);
    run.warnings.push_back(msg);
  }

  auto record = [&](const SolverState& s, double e0) {
    auto r = make_record(s.field.with_time(s.t), cfg, monitors);
    r.step = s.step_count;
    r.dissipated = s.dissipated;
    r.budget_residual = e0 > 0.0 ? (r.energy - e0 + (s.dissipated - initial.dissipated)) / e0 : 0.0;
    run.records.push_back(std::move(r));
    if (monitors.keep_fields) run.fields.push_back(s.field.with_time(s.t));
  };
  const double e0 = std::pow(norm(initial.field, NormRequest::hs(0.0)), 2);
  record(initial, e0);
  if (cfg.t_end <= initial.t) return run;

  std::vector<double> targets;
  for (double ts : monitors.sample_times) {
    if (ts > initial.t && ts < cfg.t_end) targets.push_back(ts);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(cfg.t_end);

  Engine eng(grid, cfg, flux);
  std::vector<Complex> u(initial.field.coeffs().begin(), initial.field.coeffs().end());
  std::vector<Complex> nu_(grid.n_modes());
  double t = initial.t;
  double dt_last = initial.dt_last;
  double dissipated = initial.dissipated;
  std::uint64_t steps = initial.step_count;
  double rate = rate_from_coeffs(u, eng.lambda(), grid.n_points());

  for (double target : targets) {
    while (t < target) {
      const double speed = eng.evaluate(u, nu_, t);
      const double dt_prop = ladder_dt(propose_dt(speed, dt_last, cfg, grid), cfg.dt_max);
      double dt = dt_prop;
      bool hit = false;
      if (t + dt >= target - 0.01 * dt_prop) {
        dt = target - t;
        hit = true;
      }
      eng.advance(u, nu_, dt, t);
      t = hit ? target : t + dt;
      const double next_rate = rate_from_coeffs(u, eng.lambda(), grid.n_points());
      dissipated += dt * (rate + next_rate);
      rate = next_rate;
      dt_last = dt_prop;
      ++steps;
    }
    SolverState s{SpectralField(grid, u, t), t, steps, dt_last, dissipated};
    record(s, e0);
    run.final_state = std::move(s);
  }
  return run;
}

}  // namespace fburgers
