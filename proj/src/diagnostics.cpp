#include "fburgers/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "fburgers/errors.hpp"
#include "fburgers/norms.hpp"
#include "fburgers/stepper.hpp"

namespace fburgers {

DQuantity compute_D(const SpectralField& u0) {
  if (u0.is_zero()) throw DegenerateInitialData("D is undefined for the zero initial condition");
  const double l1 = norm(u0, NormRequest::lp(1.0));
  const double w1inf = norm(u0, NormRequest::wmp(1, kInf));
  const DQuantity d{std::max(1.0 / l1, w1inf), 1.0 / l1, w1inf};
  if (!(d.value > 1.0)) throw DegenerateInitialData("D must exceed 1 for a zero-mean field");
  return d;
}

RangePartition RangePartition::make(double K, double alpha, double nu) {
  if (!(K >= 1.0)) throw InvalidInput("K must be >= 1");
  if (!(alpha > 1.0 && alpha <= 2.0)) throw InvalidInput("alpha must lie in (1, 2]");
  if (!(nu > 0.0)) throw InvalidInput("nu must be positive");
  const double beta = 1.0 / (alpha - 1.0);
  const double k2 = 1.0 / (K * K);
  RangePartition r{K, alpha, nu, beta, 0.25 * k2, k2 * k2 / 20.0, std::pow(k2 / 6.0, 1.0 / beta)};
  if (nu > r.nu0) {
    throw InvalidInput("nu = " + std::to_string(nu) + " exceeds nu0 = " + std::to_string(r.nu0) + " for K = " +
                       std::to_string(K));
  }
  return r;
}

TimeWindow TimeWindow::make(double D, double sigma, double C_tilde) {
  if (!(D > 0.0 && sigma > 0.0 && C_tilde > 0.0)) throw InvalidInput("window constants must be positive");
  const double t1 = 0.25 / (D * D * C_tilde);
  return {t1, std::max(1.5 * t1, 2.0 * D / sigma), C_tilde};
}

TimeWindow time_window(const DQuantity& D, double sigma, const SolverRun& run) {
  double peak = 0.0;
  for (const auto& r : run.records) peak = std::max(peak, r.dissipation_rate);
  if (!(peak > 0.0)) throw WindowNotCovered("run shows no dissipation; C~ cannot be estimated");
  const auto w = TimeWindow::make(D.value, sigma, 1.2 * peak);
  if (run.records.empty() || run.records.back().t < w.T2 * (1.0 - 1e-12)) {
    throw WindowNotCovered("run ends before T2 = " + std::to_string(w.T2));
  }
  return w;
}

double increment_moment(std::span<const double> v, double p, std::size_t shift) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (p == 0.0) return 1.0;
  shift %= n;
  double sum = 0.0;
  auto accumulate = [&](auto&& g) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ip = i + shift < n ? i + shift : i + shift - n;
      sum += g(std::abs(v[ip] - v[i]));
    }
  };
  if (p == 1.0) {
    accumulate([](double d) { return d; });
  } else if (p == 2.0) {
    accumulate([](double d) { return d * d; });
  } else if (p == 3.0) {
    accumulate([](double d) { return d * d * d; });
  } else if (p == 4.0) {
    accumulate([](double d) { return (d * d) * (d * d); });
  } else if (p == 0.5) {
    accumulate([](double d) { return std::sqrt(d); });
  } else {
    accumulate([p](double d) { return std::pow(d, p); });
  }
  return sum / static_cast<double>(n);
}

namespace {

std::pair<std::size_t, std::size_t> band_limits(std::size_t k, double M) {
  if (k < 1) throw InvalidInput("spectrum wavenumber must be >= 1");
  if (!(M >= 1.0)) throw InvalidInput("band parameter M must be >= 1");
  const double kd = static_cast<double>(k);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil(kd / M - 1e-9)));
  const auto hi = static_cast<std::size_t>(std::floor(kd * M + 1e-9));
  return {lo, hi};
}

}  // namespace

std::size_t band_count(std::size_t k, double M) {
  const auto [lo, hi] = band_limits(k, M);
  return 2 * (hi - lo + 1);
}

double band_energy(const SpectralField& u, std::size_t k, double M) {
  const auto [lo, hi] = band_limits(k, M);
  const auto c = u.coeffs();
  double sum = 0.0;
  for (std::size_t j = lo; j <= hi && j < c.size(); ++j) sum += 2.0 * std::norm(c[j]);
  return sum / static_cast<double>(2 * (hi - lo + 1));
}

double time_average(std::span<const double> times, std::span<const double> values, const TimeWindow& window,
                    double kappa) {
  if (times.size() != values.size() || times.empty()) throw InvalidInput("time series size mismatch");
  if (!(kappa > 0.0)) throw InvalidInput("moment exponent must be positive");
  const double t1 = window.T1, t2 = window.T2;
  const double tol = 1e-12 * std::max(1.0, t2);
  if (times.front() > t1 + tol || times.back() < t2 - tol) {
    throw WindowNotCovered("samples do not cover [T1, T2]");
  }
  auto raised = [&](std::size_t i) { return kappa == 1.0 ? values[i] : std::pow(values[i], kappa); };
  auto interp = [&](std::size_t i, double t) {
    const double span = times[i + 1] - times[i];
    if (span <= 0.0) return raised(i + 1);
    const double w = (t - times[i]) / span;
    return (1.0 - w) * raised(i) + w * raised(i + 1);
  };
  if (t2 <= t1) {
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      if (times[i + 1] >= t1) return std::pow(interp(i, t1), 1.0 / kappa);
    }
    return std::pow(raised(times.size() - 1), 1.0 / kappa);
  }
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double a = std::max(times[i], t1);
    const double b = std::min(times[i + 1], t2);
    if (b <= a) continue;
    integral += 0.5 * (b - a) * (interp(i, a) + interp(i, b));
  }
  const double mean = integral / (t2 - t1);
  return kappa == 1.0 ? mean : std::pow(mean, 1.0 / kappa);
}

double time_average(const SolverRun& run, const TimeWindow& window,
                    const std::function<double(const DiagnosticsRecord&)>& observable, double kappa) {
  std::vector<double> t, v;
  t.reserve(run.records.size());
  v.reserve(run.records.size());
  for (const auto& r : run.records) {
    t.push_back(r.t);
    v.push_back(observable(r));
  }
  return time_average(t, v, window, kappa);
}

std::size_t lattice_index(const Grid& grid, double ell) {
  const double j = ell / grid.dx();
  const double jr = std::round(j);
  if (!(std::abs(j - jr) <= 1e-9 * std::max(1.0, jr)) || jr < 1.0 || jr > static_cast<double>(grid.n_points())) {
    throw LatticeShiftError("shift " + std::to_string(ell) + " is not a lattice multiple j dx with 1 <= j <= n");
  }
  return static_cast<std::size_t>(jr);
}

namespace {

/// Indices of stored fields that contribute to a trapezoid average over the window.
std::pair<std::size_t, std::size_t> window_span(const SolverRun& run, const TimeWindow& window) {
  if (run.fields.empty()) throw InvalidInput("run has no stored fields");
  const std::size_t m = run.fields.size();
  const double tol = 1e-12 * std::max(1.0, window.T2);
  if (run.fields.front().time() > window.T1 + tol || run.fields.back().time() < window.T2 - tol) {
    throw WindowNotCovered("stored fields do not cover [T1, T2]");
  }
  std::size_t first = 0;
  while (first + 1 < m && run.fields[first + 1].time() <= window.T1) ++first;
  std::size_t last = m - 1;
  while (last > 0 && run.fields[last - 1].time() >= window.T2) --last;
  return {first, last};
}

}  // namespace

StructureTable structure_functions(const SolverRun& run, const TimeWindow& window, std::span<const double> orders,
                                   std::span<const std::size_t> shifts) {
  const auto [first, last] = window_span(run, window);
  const std::size_t count = last - first + 1;
  std::vector<double> times(count);
  // samples[i][j][t]
  std::vector<std::vector<std::vector<double>>> samples(
      orders.size(), std::vector<std::vector<double>>(shifts.size(), std::vector<double>(count)));
  for (std::size_t t = 0; t < count; ++t) {
    const auto& f = run.fields[first + t];
    times[t] = f.time();
    const auto phys = inverse_transform(f);
    for (std::size_t i = 0; i < orders.size(); ++i) {
      for (std::size_t j = 0; j < shifts.size(); ++j) samples[i][j][t] = increment_moment(phys, orders[i], shifts[j]);
    }
  }
  StructureTable out{{orders.begin(), orders.end()}, {shifts.begin(), shifts.end()}, {}};
  out.values.assign(orders.size(), std::vector<double>(shifts.size()));
  for (std::size_t i = 0; i < orders.size(); ++i) {
    for (std::size_t j = 0; j < shifts.size(); ++j) out.values[i][j] = time_average(times, samples[i][j], window);
  }
  return out;
}

double structure_function(const SolverRun& run, const TimeWindow& window, double p, double ell) {
  if (!(p >= 0.0)) throw InvalidInput("structure function order must be >= 0");
  const std::size_t j = lattice_index(run.grid(), ell);
  const double orders[] = {p};
  const std::size_t shifts[] = {j};
  return structure_functions(run, window, orders, shifts).values[0][0];
}

double flatness(const SolverRun& run, const TimeWindow& window, double ell) {
  const std::size_t j = lattice_index(run.grid(), ell);
  const double orders[] = {2.0, 4.0};
  const std::size_t shifts[] = {j};
  const auto table = structure_functions(run, window, orders, shifts);
  const double s2 = table.values[0][0];
  if (!(s2 > 0.0)) throw DegenerateFlatness("S_2 vanishes; flatness undefined");
  return table.values[1][0] / (s2 * s2);
}

std::vector<double> energy_spectra(const SolverRun& run, const TimeWindow& window, std::span<const std::size_t> ks,
                                   double M) {
  const auto [first, last] = window_span(run, window);
  const std::size_t count = last - first + 1;
  std::vector<double> times(count);
  std::vector<std::vector<double>> samples(ks.size(), std::vector<double>(count));
  for (std::size_t t = 0; t < count; ++t) {
    const auto& f = run.fields[first + t];
    times[t] = f.time();
    for (std::size_t i = 0; i < ks.size(); ++i) samples[i][t] = band_energy(f, ks[i], M);
  }
  std::vector<double> out(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = time_average(times, samples[i], window);
  return out;
}

double energy_spectrum(const SolverRun& run, const TimeWindow& window, std::size_t k, double M) {
  const std::size_t ks[] = {k};
  return energy_spectra(run, window, ks, M)[0];
}

double dissipation_residual(const SolverRun& run, double t_a, double t_b) {
  if (!(t_a < t_b)) throw InvalidInput("dissipation residual needs t_a < t_b");
  auto find = [&](double t) -> const DiagnosticsRecord& {
    for (const auto& r : run.records) {
      if (std::abs(r.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return r;
    }
    throw InvalidInput("no record at t = " + std::to_string(t));
  };
  const auto& a = find(t_a);
  const auto& b = find(t_b);
  if (a.energy == 0.0) return 0.0;
  return (b.energy - a.energy + (b.dissipated - a.dissipated)) / a.energy;
}

SolverRun static_run(const SpectralField& field, std::span<const double> times, const StepperConfig& cfg) {
  SolverRun run{cfg, "static", 1.0, {}, {}, SolverState{field, 0.0, 0, 0.0, 0.0}, {}};
  MonitorConfig mon;
  for (double t : times) {
    auto f = field.with_time(t);
    auto r = make_record(f, cfg, mon);
    run.records.push_back(std::move(r));
    run.fields.push_back(f);
  }
  if (!times.empty()) run.final_state = SolverState{field.with_time(times.back()), times.back(), 0, 0.0, 0.0};
  return run;
}

}  // namespace fburgers
