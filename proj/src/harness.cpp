#include "fburgers/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/stepper.hpp"

namespace fburgers {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool within_run(TargetKind k) {
  return k == TargetKind::SpVsEll || k == TargetKind::SpectrumVsK || k == TargetKind::SpectrumTail ||
         k == TargetKind::FlatnessVsEll;
}

}  // namespace

std::vector<SineMode> InitialCondition::resolved_modes() const {
  if (name == "default") return {{1, 1.0, 0.0}, {2, 0.6, 1.0}};
  if (name == "sine") return {{1, 1.0, 0.0}};
  if (name == "modes") {
    if (modes.empty()) throw InvalidInput("initial condition 'modes' needs at least one mode");
    for (const auto& m : modes) {
      if (m.k < 1) throw InvalidInput("initial condition modes need k >= 1");
      if (!std::isfinite(m.amplitude) || !std::isfinite(m.phase)) throw InvalidInput("non-finite mode parameters");
    }
    return modes;
  }
  throw InvalidInput("unknown initial condition '" + name + "'");
}

SpectralField InitialCondition::sample(const Grid& grid) const {
  const auto ms = resolved_modes();
  std::vector<double> u(grid.n_points(), 0.0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double x = grid.x(j);
    for (const auto& m : ms) u[j] += m.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(m.k) * x + m.phase);
  }
  return dealias(forward_transform(grid, u, 0.0).field);
}

std::string to_string(TargetKind k) {
  switch (k) {
    case TargetKind::NormVsNu: return "norm_vs_nu";
    case TargetKind::SpVsEll: return "sp_vs_ell";
    case TargetKind::SpVsNu: return "sp_vs_nu";
    case TargetKind::SpectrumVsK: return "spectrum_vs_k";
    case TargetKind::SpectrumTail: return "spectrum_tail";
    case TargetKind::FlatnessVsEll: return "flatness_vs_ell";
  }
  return "?";
}

std::string to_string(Range r) { return r == Range::J1 ? "J1" : "J2"; }
std::string to_string(Convention c) { return c == Convention::Moment ? "moment" : "power"; }

std::string to_string(Check c) {
  switch (c) {
    case Check::TwoSided: return "two_sided";
    case Check::AtLeast: return "at_least";
    case Check::AtMost: return "at_most";
  }
  return "?";
}

std::string Target::label() const {
  switch (kind) {
    case TargetKind::NormVsNu: return norm.label() + " vs nu";
    case TargetKind::SpVsEll: return "S" + num(p) + " vs ell on " + to_string(range);
    case TargetKind::SpVsNu: return "S" + num(p) + "(dx) vs nu on " + to_string(range);
    case TargetKind::SpectrumVsK: return "E(k) vs k on " + to_string(range);
    case TargetKind::SpectrumTail: return "E(k) tail vs k";
    case TargetKind::FlatnessVsEll: return "F(ell) vs ell on " + to_string(range);
  }
  return "?";
}

double theoretical_exponent(const Target& t, double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw InvalidInput("alpha must lie in (1, 2]");
  const double beta = 1.0 / (alpha - 1.0);
  switch (t.kind) {
    case TargetKind::NormVsNu:
      switch (t.norm.kind) {
        case NormKind::Lp: return 0.0;
        case NormKind::Wmp: {
          const double inv_p = std::isinf(t.norm.p) ? 0.0 : 1.0 / t.norm.p;
          return -beta * std::max(0.0, t.norm.m - inv_p);
        }
        case NormKind::Hs:
        case NormKind::HsIncrement: return -beta * (t.norm.s - 0.5);
      }
      break;
    case TargetKind::SpVsEll: return t.range == Range::J2 ? std::min(1.0, t.p) : t.p;
    case TargetKind::SpVsNu:
      if (t.range != Range::J1) throw UnsupportedTarget("S_p vs nu has a stated exponent on J1 only");
      return t.p >= 1.0 ? -beta * (t.p - 1.0) : 0.0;
    case TargetKind::SpectrumVsK:
      if (t.range != Range::J2) throw UnsupportedTarget("E(k) has a stated exponent for 1/k in J2 only");
      return -2.0;
    case TargetKind::SpectrumTail: return -4.0;
    case TargetKind::FlatnessVsEll:
      if (t.range != Range::J2) throw UnsupportedTarget("flatness has a stated exponent on J2 only");
      return -1.0;
  }
  throw UnsupportedTarget("unknown target");
}

double expected_slope(const Target& t, double alpha, double kappa) {
  const double e = theoretical_exponent(t, alpha);
  const bool scalable = t.kind == TargetKind::NormVsNu || t.kind == TargetKind::SpVsNu;
  return scalable && t.convention == Convention::Power ? kappa * e : e;
}

FitResult fit_loglog(std::span<const std::pair<double, double>> pts) {
  if (pts.size() < 3) throw InvalidInput("log-log fit needs at least 3 points");
  for (const auto& [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      throw LogDomainError("log-log fit needs positive finite coordinates");
    }
  }
  const bool inc = pts[1].first > pts[0].first;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (inc ? !(pts[i].first > pts[i - 1].first) : !(pts[i].first < pts[i - 1].first)) {
      throw InvalidInput("log-log fit needs strictly monotone x");
    }
  }
  const double n = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = std::log(y) - (f.intercept + f.slope * std::log(x));
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  f.n_points = pts.size();
  return f;
}

void grade(FitResult& f, double theoretical, double tolerance, Check check) {
  f.theoretical = theoretical;
  f.tolerance = tolerance;
  f.check = check;
  f.abs_error = std::abs(f.slope - theoretical);
  switch (check) {
    case Check::TwoSided: f.pass = f.abs_error <= tolerance; break;
    case Check::AtLeast: f.pass = f.slope >= theoretical; break;
    case Check::AtMost: f.pass = f.slope <= theoretical; break;
  }
}

void SweepPlan::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw InvalidInput("alpha must lie in (1, 2]");
  if (nu_list.empty()) throw InvalidInput("nu_list is empty");
  for (std::size_t i = 0; i < nu_list.size(); ++i) {
    if (!(nu_list[i] > 0.0)) throw InvalidInput("nu_list entries must be positive");
    if (i > 0 && !(nu_list[i] < nu_list[i - 1])) throw InvalidInput("nu_list must be strictly decreasing");
  }
  if (!(kappa > 0.0)) throw InvalidInput("kappa must be positive");
  if (!(M >= 1.0)) throw InvalidInput("M must be >= 1");
  if (!(dt_cfl > 0.0 && dt_max > 0.0 && c_res > 0.0)) throw InvalidInput("step controls must be positive");
  if (n_samples < 2) throw InvalidInput("n_samples must be >= 2");
  if (!(t_first_fraction > 0.0 && t_first_fraction < 1.0)) throw InvalidInput("t_first_fraction must lie in (0, 1)");
  if (!(ranges.margin_decades >= 0.0)) throw InvalidInput("margin_decades must be >= 0");
  if (ranges.j1_mode != "nominal" && ranges.j1_mode != "crossover") throw InvalidInput("j1_mode must be nominal or crossover");
  if (ranges.j1_mode == "crossover" && std::find(sp_orders.begin(), sp_orders.end(), 2.0) == sp_orders.end()) {
    throw InvalidInput("crossover ranges need order 2 in sp_orders");
  }
  for (double p : sp_orders) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("sp_orders must be finite and >= 0");
  }
  u0.resolved_modes();
  flux::by_name(flux_name, 1.0);
  for (const auto& t : targets) {
    if (t.kind == TargetKind::NormVsNu) t.norm.validate();
    if ((t.kind == TargetKind::SpVsEll || t.kind == TargetKind::SpVsNu) &&
        std::find(sp_orders.begin(), sp_orders.end(), t.p) == sp_orders.end()) {
      throw InvalidInput("target " + t.label() + " needs order " + num(t.p) + " in sp_orders");
    }
    if (t.kind == TargetKind::FlatnessVsEll &&
        (std::find(sp_orders.begin(), sp_orders.end(), 2.0) == sp_orders.end() ||
         std::find(sp_orders.begin(), sp_orders.end(), 4.0) == sp_orders.end())) {
      throw InvalidInput("flatness needs orders 2 and 4 in sp_orders");
    }
    theoretical_exponent(t, alpha);
  }
  for (double nu : nu_list) {
    RangePartition::make(K, alpha, nu);
    const std::size_t n_nu = grid_size(nu);
    Grid g(n_nu);
    if (g.dx() > c_res * std::pow(nu, beta())) {
      throw InvalidInput("n = " + std::to_string(n_nu) + " under-resolves nu = " + num(nu));
    }
  }
}

std::size_t SweepPlan::grid_size(double nu) const {
  if (n != 0) return n;
  const double need = 1.0 / (c_res * std::pow(nu, beta()));
  std::size_t m = std::max<std::size_t>(8, n_min);
  std::size_t p2 = 8;
  while (p2 < m || static_cast<double>(p2) < need) {
    if (p2 > (std::size_t{1} << 26)) throw InvalidInput("resolution rule needs an impractically large grid");
    p2 *= 2;
  }
  return p2;
}

std::vector<Target> default_targets() {
  std::vector<Target> t;
  auto norm_target = [](NormRequest r, Convention c, double rel) {
    Target x;
    x.kind = TargetKind::NormVsNu;
    x.norm = r;
    x.convention = c;
    x.tolerance = rel;
    x.relative = true;
    return x;
  };
  t.push_back(norm_target(NormRequest::hs(1.0), Convention::Moment, 0.15));
  t.push_back(norm_target(NormRequest::hs(1.0), Convention::Power, 0.15));
  t.push_back(norm_target(NormRequest::wmp(1, kInf), Convention::Moment, 0.20));
  t.push_back(norm_target(NormRequest::wmp(1, kInf), Convention::Power, 0.20));
  Target hs = norm_target(NormRequest::hs(0.75), Convention::Power, 0.0);
  hs.check = Check::AtLeast;
  hs.bound_factor = 1.2;
  t.push_back(hs);
  auto sp = [](double p, Range r, double tol) {
    Target x;
    x.kind = TargetKind::SpVsEll;
    x.p = p;
    x.range = r;
    x.tolerance = tol;
    return x;
  };
  t.push_back(sp(2.0, Range::J2, 0.15));
  t.push_back(sp(4.0, Range::J2, 0.20));
  t.push_back(sp(0.5, Range::J2, 0.10));
  t.push_back(sp(2.0, Range::J1, 0.20));
  Target fl;
  fl.kind = TargetKind::FlatnessVsEll;
  fl.tolerance = 0.2;
  t.push_back(fl);
  Target ek;
  ek.kind = TargetKind::SpectrumVsK;
  ek.tolerance = 0.3;
  t.push_back(ek);
  Target tail;
  tail.kind = TargetKind::SpectrumTail;
  tail.check = Check::AtMost;
  t.push_back(tail);
  return t;
}

std::vector<std::size_t> default_shifts(std::size_t n) {
  std::vector<std::size_t> out;
  const std::size_t half = n / 2;
  for (std::size_t j = 1; j <= std::min<std::size_t>(16, half); ++j) out.push_back(j);
  double x = 16.0;
  while (true) {
    x *= 1.08;
    const auto j = static_cast<std::size_t>(std::llround(x));
    if (j > half) break;
    if (j > out.back()) out.push_back(j);
  }
  if (out.back() != half) out.push_back(half);
  return out;
}

std::vector<std::size_t> default_wavenumbers(std::size_t n, double M) {
  const auto kmax = static_cast<std::size_t>(std::floor(static_cast<double>(n / 3) / M));
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= std::min<std::size_t>(16, kmax); ++k) out.push_back(k);
  double x = 16.0;
  while (true) {
    x *= 1.08;
    const auto k = static_cast<std::size_t>(std::llround(x));
    if (k > kmax) break;
    if (k > out.back()) out.push_back(k);
  }
  return out;
}

StepperConfig run_config(const SweepPlan& plan, double nu, double t_end) {
  StepperConfig c;
  c.nu = nu;
  c.alpha = plan.alpha;
  c.dt_cfl = plan.dt_cfl;
  c.dt_max = plan.dt_max;
  c.scheme = plan.scheme;
  c.t_end = t_end;
  c.c_res = plan.c_res;
  return c;
}

namespace {

std::vector<NormRequest> monitored_norms(const SweepPlan& plan) {
  std::vector<NormRequest> out{NormRequest::lp(2.0), NormRequest::hs(1.0), NormRequest::wmp(1, kInf)};
  for (const auto& t : plan.targets) {
    if (t.kind == TargetKind::NormVsNu && std::find(out.begin(), out.end(), t.norm) == out.end()) out.push_back(t.norm);
  }
  return out;
}

/// First scale at which the local log-slope of S_2 drops below the threshold.
double crossover_scale(const StructureTable& st, double dx, double threshold) {
  const auto it = std::find(st.orders.begin(), st.orders.end(), 2.0);
  const auto& s2 = st.values[static_cast<std::size_t>(it - st.orders.begin())];
  for (std::size_t j = 1; j < st.shifts.size(); ++j) {
    const double l0 = static_cast<double>(st.shifts[j - 1]);
    const double l1 = static_cast<double>(st.shifts[j]);
    if (!(s2[j - 1] > 0.0 && s2[j] > 0.0)) continue;
    const double slope = std::log(s2[j] / s2[j - 1]) / std::log(l1 / l0);
    if (slope < threshold) return std::sqrt(l0 * l1) * dx;
  }
  return static_cast<double>(st.shifts.back()) * dx;
}

double order_value(const StructureTable& st, double p, std::size_t j) {
  const auto it = std::find(st.orders.begin(), st.orders.end(), p);
  if (it == st.orders.end()) throw InvalidInput("order " + num(p) + " was not computed");
  return st.values[static_cast<std::size_t>(it - st.orders.begin())][j];
}

}  // namespace

RunSummary summarize_run(const SweepPlan& plan, double nu, const SolverRun& run, const DQuantity& D) {
  RunSummary s;
  s.nu = nu;
  s.n = run.grid().n_points();
  s.config = run.config;
  s.D = D;
  s.warnings = run.warnings;
  s.window = time_window(D, run.sigma, run);
  s.partition = RangePartition::make(plan.K, plan.alpha, nu);
  s.steps = run.final_state.step_count;
  s.budget_residual = dissipation_residual(run, run.records.front().t, s.window.T2);
  s.min_maxprin_margin = s.min_supnorm_margin = s.min_w11_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : run.records) {
    s.min_maxprin_margin = std::min(s.min_maxprin_margin, r.maxprin_margin);
    s.min_supnorm_margin = std::min(s.min_supnorm_margin, r.supnorm_margin);
    s.min_w11_margin = std::min(s.min_w11_margin, r.w11_margin);
  }
  for (const auto& [label, v] : run.records.front().norms) {
    const std::string key = label;
    s.norm_moments[key] =
        time_average(run, s.window, [&key](const DiagnosticsRecord& r) { return r.norms.at(key); }, plan.kappa);
  }

  const Grid grid = run.grid();
  const auto shifts = default_shifts(grid.n_points());
  s.structure = structure_functions(run, s.window, plan.sp_orders, shifts);
  s.j2_upper = plan.ranges.j2_upper > 0.0 ? plan.ranges.j2_upper : s.partition.C2;
  s.j1_upper = plan.ranges.j1_mode == "crossover" ? crossover_scale(s.structure, grid.dx(), plan.ranges.crossover_slope)
                                                  : s.partition.j1_upper();
  s.spectrum_ks = default_wavenumbers(grid.n_points(), plan.M);
  s.spectrum = energy_spectra(run, s.window, s.spectrum_ks, plan.M);

  const double beta = plan.beta();
  for (std::size_t i = 0; i < s.structure.orders.size(); ++i) {
    const double p = s.structure.orders[i];
    if (p < 2.0) continue;
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t j = 0; j < shifts.size(); ++j) {
      const double ell = static_cast<double>(shifts[j]) * grid.dx();
      const double v = s.structure.values[i][j];
      if (ell <= s.j1_upper) e1 = std::max(e1, v / (std::pow(ell, p) * std::pow(nu, -beta * (p - 1.0))));
      else if (ell <= s.j2_upper) e2 = std::max(e2, v / ell);
    }
    s.envelope_j1[p] = e1;
    s.envelope_j2[p] = e2;
  }
  s.records = run.records;
  s.final_state = run.final_state;
  s.ok = true;
  return s;
}

namespace {

SolverRun execute(const SweepPlan& plan, double nu, DQuantity& D_out) {
  const Grid grid(plan.grid_size(nu));
  const SpectralField u0 = plan.u0.sample(grid);
  const DQuantity D = compute_D(u0);
  D_out = D;
  const double radius = std::max(1.0, norm(u0, NormRequest::lp(kInf)));
  const FluxSpec flux = flux::by_name(plan.flux_name, radius);
  validate(flux);
  const double t_end = 2.0 * D.value / flux.sigma;

  MonitorConfig mon;
  mon.sample_times = geometric_schedule(plan.t_first_fraction * t_end, t_end, plan.n_samples);
  mon.norms = monitored_norms(plan);
  mon.band_m = plan.M;
  mon.d_value = D.value;
  mon.sigma = flux.sigma;
  mon.keep_fields = true;
  SolverRun run = integrate(u0, run_config(plan, nu, t_end), flux, mon);

  // T2 = 3 T1 / 2 can exceed 2D/sigma when C~ is small; extend the run to cover it.
  double peak = 0.0;
  for (const auto& r : run.records) peak = std::max(peak, r.dissipation_rate);
  if (peak > 0.0) {
    const auto w = TimeWindow::make(D.value, flux.sigma, 1.2 * peak);
    if (w.T2 > run.final_state.t) {
      MonitorConfig ext = mon;
      ext.sample_times = {w.T2};
      auto more = integrate(run.final_state, run_config(plan, nu, w.T2), flux, ext);
      run.records.insert(run.records.end(), more.records.begin() + 1, more.records.end());
      run.fields.insert(run.fields.end(), more.fields.begin() + 1, more.fields.end());
      run.final_state = more.final_state;
      run.config.t_end = w.T2;
    }
  }
  return run;
}

}  // namespace

std::vector<FitRow> fit_targets(const SweepPlan& plan, std::span<const RunSummary> runs) {
  std::vector<const RunSummary*> ok;
  for (const auto& r : runs) {
    if (r.ok) ok.push_back(&r);
  }
  std::sort(ok.begin(), ok.end(), [](auto* a, auto* b) { return a->nu < b->nu; });
  const double m = std::pow(10.0, plan.ranges.margin_decades);
  std::vector<FitRow> rows;

  auto finish = [&](FitRow row, const std::vector<std::pair<double, double>>& pts) {
    const double expected = expected_slope(row.target, plan.alpha, plan.kappa);
    if (pts.size() < 3) {
      row.skipped = true;
      if (row.skip_reason.empty()) row.skip_reason = "fewer than 3 points (" + std::to_string(pts.size()) + ")";
      row.fit.theoretical = expected;
      rows.push_back(std::move(row));
      return;
    }
    try {
      row.fit = fit_loglog(pts);
    } catch (const Error& e) {
      row.skipped = true;
      row.skip_reason = e.what();
      row.fit.theoretical = expected;
      rows.push_back(std::move(row));
      return;
    }
    const auto& t = row.target;
    if (t.check == Check::TwoSided) {
      grade(row.fit, expected, t.relative ? t.tolerance * std::abs(expected) : t.tolerance, t.check);
    } else {
      grade(row.fit, t.bound_factor * expected, 0.0, t.check);
    }
    rows.push_back(std::move(row));
  };

  for (const auto& t : plan.targets) {
    const std::string conv = t.kind == TargetKind::NormVsNu || t.kind == TargetKind::SpVsNu
                                 ? (t.convention == Convention::Moment
                                        ? " [moment: ({A^" + num(plan.kappa) + "})^(1/" + num(plan.kappa) + ")]"
                                        : " [power: {A^" + num(plan.kappa) + "}]")
                                 : "";
    const std::string bound = t.check == Check::AtLeast ? " [slope >= bound]"
                              : t.check == Check::AtMost ? " [slope <= bound]"
                                                         : "";
    if (!within_run(t.kind)) {
      FitRow row{t, t.label() + conv + bound, kNaN, false, {}, {}};
      std::vector<std::pair<double, double>> pts;
      if (t.kind == TargetKind::NormVsNu) {
        const std::string key = t.norm.label();
        for (const auto* r : ok) {
          const auto it = r->norm_moments.find(key);
          if (it == r->norm_moments.end()) continue;
          const double v = t.convention == Convention::Power ? std::pow(it->second, plan.kappa) : it->second;
          pts.emplace_back(r->nu, v);
        }
      } else {
        bool same_grid = true;
        for (const auto* r : ok) same_grid = same_grid && r->n == ok.front()->n;
        for (const auto* r : ok) {
          const double dx = 1.0 / static_cast<double>(r->n);
          if (!same_grid || dx > r->j1_upper) {
            row.skip_reason = same_grid ? "dx lies outside J1 of the run with nu = " + num(r->nu)
                                        : "runs use different grids";
            pts.clear();
            break;
          }
          // The time-averaged S_p is a moment in x; kappa applies only through the convention.
          const double v = order_value(r->structure, t.p, 0);
          pts.emplace_back(r->nu, t.convention == Convention::Power ? std::pow(v, plan.kappa) : v);
        }
      }
      finish(std::move(row), pts);
      continue;
    }
    for (const auto* r : ok) {
      FitRow row{t, t.label() + bound + " (nu=" + num(r->nu) + ")", r->nu, false, {}, {}};
      const double dx = 1.0 / static_cast<double>(r->n);
      const double lo = t.range == Range::J1 ? 0.0 : r->j1_upper * m;
      const double hi = t.range == Range::J1 ? r->j1_upper / m : r->j2_upper / m;
      std::vector<std::pair<double, double>> pts;
      const auto& st = r->structure;
      if (t.kind == TargetKind::SpVsEll || t.kind == TargetKind::FlatnessVsEll) {
        for (std::size_t j = 0; j < st.shifts.size(); ++j) {
          const double ell = static_cast<double>(st.shifts[j]) * dx;
          if (!(ell > lo && ell <= hi)) continue;
          if (t.kind == TargetKind::SpVsEll) {
            pts.emplace_back(ell, order_value(st, t.p, j));
          } else {
            const double s2 = order_value(st, 2.0, j);
            if (s2 > 0.0) pts.emplace_back(ell, order_value(st, 4.0, j) / (s2 * s2));
          }
        }
      } else if (t.kind == TargetKind::SpectrumVsK) {
        for (std::size_t i = 0; i < r->spectrum_ks.size(); ++i) {
          const double inv_k = 1.0 / static_cast<double>(r->spectrum_ks[i]);
          if (inv_k > lo && inv_k <= hi) pts.emplace_back(static_cast<double>(r->spectrum_ks[i]), r->spectrum[i]);
        }
      } else {
        // Dissipation-range tail: k >= 1 / (J1 upper end), above the round-off floor.
        const double emax = r->spectrum.empty() ? 0.0 : *std::max_element(r->spectrum.begin(), r->spectrum.end());
        for (std::size_t i = 0; i < r->spectrum_ks.size(); ++i) {
          const double k = static_cast<double>(r->spectrum_ks[i]);
          if (k * r->j1_upper >= 1.0 && r->spectrum[i] > 1e-24 * emax) pts.emplace_back(k, r->spectrum[i]);
        }
      }
      finish(std::move(row), pts);
    }
  }
  return rows;
}

SweepReport run_sweep(const SweepPlan& plan) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  SweepReport rep;
  rep.plan = plan;
  for (double nu : plan.nu_list) {
    const auto t0 = std::chrono::steady_clock::now();
    RunSummary s;
    s.nu = nu;
    s.n = plan.grid_size(nu);
    try {
      DQuantity D{};
      const SolverRun run = execute(plan, nu, D);
      s = summarize_run(plan, nu, run, D);
    } catch (const Error& e) {
      s.ok = false;
      s.failure = e.what();
      rep.aborted = true;
      rep.abort_reason = "run nu = " + num(nu) + " failed: " + e.what();
    }
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.runs.push_back(std::move(s));
    if (rep.aborted) break;
  }
  rep.fits = fit_targets(plan, rep.runs);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace fburgers
