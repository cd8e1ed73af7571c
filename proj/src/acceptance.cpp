#include "fburgers/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "fburgers/cli_io.hpp"
#include "fburgers/diagnostics.hpp"
#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/norms.hpp"
#include "fburgers/stepper.hpp"

namespace fburgers {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

SpectralField random_field(std::size_t n, std::uint32_t seed, double decay) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  const Grid grid(n);
  std::vector<Complex> c(grid.n_modes());
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double a = std::pow(static_cast<double>(k), -decay);
    c[k] = Complex{a * g(gen), k == grid.nyquist() ? 0.0 : a * g(gen)};
  }
  return SpectralField(grid, std::move(c), 0.0);
}

double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t k = 0; k < a.coeffs().size(); ++k) {
    d = std::max(d, std::abs(a.coeffs()[k] - b.coeffs()[k]));
    s = std::max(s, std::abs(b.coeffs()[k]));
  }
  return s > 0.0 ? d / s : d;
}

}  // namespace

std::vector<double> acceptance_viscosities(double alpha) {
  double lo = 2e-4, hi = 2e-3;
  if (alpha < 2.0) {
    lo = 0.012;
    hi = 0.048;
  }
  std::vector<double> out;
  for (int i = 0; i < 4; ++i) out.push_back(hi * std::pow(lo / hi, i / 3.0));
  return out;
}

SweepPlan acceptance_plan(double alpha) {
  SweepPlan p;
  p.alpha = alpha;
  p.nu_list = acceptance_viscosities(alpha);
  p.n = std::size_t{1} << 14;
  p.flux_name = "burgers";
  p.kappa = 2.0;
  p.K = 4.0;
  p.M = 2.0;
  p.ranges.j1_mode = "crossover";
  p.ranges.crossover_slope = 1.5;
  p.ranges.j2_upper = 0.05;
  p.ranges.margin_decades = 0.5;
  p.targets = default_targets();
  return p;
}

CriterionResult check_exactness() {
  std::vector<std::string> failures;
  std::ostringstream detail;

  // Parseval: grid mean of u^2 against the Fourier sum.
  double parseval = 0.0;
  for (std::uint32_t seed = 1; seed <= 5; ++seed) {
    const auto f = random_field(256, seed, 0.7);
    const auto u = inverse_transform(f);
    double phys = 0.0;
    for (double v : u) phys += v * v;
    phys /= static_cast<double>(u.size());
    const double spec = std::pow(norm(f, NormRequest::hs(0.0)), 2);
    parseval = std::max(parseval, std::abs(phys - spec) / spec);
  }
  if (!(parseval <= 1e-10)) failures.push_back("Parseval");
  detail << "parseval=" << sci(parseval);

  // Heat semigroup on one mode against the closed form.
  const Grid g(128);
  std::vector<Complex> c(g.n_modes());
  c[3] = Complex{0.5, -0.2};
  const SpectralField mode(g, c, 0.0);
  const double nu = 0.1, alpha = 1.5, t = 0.3;
  const auto h = heat_semigroup(mode, nu, alpha, t);
  const Complex expect = c[3] * std::exp(-nu * std::pow(2.0 * std::numbers::pi * 3.0, alpha) * t);
  const double heat = std::abs(h.coeffs()[3] - expect) / std::abs(expect);
  if (!(heat <= 1e-12)) failures.push_back("heat decay");
  detail << " heat=" << sci(heat);

  // Composition e^{t1 A} e^{t2 A} = e^{(t1+t2) A}.
  const auto r = random_field(128, 11, 0.5);
  const auto two = heat_semigroup(heat_semigroup(r, 0.01, 1.7, 0.013), 0.01, 1.7, 0.029);
  const auto one = heat_semigroup(r, 0.01, 1.7, 0.042);
  const double comp = max_coeff_diff(two, one);
  if (!(comp <= 1e-12)) failures.push_back("semigroup composition");
  detail << " composition=" << sci(comp);

  // Interpolation inequality.
  double worst = 0.0;
  for (std::uint32_t seed = 20; seed < 30; ++seed) {
    const auto f = random_field(256, seed, 0.3 + 0.1 * (seed - 20));
    worst = std::max(worst, interpolation_check(f, 0.0, 0.4, 1.3).ratio);
    worst = std::max(worst, interpolation_check(f, 0.5, 1.0, 2.0).ratio);
  }
  if (!(worst <= 1.0 + 1e-10)) failures.push_back("interpolation");
  detail << " interp_ratio=" << sci(worst);

  // Static sine: S_2(1/2) = 2, F = 3/2, E(1) = 1/8.
  const Grid gs(64);
  std::vector<double> u(gs.n_points());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::sin(2.0 * std::numbers::pi * gs.x(j));
  const auto sine = forward_transform(gs, u, 0.0).field;
  const std::vector<double> times{0.0, 0.5, 1.0};
  StepperConfig cfg;
  const auto run = static_run(sine, times, cfg);
  const TimeWindow w{0.0, 1.0, 1.0};
  const double s2 = structure_function(run, w, 2.0, 0.5);
  const double fl = flatness(run, w, 0.25);
  const double e1 = energy_spectrum(run, w, 1, 2.0);
  if (!(std::abs(s2 - 2.0) <= 1e-8)) failures.push_back("S2(1/2)");
  if (!(std::abs(fl - 1.5) <= 1e-8)) failures.push_back("flatness");
  if (!(std::abs(e1 - 0.125) <= 1e-10)) failures.push_back("E(1)");
  detail << " S2(1/2)-2=" << sci(s2 - 2.0) << " F-1.5=" << sci(fl - 1.5) << " E(1)-1/8=" << sci(e1 - 0.125);

  std::string d = detail.str();
  if (!failures.empty()) {
    d += "; failed:";
    for (const auto& f : failures) d += " " + f;
  }
  return {1, "exactness suite", failures.empty(), d};
}

CriterionResult check_integrator_order() {
  StepperConfig cfg;
  cfg.alpha = 2.0;
  cfg.nu = 0.05;
  cfg.scheme = Scheme::ETDRK4;
  const Grid grid(256);
  InitialCondition ic;
  const auto u0 = ic.sample(grid);
  const auto flux = flux::burgers(2.0);
  const double t_end = 0.2;
  auto solve = [&](int steps) {
    SolverState s{u0, 0.0, 0, 0.0, 0.0};
    const double dt = t_end / steps;
    for (int i = 0; i < steps; ++i) s = step(s, cfg, flux, dt);
    return s.field;
  };
  const std::vector<int> counts{10, 20, 40, 80, 160};
  std::vector<SpectralField> sol;
  for (int c : counts) sol.push_back(solve(c));
  std::vector<double> err;
  for (std::size_t i = 0; i + 1 < sol.size(); ++i) {
    err.push_back(norm(combine(1.0, sol[i], -1.0, sol[i + 1]), NormRequest::hs(0.0)));
  }
  std::ostringstream d;
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) orders.push_back(std::log2(err[i] / err[i + 1]));
  d << "self-convergence orders:";
  for (double o : orders) d << " " << sci(o);
  const double observed = orders.back();
  d << " (finest " << sci(observed) << ")";
  return {2, "ETDRK4 order", observed >= 3.5 && observed <= 4.5, d.str()};
}

namespace {

const RunSummary* smallest_ok(const SweepReport& rep) {
  const RunSummary* best = nullptr;
  for (const auto& r : rep.runs) {
    if (r.ok && (!best || r.nu < best->nu)) best = &r;
  }
  return best;
}

struct RowCheck {
  bool pass = true;
  std::string detail;
};

/// Checks every fit row of the given kinds; within-run rows are restricted to the
/// smallest viscosity of the sweep.
void check_rows(const SweepReport& rep, const std::string& tag, RowCheck& out,
                const std::function<bool(const Target&)>& select) {
  const RunSummary* s = smallest_ok(rep);
  bool any = false;
  for (const auto& row : rep.fits) {
    if (!select(row.target)) continue;
    if (!std::isnan(row.nu) && (!s || row.nu != s->nu)) continue;
    any = true;
    std::string d = tag + " " + row.observable + ": ";
    if (row.skipped) {
      out.pass = false;
      d += "skipped (" + row.skip_reason + ")";
    } else {
      d += "slope " + sci(row.fit.slope) + " vs " + sci(row.fit.theoretical) +
           (row.fit.check == Check::TwoSided ? " +- " + sci(row.fit.tolerance) : "") + " -> " +
           (row.fit.pass ? "ok" : "off");
      out.pass = out.pass && row.fit.pass;
    }
    out.detail += (out.detail.empty() ? "" : "; ") + d;
  }
  if (!any) {
    out.pass = false;
    out.detail += (out.detail.empty() ? "" : "; ") + tag + ": no fit rows";
  }
}

}  // namespace

std::vector<CriterionResult> grade_sweeps(const SweepReport& a2, const SweepReport& a15) {
  std::vector<CriterionResult> out;
  const std::vector<std::pair<std::string, const SweepReport*>> sweeps{{"a=2", &a2}, {"a=1.5", &a15}};

  {
    bool pass = true;
    double worst = 0.0;
    std::string d;
    for (const auto& [tag, rep] : sweeps) {
      if (rep->aborted) {
        pass = false;
        d += tag + " aborted: " + rep->abort_reason + "; ";
      }
      for (const auto& r : rep->runs) {
        if (!r.ok) continue;
        worst = std::max(worst, std::abs(r.budget_residual));
        pass = pass && std::abs(r.budget_residual) < 1e-4;
      }
    }
    out.push_back({3, "energy budget over [0, T2]", pass, d + "max |residual| = " + sci(worst) + " (limit 1e-4)"});
  }
  {
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t samples = 0;
    for (const auto& [tag, rep] : sweeps) {
      pass = pass && !rep->aborted;
      for (const auto& r : rep->runs) {
        if (!r.ok) continue;
        worst = std::min(worst, r.min_maxprin_margin);
        samples += r.records.size();
        pass = pass && r.min_maxprin_margin >= 0.0;
      }
    }
    out.push_back({4, "maximum principle on u_x", pass,
                   "min margin 1.05 min(D, 1/(sigma t)) - max u_x = " + sci(worst) + " over " +
                       std::to_string(samples) + " samples"});
  }
  auto norm_rows = [](const NormRequest& n) {
    return [n](const Target& t) { return t.kind == TargetKind::NormVsNu && t.norm == n && t.check == Check::TwoSided; };
  };
  {
    RowCheck rc;
    for (const auto& [tag, rep] : sweeps) {
      check_rows(*rep, tag, rc, norm_rows(NormRequest::hs(1.0)));
      check_rows(*rep, tag, rc, norm_rows(NormRequest::wmp(1, kInf)));
    }
    out.push_back({5, "nu-scaling of H1 and W1,inf norms", rc.pass, rc.detail});
  }
  {
    RowCheck rc;
    for (const auto& [tag, rep] : sweeps) {
      check_rows(*rep, tag, rc, [](const Target& t) { return t.kind == TargetKind::SpVsEll; });
    }
    out.push_back({6, "structure functions on J1 and J2", rc.pass, rc.detail});
  }
  {
    RowCheck rc;
    for (const auto& [tag, rep] : sweeps) {
      check_rows(*rep, tag, rc, [](const Target& t) { return t.kind == TargetKind::FlatnessVsEll; });
    }
    out.push_back({7, "flatness on J2", rc.pass, rc.detail});
  }
  {
    RowCheck rc;
    for (const auto& [tag, rep] : sweeps) {
      check_rows(*rep, tag, rc, [](const Target& t) {
        return t.kind == TargetKind::SpectrumVsK || t.kind == TargetKind::SpectrumTail;
      });
    }
    out.push_back({8, "energy spectrum on J2 and dissipation tail", rc.pass, rc.detail});
  }
  {
    RowCheck rc;
    for (const auto& [tag, rep] : sweeps) {
      check_rows(*rep, tag, rc, [](const Target& t) {
        return t.kind == TargetKind::NormVsNu && t.norm == NormRequest::hs(0.75) && t.check == Check::AtLeast;
      });
    }
    out.push_back({9, "H0.75 upper bound", rc.pass, rc.detail});
  }
  return out;
}

namespace {

/// Slopes with the nominal K-derived ranges, for the sensitivity report.
void report_k_sensitivity(const SweepReport& rep, const std::string& tag, std::ostream& log) {
  for (double K : {2.0, 4.0, 8.0}) {
    SweepPlan plan = rep.plan;
    plan.K = K;
    plan.ranges.j1_mode = "nominal";
    plan.ranges.j2_upper = 0.0;
    std::vector<RunSummary> runs;
    for (const auto& r : rep.runs) {
      if (!r.ok) continue;
      RunSummary s = r;
      try {
        s.partition = RangePartition::make(K, plan.alpha, r.nu);
      } catch (const InvalidInput&) {
        continue;
      }
      s.j1_upper = s.partition.j1_upper();
      s.j2_upper = s.partition.C2;
      runs.push_back(std::move(s));
    }
    const auto rows = fit_targets(plan, runs);
    const RunSummary* small = smallest_ok(rep);
    for (const auto& row : rows) {
      if (std::isnan(row.nu) || !small || row.nu != small->nu) continue;
      log << "  K-sensitivity " << tag << " K=" << K << " " << row.observable << ": "
          << (row.skipped ? "skipped (" + row.skip_reason + ")" : "slope " + sci(row.fit.slope)) << "\n";
    }
  }
}

void report_sweep(const SweepReport& rep, const std::string& tag, std::ostream& log) {
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const auto& r : rep.runs) {
    log << "  " << tag << " nu=" << sci(r.nu) << " n=" << r.n;
    if (!r.ok) {
      log << " FAILED: " << r.failure << "\n";
      continue;
    }
    cmin = std::min(cmin, r.window.C_tilde);
    cmax = std::max(cmax, r.window.C_tilde);
    log << " steps=" << r.steps << " T1=" << sci(r.window.T1) << " T2=" << sci(r.window.T2)
        << " C~=" << sci(r.window.C_tilde) << " budget=" << sci(r.budget_residual)
        << " margin=" << sci(r.min_maxprin_margin) << " J1|J2 boundary=" << sci(r.j1_upper) << " ("
        << sci(r.j1_upper / std::pow(r.nu, r.partition.beta)) << " nu^beta) wall=" << sci(r.wall_seconds) << "s\n";
  }
  if (cmax > 0.0) log << "  " << tag << " C~ spread max/min = " << sci(cmax / cmin) << "\n";
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::filesystem::path& dir, std::ostream& log) {
  std::vector<CriterionResult> out;
  out.push_back(check_exactness());
  log << format_result(out.back()) << std::endl;
  out.push_back(check_integrator_order());
  log << format_result(out.back()) << std::endl;

  const SweepPlan p2 = acceptance_plan(2.0);
  const SweepPlan p15 = acceptance_plan(1.5);
  log << "running alpha = 2 sweep" << std::endl;
  const SweepReport r2 = run_sweep(p2);
  write_outputs(r2, dir / "alpha2");
  report_sweep(r2, "a=2", log);
  log << "running alpha = 1.5 sweep" << std::endl;
  const SweepReport r15 = run_sweep(p15);
  write_outputs(r15, dir / "alpha1.5");
  report_sweep(r15, "a=1.5", log);
  report_k_sensitivity(r2, "a=2", log);
  report_k_sensitivity(r15, "a=1.5", log);

  for (auto& c : grade_sweeps(r2, r15)) {
    log << format_result(c) << std::endl;
    out.push_back(std::move(c));
  }

  CriterionResult det{10, "determinism (seed check)", false, ""};
  try {
    const auto ref = dir / "alpha1.5" / run_dir_name(p15.nu_list.back());
    const auto diffs = seed_check(p15, dir / "seed_check", ref);
    det.pass = diffs.empty();
    det.detail = diffs.empty() ? "rerun of nu = " + sci(p15.nu_list.back()) + " is byte-identical" : "differs:";
    for (const auto& d : diffs) det.detail += " " + d;
  } catch (const Error& e) {
    det.detail = e.what();
  }
  log << format_result(det) << std::endl;
  out.push_back(std::move(det));
  return out;
}

std::string format_result(const CriterionResult& r) {
  return "criterion " + std::to_string(r.id) + ": " + (r.pass ? "PASS" : "FAIL") + "  " + r.name + "  (" + r.detail +
         ")";
}

}  // namespace fburgers
