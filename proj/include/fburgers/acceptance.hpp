#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fburgers/harness.hpp"

namespace fburgers {

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

/// Reference desk sweep for one alpha: Burgers flux, default u0, n = 2^14, ETDRK4,
/// K = 4, M = 2, kappa = 2, four log-spaced viscosities.
SweepPlan acceptance_plan(double alpha);

/// Viscosities used for alpha: [2e-4, 2e-3] for alpha = 2; for alpha < 2 the smallest
/// admissible range under the resolution rule at n = 2^14 (see README).
std::vector<double> acceptance_viscosities(double alpha);

/// Criterion 1: transform, semigroup, interpolation and static-field identities.
CriterionResult check_exactness();
/// Criterion 2: observed ETDRK4 self-convergence order on a short alpha = 2, nu = 0.05 run.
CriterionResult check_integrator_order();

/// Criteria 3-9 from the two reference sweeps.
std::vector<CriterionResult> grade_sweeps(const SweepReport& alpha2, const SweepReport& alpha15);

/// Runs the full suite, writing sweep outputs under `dir` and progress to `log`.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& dir, std::ostream& log);

/// "criterion N: PASS|FAIL  name  (detail)".
std::string format_result(const CriterionResult& r);

}  // namespace fburgers
