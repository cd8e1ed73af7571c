#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fburgers/spectral.hpp"

namespace fbtest {

inline fburgers::SpectralField from_function(fburgers::Grid g, auto&& f) {
  std::vector<double> s(g.n_points());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = f(g.x(j));
  return fburgers::forward_transform(g, s).field;
}

inline fburgers::SpectralField sine(fburgers::Grid g, double amp = 1.0) {
  std::vector<fburgers::Complex> c(g.n_modes());
  c[1] = {0.0, -0.5 * amp};
  return {g, c};
}

/// Random zero-mean field with modes 1..kmax and amplitudes decaying like 1/k.
inline fburgers::SpectralField random_field(fburgers::Grid g, std::size_t kmax, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<fburgers::Complex> c(g.n_modes());
  for (std::size_t k = 1; k <= kmax && k < g.nyquist(); ++k) c[k] = {nd(rng) / double(k), nd(rng) / double(k)};
  return {g, c};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fbtest
