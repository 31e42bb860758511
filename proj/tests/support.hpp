// Copyright 2026 The eqbg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQBG_TESTS_SUPPORT_HPP
#define EQBG_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "eqbg/geom.hpp"

namespace eqbg::testing {

// Gaussian configuration with every pair at least min_sep apart.
inline Configuration random_configuration(int k, int d, Rng& rng, double scale = 2.0,
                                          double min_sep = 0.3) {
  std::normal_distribution<double> n(0.0, scale);
  for (;;) {
    Configuration x(k, d);
    for (double& v : x.flat()) v = n(rng);
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      for (int j = i + 1; j < k && ok; ++j) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += (x(i, a) - x(j, a)) * (x(i, a) - x(j, a));
        ok = std::sqrt(r2) >= min_sep;
      }
    }
    if (ok) return x;
  }
}

inline Configuration random_mean_free(int k, int d, Rng& rng, double scale = 2.0) {
  return remove_mean(random_configuration(k, d, rng, scale));
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Central difference of f along coordinate k of p.
inline double central_diff(const std::function<double(std::span<const double>)>& f,
                           std::vector<double> p, std::size_t k, double h) {
  const double p0 = p[k];
  p[k] = p0 + h;
  const double fp = f(p);
  p[k] = p0 - h;
  const double fm = f(p);
  return (fp - fm) / (2.0 * h);
}

inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            const std::vector<double>& p, double h) {
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) g[k] = central_diff(f, p, k, h);
  return g;
}

// max_k |a_k - b_k| / max_k |b_k|: relative error on the vector scale.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double num = 0.0;
  double den = 1e-300;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return num / den;
}

// Normalized density of the pair distance of two particles in D dimensions
// under exp(-u), by trapezoid quadrature of r^(D-1) exp(-phi(r)) on a fine
// grid. phi is the energy of the single pair at distance r.
struct RadialDensity {
  double lo;
  double h;
  std::vector<double> p;  // density at lo + i h

  double mass(double a, double b) const {
    // Integral of the interpolated density over [a, b] by midpoint sub-steps.
    const int n = 200;
    const double w = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += at(a + (i + 0.5) * w) * w;
    return s;
  }
  double at(double r) const {
    const double t = (r - lo) / h;
    if (t < 0.0 || t >= static_cast<double>(p.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(t);
    const double f = t - static_cast<double>(i);
    return (1.0 - f) * p[i] + f * p[i + 1];
  }
  double expectation(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double wt = (i == 0 || i + 1 == p.size()) ? 0.5 : 1.0;
      s += wt * f(lo + static_cast<double>(i) * h) * p[i] * h;
    }
    return s;
  }
};

inline RadialDensity radial_density(const std::function<double(double)>& phi, int dim,
                                    double r_max, double h = 1e-4) {
  RadialDensity out{0.0, h, {}};
  const auto n = static_cast<std::size_t>(r_max / h) + 1;
  out.p.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) * h;
    out.p[i] = std::pow(r, dim - 1) * std::exp(-phi(r));
    z += ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * out.p[i] * h;
  }
  for (double& v : out.p) v /= z;
  return out;
}

}  // namespace eqbg::testing

#endif  // EQBG_TESTS_SUPPORT_HPP
