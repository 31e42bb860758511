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

#include "eqbg/radial_net.hpp"

#include <array>
#include <cmath>
#include <string>

#include "eqbg/error.hpp"

namespace eqbg {

namespace {

constexpr int kMaxCenters = 256;
// Basis values below this are dropped; w * 1e-20 is far below rounding of psi.
constexpr double kCutoff = 1e-20;

}  // namespace

RadialNet::RadialNet(int num_centers, double r_max, double bandwidth)
    : num_centers_{num_centers}, r_max_{r_max} {
  if (num_centers < 2 || num_centers > kMaxCenters) {
    throw InputError("radial net needs between 2 and " + std::to_string(kMaxCenters) + " centers");
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InputError("radial net r_max must be positive");
  }
  spacing_ = r_max / (num_centers - 1);
  sigma_ = bandwidth > 0.0 ? bandwidth : spacing_;
}

void RadialNet::check_r(double r) const {
  if (!std::isfinite(r) || r < 0.0) {
    throw InputError("psi: distance must be finite and non-negative, got " + std::to_string(r));
  }
}

RadialNet::Window RadialNet::basis(double r, std::span<double> out) const {
  const double inv2s2 = 1.0 / (2.0 * sigma_ * sigma_);
  const double rho = std::exp(-spacing_ * spacing_ / (sigma_ * sigma_));
  int m0 = static_cast<int>(r / spacing_ + 0.5);
  m0 = std::min(std::max(m0, 0), num_centers_ - 1);

  const double e0 = r - center(m0);
  out[static_cast<std::size_t>(m0)] = std::exp(-e0 * e0 * inv2s2);
  Window w{m0, m0 + 1};
  if (out[static_cast<std::size_t>(m0)] < kCutoff) return w;

  // phi_{m+1} / phi_m = exp((2 (r - mu_m) h - h^2) / (2 sigma^2)), and each
  // successive ratio shrinks by rho = exp(-h^2 / sigma^2).
  double up = std::exp((2.0 * e0 * spacing_ - spacing_ * spacing_) * inv2s2);
  for (int m = m0 + 1; m < num_centers_; ++m) {
    const double v = out[static_cast<std::size_t>(m - 1)] * up;
    if (v < kCutoff) break;
    out[static_cast<std::size_t>(m)] = v;
    w.hi = m + 1;
    up *= rho;
  }
  double down = std::exp((-2.0 * e0 * spacing_ - spacing_ * spacing_) * inv2s2);
  for (int m = m0 - 1; m >= 0; --m) {
    const double v = out[static_cast<std::size_t>(m + 1)] * down;
    if (v < kCutoff) break;
    out[static_cast<std::size_t>(m)] = v;
    w.lo = m;
    down *= rho;
  }
  return w;
}

PsiValue RadialNet::eval(std::span<const double> theta, double r) const {
  check_r(r);
  std::array<double, kMaxCenters> phi;
  const Window w = basis(r, phi);
  const double inv_s2 = 1.0 / (sigma_ * sigma_);
  PsiValue out{theta[static_cast<std::size_t>(num_centers_)], 0.0, 0.0};
  for (int m = w.lo; m < w.hi; ++m) {
    const double wphi = theta[static_cast<std::size_t>(m)] * phi[static_cast<std::size_t>(m)];
    const double e = (r - center(m)) * inv_s2;
    out.value += wphi;
    out.d1 -= wphi * e;
    out.d2 += wphi * (e * e - inv_s2);
  }
  return out;
}

void RadialNet::accumulate_param_grads(double r, double upstream_value, double upstream_deriv,
                                       std::span<double> grad) const {
  check_r(r);
  if (upstream_value == 0.0 && upstream_deriv == 0.0) return;
  std::array<double, kMaxCenters> phi;
  const Window w = basis(r, phi);
  const double inv_s2 = 1.0 / (sigma_ * sigma_);
  for (int m = w.lo; m < w.hi; ++m) {
    const double e = (r - center(m)) * inv_s2;
    grad[static_cast<std::size_t>(m)] +=
        phi[static_cast<std::size_t>(m)] * (upstream_value - upstream_deriv * e);
  }
  grad[static_cast<std::size_t>(num_centers_)] += upstream_value;
}

}  // namespace eqbg
