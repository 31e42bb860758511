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

#ifndef EQBG_RADIAL_NET_HPP
#define EQBG_RADIAL_NET_HPP

#include <span>

namespace eqbg {

/// Value and first two derivatives of psi at a distance r.
struct PsiValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Learnable scalar function of pair distance,
///
///   psi(r) = c + sum_m w_m exp(-(r - mu_m)^2 / (2 sigma^2)),
///
/// with M centers mu_m on a uniform grid over [0, r_max]. Only w and c are
/// learnable; they live in a caller-owned parameter span laid out as
/// [w_0, ..., w_{M-1}, c].
class RadialNet {
 public:
  /// bandwidth <= 0 selects the grid spacing.
  RadialNet(int num_centers, double r_max, double bandwidth = 0.0);

  [[nodiscard]] int num_centers() const noexcept { return num_centers_; }
  [[nodiscard]] double r_max() const noexcept { return r_max_; }
  [[nodiscard]] double bandwidth() const noexcept { return sigma_; }
  [[nodiscard]] double center(int m) const noexcept { return m * spacing_; }
  [[nodiscard]] int num_params() const noexcept { return num_centers_ + 1; }

  /// psi, psi' and psi'' at r. Throws InputError for negative or non-finite r.
  [[nodiscard]] PsiValue eval(std::span<const double> theta, double r) const;

  /// Accumulates d(upstream_value * psi(r) + upstream_deriv * psi'(r)) / dtheta into grad.
  void accumulate_param_grads(double r, double upstream_value, double upstream_deriv,
                              std::span<double> grad) const;

 private:
  struct Window {
    int lo;
    int hi;  // exclusive
  };
  // Fills basis[m] = exp(-(r - mu_m)^2 / (2 sigma^2)) for m in the returned
  // window, using a two-exponential recurrence outward from the nearest
  // center. Entries outside the window are below kCutoff and left unset.
  Window basis(double r, std::span<double> out) const;
  void check_r(double r) const;

  int num_centers_;
  double r_max_;
  double spacing_;
  double sigma_;
};

}  // namespace eqbg

#endif  // EQBG_RADIAL_NET_HPP
