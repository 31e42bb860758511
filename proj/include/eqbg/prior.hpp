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

#ifndef EQBG_PRIOR_HPP
#define EQBG_PRIOR_HPP

#include "eqbg/geom.hpp"

namespace eqbg {

/// Isotropic standard normal restricted to the mean-free subspace of
/// K x D configurations. That subspace has dimension (K - 1) * D, which is
/// what the log-normalizer is computed from.
class MeanFreePrior {
 public:
  /// Configurations farther than this from mean-free are rejected by log_prob.
  static constexpr double kMeanFreeTol = 1e-8;

  MeanFreePrior(int particles, int dim);

  [[nodiscard]] int particles() const noexcept { return particles_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int subspace_dim() const noexcept { return (particles_ - 1) * dim_; }
  [[nodiscard]] double log_normalizer() const noexcept;

  /// z' ~ N(0, I) i.i.d. per coordinate, projected to z = z' - mean(z').
  [[nodiscard]] Configuration sample(Rng& rng) const;

  /// -1/2 sum_i |z_i|^2 + log_normalizer(). Throws InputError if z is not mean-free.
  [[nodiscard]] double log_prob(const Configuration& z) const;

 private:
  int particles_;
  int dim_;
};

/// Draws K x D i.i.d. standard normal coordinates.
Configuration standard_normal(int particles, int dim, Rng& rng);

}  // namespace eqbg

#endif  // EQBG_PRIOR_HPP
