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

#include "eqbg/prior.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "eqbg/error.hpp"

namespace eqbg {

MeanFreePrior::MeanFreePrior(int particles, int dim) : particles_{particles}, dim_{dim} {
  if (particles < 2 || dim < 1 || dim > 3) {
    throw InputError("mean-free prior needs K >= 2 and 1 <= D <= 3");
  }
}

double MeanFreePrior::log_normalizer() const noexcept {
  return -0.5 * subspace_dim() * std::log(2.0 * std::numbers::pi);
}

Configuration standard_normal(int particles, int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Configuration z(particles, dim);
  for (double& v : z.flat()) v = normal(rng);
  return z;
}

Configuration MeanFreePrior::sample(Rng& rng) const {
  return remove_mean(standard_normal(particles_, dim_, rng));
}

double MeanFreePrior::log_prob(const Configuration& z) const {
  if (z.particles() != particles_ || z.dim() != dim_) {
    throw InputError("prior: configuration shape mismatch");
  }
  const double off = mean_norm(z);
  if (!(off <= kMeanFreeTol)) {
    throw InputError("prior: configuration is not mean-free (|mean| = " + std::to_string(off) + ")");
  }
  return -0.5 * squared_norm(z) + log_normalizer();
}

}  // namespace eqbg
