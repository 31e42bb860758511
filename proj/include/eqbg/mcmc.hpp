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

#ifndef EQBG_MCMC_HPP
#define EQBG_MCMC_HPP

#include <cstdint>
#include <vector>

#include "eqbg/energy.hpp"
#include "eqbg/geom.hpp"

namespace eqbg {

using Dataset = std::vector<Configuration>;

struct McmcConfig {
  int n_samples = 10000;
  int burn_in = 0;
  int thinning = 1;
  double proposal_scale = 0.1;
  std::uint64_t seed = 0;
  Configuration init;
};

void validate(const McmcConfig& cfg);

struct MhStep {
  Configuration x;
  double energy = 0.0;
  bool accepted = false;
};

/// One random-walk Metropolis step: y = x + sigma * N(0, I), accepted with
/// probability min(1, exp(u(x) - u(y))). Non-finite u(y) is always rejected.
/// `energy_x` is u(x), passed in so chains evaluate each state once.
MhStep mh_step(const Configuration& x, double energy_x, const EnergyModel& energy,
               double proposal_scale, Rng& rng);

struct ChainResult {
  Dataset samples;                   // mean-removed, temporal order
  std::vector<double> energies;      // u of each stored sample
  std::int64_t steps = 0;            // MH steps taken (burn-in included)
  std::int64_t accepted = 0;
  [[nodiscard]] double acceptance_rate() const noexcept {
    return steps > 0 ? static_cast<double>(accepted) / static_cast<double>(steps) : 0.0;
  }
};

/// burn_in + n_samples * thinning steps from cfg.init; after burn-in every
/// thinning-th state is stored (mean-removed), so exactly n_samples are kept.
ChainResult run_chain(const McmcConfig& cfg, const EnergyModel& energy);

/// n_samples copies of x_min plus i.i.d. N(0, noise_scale^2) noise per
/// coordinate, each mean-removed. Throws InputError unless |grad u(x_min)| < 1e-4.
Dataset perturb_minimum(const Configuration& x_min, const EnergyModel& energy, double noise_scale,
                        int n_samples, Rng& rng);

}  // namespace eqbg

#endif  // EQBG_MCMC_HPP
