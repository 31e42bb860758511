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

#include "eqbg/mcmc.hpp"

#include <cmath>
#include <string>

#include "eqbg/error.hpp"

namespace eqbg {

void validate(const McmcConfig& cfg) {
  if (cfg.n_samples < 0 || cfg.burn_in < 0 || cfg.thinning < 1) {
    throw InputError("mcmc: counts must be non-negative and thinning >= 1");
  }
  if (!(cfg.proposal_scale > 0.0)) {
    throw InputError("mcmc: proposal scale must be positive");
  }
  validate_configuration(cfg.init);
}

MhStep mh_step(const Configuration& x, double energy_x, const EnergyModel& energy,
               double proposal_scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, proposal_scale);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Configuration y = x;
  for (double& v : y.flat()) v += normal(rng);
  const double u_y = energy.energy(y);
  // Always consume the uniform so the stream layout does not depend on u.
  const double r = uniform(rng);
  if (std::isfinite(u_y) && std::log(r) < energy_x - u_y) {
    return {std::move(y), u_y, true};
  }
  return {x, energy_x, false};
}

ChainResult run_chain(const McmcConfig& cfg, const EnergyModel& energy) {
  validate(cfg);
  Rng rng(cfg.seed);
  ChainResult out;
  out.samples.reserve(static_cast<std::size_t>(cfg.n_samples));
  out.energies.reserve(static_cast<std::size_t>(cfg.n_samples));
  if (cfg.n_samples == 0) return out;

  Configuration x = cfg.init;
  double u = energy.energy(x);
  if (!std::isfinite(u)) {
    throw InputError("mcmc: initial configuration has non-finite energy");
  }
  auto advance = [&] {
    MhStep s = mh_step(x, u, energy, cfg.proposal_scale, rng);
    ++out.steps;
    if (s.accepted) {
      ++out.accepted;
      x = std::move(s.x);
      u = s.energy;
    }
  };
  for (int b = 0; b < cfg.burn_in; ++b) advance();
  for (int n = 0; n < cfg.n_samples; ++n) {
    for (int t = 0; t < cfg.thinning; ++t) advance();
    out.samples.push_back(remove_mean(x));
    out.energies.push_back(u);
  }
  return out;
}

Dataset perturb_minimum(const Configuration& x_min, const EnergyModel& energy, double noise_scale,
                        int n_samples, Rng& rng) {
  validate_configuration(x_min);
  if (n_samples < 0 || !(noise_scale >= 0.0)) {
    throw InputError("perturb_minimum: needs n_samples >= 0 and noise_scale >= 0");
  }
  const double gnorm = std::sqrt(squared_norm(energy.gradient(x_min)));
  if (!(gnorm < 1e-4)) {
    throw InputError("perturb_minimum: start is not a local minimum (|grad u| = " +
                     std::to_string(gnorm) + ")");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int n = 0; n < n_samples; ++n) {
    Configuration y = x_min;
    for (double& v : y.flat()) v += noise_scale * normal(rng);
    out.push_back(remove_mean(y));
  }
  return out;
}

}  // namespace eqbg
