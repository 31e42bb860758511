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

#ifndef EQBG_BG_HPP
#define EQBG_BG_HPP

#include <functional>
#include <span>
#include <vector>

#include "eqbg/energy.hpp"
#include "eqbg/flow.hpp"

namespace eqbg {

/// A flow sample with its model log-density, energy and unnormalized
/// importance log-weight log w = -u - log q.
struct WeightedSample {
  Configuration x;
  double log_q = 0.0;
  double u = 0.0;
  double log_w = 0.0;
  bool flagged = false;  // energy was not finite; log_w = -inf
};

std::vector<WeightedSample> generate(const Flow& flow, const EnergyModel& energy, int n, Rng& rng);

/// (sum w)^2 / sum w^2 with w = exp(log_w - max log_w). Throws InputError if
/// no weight is finite.
double effective_sample_size(std::span<const double> log_w);
double effective_sample_size(std::span<const WeightedSample> samples);

struct ReweightedEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // delta-method standard error of the ratio estimator
  double ess = 0.0;
};

/// Self-normalized importance estimate sum w f(x) / sum w.
ReweightedEstimate reweight(std::span<const WeightedSample> samples,
                            const std::function<double(const Configuration&)>& observable);
double reweighted_expectation(std::span<const WeightedSample> samples,
                              const std::function<double(const Configuration&)>& observable);

/// Sorted vector of the K(K-1)/2 pair distances; invariant under
/// permutations, rotations and translations.
std::vector<double> pair_signature(const Configuration& x);

struct MinimumRecord {
  Configuration x_min;
  double u_min = 0.0;
  std::vector<double> signature;
  double grad_norm = 0.0;
  int iterations = 0;
  int n_hits = 1;
};

struct MinimizeOptions {
  double grad_tol = 1e-8;
  int max_iterations = 500;
  double initial_damping = 1e-3;
};

struct MinimizeResult {
  MinimumRecord record;  // last iterate when not converged
  bool converged = false;
};

/// Levenberg-damped Newton descent on u with steps projected onto the
/// mean-free subspace: step = -(P H P + mu I)^{-1} P grad u. mu shrinks after
/// accepted steps and grows after rejected ones; a step is accepted only if u
/// does not increase beyond rounding. Stops when |P grad u| < grad_tol.
MinimizeResult minimize_energy(const Configuration& x0, const EnergyModel& energy,
                               const MinimizeOptions& options = {});

/// Collapses records whose signatures agree entry-wise within tol, keeping
/// the lowest-energy representative and summing n_hits. Output is ordered by
/// u_min.
std::vector<MinimumRecord> distinct_minima(std::span<const MinimumRecord> records, double tol);

/// True if the two signatures agree entry-wise within tol.
bool same_signature(std::span<const double> a, std::span<const double> b, double tol);

}  // namespace eqbg

#endif  // EQBG_BG_HPP
