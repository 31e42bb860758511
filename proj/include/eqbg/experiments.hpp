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

#ifndef EQBG_EXPERIMENTS_HPP
#define EQBG_EXPERIMENTS_HPP

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eqbg/bg.hpp"
#include "eqbg/config.hpp"
#include "eqbg/io.hpp"

namespace eqbg {

using Logger = std::function<void(std::string_view)>;

/// Builds an untrained model of the given type ("eqflow" or "realnvp").
std::unique_ptr<Flow> make_flow(const std::string& type, const RunConfig& cfg);

/// Mean of -log q(x) over data.
double mean_nll(const Flow& flow, std::span<const Configuration> data);

struct InvarianceProbe {
  /// Largest |log q(g x) - log q(x)| per group kind, over all probes.
  std::map<std::string, double> max_abs_delta;
  int n_actions = 0;
};

/// For each group kind draws n_actions random elements and applies each to a
/// data point (cycling through data). Both sides are mean-removed before
/// evaluation, matching the dataset preprocessing.
InvarianceProbe probe_invariance(const Flow& flow, std::span<const Configuration> data,
                                 int n_actions, Rng& rng);

/// Local minimum the experiments are built around: the configured start (or
/// default_start) minimized with minimize_energy. Throws ConvergenceError if
/// the minimizer fails.
MinimumRecord reference_minimum(const RunConfig& cfg, const EnergyModel& energy);

/// Chain start: mcmc.init if set, otherwise the reference minimum plus
/// noise_scale Gaussian noise.
Configuration chain_start(const RunConfig& cfg, const EnergyModel& energy);

struct Histogram1D {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<int> counts;
};

struct Histogram2D {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 0;
  std::vector<int> counts;  // row-major [x bin][y bin]
};

Histogram1D histogram(std::span<const double> values, double lo, double hi, int bins);
Histogram2D histogram2d(std::span<const double> xs, std::span<const double> ys, double lo,
                        double hi, int bins);
nlohmann::json to_json(const Histogram1D& h);
nlohmann::json to_json(const Histogram2D& h);

struct ModelOutcome {
  std::string model;
  Checkpoint checkpoint;
  TrainResult train;
};

struct Experiment1Result {
  double acceptance_rate = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::map<std::string, std::array<double, 2>> nll;  // model -> {train, test}
  std::vector<ModelOutcome> models;
  nlohmann::json metrics;
};

/// MCMC trajectory, temporal split, ML then mixed ML/KL training of both
/// models, and NLL on both halves. Writes dataset, checkpoints, loss and
/// histogram CSVs and metrics.json into out_dir unless it is empty.
Experiment1Result run_experiment1(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                  const Logger& log = {});

struct MinimaSummary {
  std::vector<MinimumRecord> distinct;
  int n_samples = 0;
  int n_failed = 0;  // minimizations that did not converge
  int n_new = 0;     // distinct minima absent from the training data
};

/// Minimizes every sample, drops non-converged runs and deduplicates.
MinimaSummary summarize_minima(std::span<const Configuration> samples, const EnergyModel& energy,
                               std::span<const double> training_signature, double tol);

struct Experiment2Result {
  MinimumRecord training_minimum;
  std::map<std::string, MinimaSummary> minima;  // model -> summary
  std::vector<ModelOutcome> models;
  nlohmann::json report;
};

/// Perturbed single-minimum training set, ML then mixed training of both
/// models, sample generation, local minimization and mode counting.
Experiment2Result run_experiment2(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                  const Logger& log = {});

}  // namespace eqbg

#endif  // EQBG_EXPERIMENTS_HPP
