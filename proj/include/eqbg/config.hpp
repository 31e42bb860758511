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

#ifndef EQBG_CONFIG_HPP
#define EQBG_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "eqbg/coupling_flow.hpp"
#include "eqbg/energy.hpp"
#include "eqbg/eqflow.hpp"
#include "eqbg/mcmc.hpp"
#include "eqbg/train.hpp"

namespace eqbg {

struct SystemConfig {
  int particles = 4;
  int dim = 2;
  DoubleWellParams energy;
};

struct ModelConfig {
  std::string type = "eqflow";
  EqFlowConfig eqflow;
  CouplingFlowConfig realnvp;
};

struct ExperimentConfig {
  std::string name = "default";
  double split_fraction = 0.5;
  double noise_scale = 0.05;
  int n_generate = 1000;
  int n_train_samples = 1000;  // size of the perturbed-minimum training set
  double minima_tol = 1e-3;
  int histogram_bins = 50;
  /// Start for the local minimization that seeds both experiments.
  std::optional<Configuration> start;
};

/// Complete run description. Every section and key is optional; absent keys
/// take the defaults above, unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  SystemConfig system;
  ModelConfig model;
  TrainConfig train;
  McmcConfig mcmc;  // mcmc.init empty = derived from the experiment start
  ExperimentConfig experiment;
  std::filesystem::path out_dir = "out";

  /// Derived per-purpose seeds, so changing one stream leaves the others.
  [[nodiscard]] std::uint64_t stream_seed(std::string_view purpose) const noexcept;

  bool train_seed_explicit = false;
  bool mcmc_seed_explicit = false;
};

/// Parses and validates a config document; throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Replaces the run seed and re-derives all stream seeds that were not set
/// explicitly in the document.
void override_seed(RunConfig& cfg, std::uint64_t seed);

/// K particles spaced on a circle at the outer-well pair distance of the
/// double well.
Configuration default_start(int particles, int dim, const DoubleWellParams& p);

}  // namespace eqbg

#endif  // EQBG_CONFIG_HPP
