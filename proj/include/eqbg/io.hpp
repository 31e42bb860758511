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

#ifndef EQBG_IO_HPP
#define EQBG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqbg/bg.hpp"
#include "eqbg/flow.hpp"
#include "eqbg/mcmc.hpp"
#include "eqbg/train.hpp"

namespace eqbg {

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_real(double v);

/// Dataset CSV: one configuration per row, K*D columns x1_1..x1_D,...,xK_D,
/// with a header row on write. Reading accepts files with or without header.
void write_dataset_csv(const std::filesystem::path& path, std::span<const Configuration> data);
Dataset read_dataset_csv(const std::filesystem::path& path, int particles, int dim);

/// Samples CSV: coordinates followed by logq, u, logw.
void write_samples_csv(const std::filesystem::path& path, std::span<const WeightedSample> samples);
std::vector<WeightedSample> read_samples_csv(const std::filesystem::path& path, int particles,
                                             int dim);

/// Loss CSV: iter, nll, kl, total, grad_norm, excluded_count.
void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> history);

nlohmann::json to_json(const LossRecord& r);
LossRecord loss_record_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::string model;  // "eqflow" | "realnvp"
  nlohmann::json hyperparams;
  std::vector<double> params;
  std::uint64_t seed = 0;
  std::string created_by;
  std::vector<LossRecord> loss_history;
  nlohmann::json train = nlohmann::json::object();  // echoed training settings
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const Flow& flow, std::uint64_t seed, std::span<const LossRecord> history,
                           nlohmann::json train = nlohmann::json::object());
/// Rebuilds the model described by a checkpoint, with its parameters.
std::unique_ptr<Flow> flow_from_checkpoint(const Checkpoint& c);

nlohmann::json to_json(const TrainConfig& cfg);

/// Minima JSON: [{coords, u_min, signature, n_hits}, ...].
nlohmann::json minima_to_json(std::span<const MinimumRecord> minima);
std::vector<MinimumRecord> minima_from_json(const nlohmann::json& j, int particles, int dim);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Thrown for unreadable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eqbg

#endif  // EQBG_IO_HPP
