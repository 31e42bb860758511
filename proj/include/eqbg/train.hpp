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

#ifndef EQBG_TRAIN_HPP
#define EQBG_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqbg/energy.hpp"
#include "eqbg/flow.hpp"

namespace eqbg {

struct TrainConfig {
  int batch_size = 256;     // ML batches
  int batch_size_kl = 256;  // model samples per KL estimate
  int n_iters_ml = 2000;
  int n_iters_mixed = 2000;
  double learning_rate = 1e-3;
  double kl_weight = 0.5;  // lambda in (1 - lambda) NLL + lambda KL
  double grad_clip = 100.0;
  double energy_clamp = 1e3;
  double energy_clamp_slope = 1e-2;
  std::uint64_t seed = 0;
};

/// Throws InputError on non-positive counts or a weight outside [0, 1].
void validate(const TrainConfig& cfg);

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d theta
  int excluded = 0;          // KL samples dropped for non-finite energy
};

/// Energy above `threshold` grows with `slope` instead of 1.
struct EnergyClamp {
  double threshold = 1e3;
  double slope = 1e-2;
  bool enabled = true;

  [[nodiscard]] double value(double u) const noexcept;
  [[nodiscard]] double derivative(double u) const noexcept;
};

/// Mean negative log-likelihood -1/B sum_b log q(x_b) and its gradient.
LossValue nll_loss(const Flow& flow, std::span<const Configuration> batch);

/// Reverse-KL estimate 1/B sum_b [u(x_b) + log q(x_b)] over model samples,
/// with gradients through the sampling path. Samples whose energy or energy
/// gradient is non-finite are excluded; more than half excluded throws
/// DivergenceError.
LossValue kl_loss(const Flow& flow, const EnergyModel& energy, Rng& rng, int batch_size,
                  const EnergyClamp& clamp = {});

/// Same, for caller-supplied base samples.
LossValue kl_loss_from_base(const Flow& flow, const EnergyModel& energy,
                            std::span<const Configuration> base, const EnergyClamp& clamp = {});

/// Adaptive-moment optimizer (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ParamStore& params, std::span<const double> grad);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Rescales grad in place so that its 2-norm is at most max_norm; returns the
/// norm before clipping.
double clip_gradient(std::span<double> grad, double max_norm);

struct LossRecord {
  int iter = 0;
  std::string phase;  // "ml" or "mixed"
  double nll = 0.0;
  std::optional<double> kl;
  double total = 0.0;
  double grad_norm = 0.0;
  int excluded = 0;
};

struct TrainResult {
  std::vector<LossRecord> history;
  bool aborted = false;
  std::string message;
};

/// Phase 1: n_iters_ml steps on the NLL. Phase 2: n_iters_mixed steps on
/// (1 - lambda) NLL + lambda KL (no KL samples are drawn when lambda = 0).
///
/// On a non-finite loss or a divergence error the parameters of the last
/// finite step are kept and the result is flagged as aborted.
TrainResult train_loop(Flow& flow, const EnergyModel& energy,
                       std::span<const Configuration> dataset, const TrainConfig& cfg,
                       const std::function<void(const LossRecord&)>& on_iteration = {});

}  // namespace eqbg

#endif  // EQBG_TRAIN_HPP
