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

#include "eqbg/train.hpp"

#include <cmath>
#include <numeric>

#include "eqbg/error.hpp"
#include "eqbg/parallel.hpp"

namespace eqbg {

namespace {

// Fixed chunk count keeps reductions bit-identical across thread counts.
constexpr std::size_t kMaxChunks = 16;

struct ChunkSum {
  std::vector<double> grad;
  double loss = 0.0;
  int used = 0;
  int excluded = 0;
};

// f(i, grad) returns the per-sample loss, or nullopt if the sample is excluded.
template <class F>
ChunkSum sum_over_batch(std::size_t count, std::size_t num_params, F&& f) {
  const std::size_t chunks = chunk_count(count, kMaxChunks);
  std::vector<ChunkSum> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    ChunkSum& part = parts[c];
    part.grad.assign(num_params, 0.0);
    const Chunk range = chunk_range(count, chunks, c);
    for (std::size_t i = range.begin; i < range.end; ++i) {
      if (const std::optional<double> l = f(i, std::span<double>(part.grad))) {
        part.loss += *l;
        ++part.used;
      } else {
        ++part.excluded;
      }
    }
  });
  ChunkSum total;
  total.grad.assign(num_params, 0.0);
  for (const ChunkSum& part : parts) {
    for (std::size_t k = 0; k < num_params; ++k) total.grad[k] += part.grad[k];
    total.loss += part.loss;
    total.used += part.used;
    total.excluded += part.excluded;
  }
  return total;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.batch_size_kl < 1) {
    throw InputError("train: batch sizes must be positive");
  }
  if (cfg.n_iters_ml < 0 || cfg.n_iters_mixed < 0) {
    throw InputError("train: iteration counts must be non-negative");
  }
  if (!(cfg.kl_weight >= 0.0 && cfg.kl_weight <= 1.0)) {
    throw InputError("train: kl_weight must lie in [0, 1]");
  }
  if (!(cfg.learning_rate > 0.0) || !(cfg.grad_clip > 0.0)) {
    throw InputError("train: learning rate and gradient clip must be positive");
  }
  if (!(cfg.energy_clamp_slope >= 0.0)) {
    throw InputError("train: energy clamp slope must be non-negative");
  }
}

double EnergyClamp::value(double u) const noexcept {
  if (!enabled || u <= threshold) return u;
  return threshold + slope * (u - threshold);
}

double EnergyClamp::derivative(double u) const noexcept {
  if (!enabled || u <= threshold) return 1.0;
  return slope;
}

LossValue nll_loss(const Flow& flow, std::span<const Configuration> batch) {
  if (batch.empty()) {
    throw InputError("nll_loss: empty batch");
  }
  const std::size_t num_params = flow.params().size();
  ChunkSum sum = sum_over_batch(batch.size(), num_params,
                                [&](std::size_t i, std::span<double> grad) -> std::optional<double> {
                                  const FlowPass pass = flow.inverse(batch[i], true);
                                  const double log_q = flow.base_log_prob(pass.out) + pass.logdet;
                                  // d(-log q)/dz = -d(base)/dz, d(-log q)/dlogdet = -1
                                  flow.backward(*pass.tape, -1.0 * flow.base_log_prob_grad(pass.out),
                                                -1.0, grad);
                                  return -log_q;
                                });
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossValue out{sum.loss * inv_b, std::move(sum.grad), 0};
  for (double& g : out.grad) g *= inv_b;
  return out;
}

LossValue kl_loss_from_base(const Flow& flow, const EnergyModel& energy,
                            std::span<const Configuration> base, const EnergyClamp& clamp) {
  if (base.empty()) {
    throw InputError("kl_loss: empty batch");
  }
  const std::size_t num_params = flow.params().size();
  ChunkSum sum = sum_over_batch(
      base.size(), num_params, [&](std::size_t i, std::span<double> grad) -> std::optional<double> {
        const Configuration& z = base[i];
        const FlowPass pass = flow.forward(z, true);
        double u = 0.0;
        Configuration du;
        try {
          u = energy.energy(pass.out);
          if (!std::isfinite(u)) return std::nullopt;
          du = energy.gradient(pass.out);
        } catch (const SingularityError&) {
          return std::nullopt;
        }
        if (!du.all_finite()) return std::nullopt;
        const double log_q = flow.base_log_prob(z) - pass.logdet;
        du *= clamp.derivative(u);
        flow.backward(*pass.tape, du, -1.0, grad);
        return clamp.value(u) + log_q;
      });
  if (2 * sum.excluded > static_cast<int>(base.size())) {
    throw DivergenceError("kl_loss: " + std::to_string(sum.excluded) + " of " +
                          std::to_string(base.size()) + " samples had non-finite energy");
  }
  const double inv_b = 1.0 / static_cast<double>(sum.used);
  LossValue out{sum.loss * inv_b, std::move(sum.grad), sum.excluded};
  for (double& g : out.grad) g *= inv_b;
  return out;
}

LossValue kl_loss(const Flow& flow, const EnergyModel& energy, Rng& rng, int batch_size,
                  const EnergyClamp& clamp) {
  if (batch_size < 1) {
    throw InputError("kl_loss: batch size must be positive");
  }
  std::vector<Configuration> base;
  base.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) base.push_back(flow.sample_base(rng));
  return kl_loss_from_base(flow, energy, base, clamp);
}

Adam::Adam(double learning_rate, double beta1, double beta2, double eps)
    : lr_{learning_rate}, beta1_{beta1}, beta2_{beta2}, eps_{eps} {}

void Adam::step(ParamStore& params, std::span<const double> grad) {
  if (grad.size() != params.size()) {
    throw InputError("adam: gradient size does not match parameters");
  }
  if (m_.empty()) {
    m_.assign(grad.size(), 0.0);
    v_.assign(grad.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto theta = params.mutable_values();
  for (std::size_t k = 0; k < grad.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
    theta[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

double clip_gradient(std::span<double> grad, double max_norm) {
  const double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

TrainResult train_loop(Flow& flow, const EnergyModel& energy,
                       std::span<const Configuration> dataset, const TrainConfig& cfg,
                       const std::function<void(const LossRecord&)>& on_iteration) {
  validate(cfg);
  if (dataset.empty()) {
    throw InputError("train_loop: empty dataset");
  }
  Rng rng(cfg.seed);
  Adam adam(cfg.learning_rate);
  const EnergyClamp clamp{cfg.energy_clamp, cfg.energy_clamp_slope, true};
  TrainResult result;

  const bool full_batch = static_cast<std::size_t>(cfg.batch_size) >= dataset.size();
  std::vector<Configuration> batch;
  auto draw_batch = [&]() -> std::span<const Configuration> {
    if (full_batch) return dataset;
    batch.clear();
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(dataset[pick(rng)]);
    return batch;
  };

  const int total_iters = cfg.n_iters_ml + cfg.n_iters_mixed;
  for (int iter = 0; iter < total_iters; ++iter) {
    const bool mixed = iter >= cfg.n_iters_ml;
    LossRecord rec;
    rec.iter = iter;
    rec.phase = mixed ? "mixed" : "ml";
    std::vector<double> grad;
    try {
      LossValue nll = nll_loss(flow, draw_batch());
      rec.nll = nll.loss;
      if (mixed && cfg.kl_weight > 0.0) {
        const LossValue kl = kl_loss(flow, energy, rng, cfg.batch_size_kl, clamp);
        const double w = cfg.kl_weight;
        rec.kl = kl.loss;
        rec.excluded = kl.excluded;
        rec.total = (1.0 - w) * nll.loss + w * kl.loss;
        grad.resize(nll.grad.size());
        for (std::size_t k = 0; k < grad.size(); ++k) {
          grad[k] = (1.0 - w) * nll.grad[k] + w * kl.grad[k];
        }
      } else {
        rec.total = nll.loss;
        grad = std::move(nll.grad);
      }
    } catch (const DivergenceError& e) {
      result.aborted = true;
      result.message = "iteration " + std::to_string(iter) + ": " + e.what();
      break;
    }
    const bool grad_finite =
        std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
    if (!std::isfinite(rec.total) || !grad_finite) {
      result.aborted = true;
      result.message = "iteration " + std::to_string(iter) + ": non-finite loss or gradient";
      break;
    }
    rec.grad_norm = clip_gradient(grad, cfg.grad_clip);
    adam.step(flow.params(), grad);
    if (on_iteration) on_iteration(rec);
    result.history.push_back(std::move(rec));
  }
  return result;
}

}  // namespace eqbg
