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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "eqbg/coupling_flow.hpp"
#include "eqbg/energy.hpp"
#include "eqbg/eqflow.hpp"
#include "eqbg/error.hpp"
#include "eqbg/parallel.hpp"
#include "eqbg/train.hpp"
#include "support.hpp"

namespace eqbg {
namespace {

using testing::random_mean_free;

std::unique_ptr<Flow> small_flow(bool equivariant, Rng& rng) {
  std::unique_ptr<Flow> flow;
  if (equivariant) {
    EqFlowConfig cfg;
    cfg.n_steps = 4;
    cfg.num_centers = 10;
    flow = std::make_unique<EqFlow>(3, 2, cfg);
  } else {
    flow = std::make_unique<CouplingFlow>(3, 2, CouplingFlowConfig{2, 8, 5.0});
  }
  flow->params().assign(testing::random_vector(flow->params().size(), rng, 0.2));
  return flow;
}

std::vector<double> current(const Flow& flow) {
  return {flow.params().values().begin(), flow.params().values().end()};
}

class LossGradient : public ::testing::TestWithParam<bool> {};

TEST_P(LossGradient, NllMatchesFiniteDifferences) {
  Rng rng(71);
  auto flow = small_flow(GetParam(), rng);
  const std::vector<Configuration> batch{random_mean_free(3, 2, rng), random_mean_free(3, 2, rng)};
  const auto theta = current(*flow);
  const auto loss = nll_loss(*flow, batch);
  const auto f = [&](std::span<const double> t) {
    flow->params().assign(t);
    return nll_loss(*flow, batch).loss;
  };
  const auto fd = testing::numeric_gradient(f, theta, 1e-6);
  EXPECT_LT(testing::relative_error(loss.grad, fd), 1e-4);
}

TEST_P(LossGradient, KlMatchesFiniteDifferences) {
  Rng rng(72);
  auto flow = small_flow(GetParam(), rng);
  const DoubleWellEnergy energy({-4.0, 0.9, 1.0});
  std::vector<Configuration> base;
  for (int b = 0; b < 3; ++b) base.push_back(flow->sample_base(rng));
  const auto theta = current(*flow);
  const auto loss = kl_loss_from_base(*flow, energy, base);
  EXPECT_EQ(loss.excluded, 0);
  const auto f = [&](std::span<const double> t) {
    flow->params().assign(t);
    return kl_loss_from_base(*flow, energy, base).loss;
  };
  const auto fd = testing::numeric_gradient(f, theta, 1e-6);
  EXPECT_LT(testing::relative_error(loss.grad, fd), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(BothModels, LossGradient, ::testing::Values(true, false));

// The mean NLL of the identity flow on its own prior is the projected-Gaussian entropy.
TEST(NllLoss, IdentityFlowEntropy) {
  Rng rng(73);
  const EqFlow flow(4, 2);
  std::vector<Configuration> data;
  for (int n = 0; n < 20000; ++n) data.push_back(flow.prior().sample(rng));
  std::vector<double> nll;
  for (const auto& x : data) nll.push_back(-flow.log_prob(x));
  double m = 0.0;
  double m2 = 0.0;
  for (double v : nll) {
    m += v;
    m2 += v * v;
  }
  m /= static_cast<double>(nll.size());
  const double se = std::sqrt((m2 / static_cast<double>(nll.size()) - m * m) / static_cast<double>(nll.size()));
  const double entropy = 3.0 * (1.0 + std::log(2.0 * std::numbers::pi));
  EXPECT_NEAR(nll_loss(flow, data).loss, m, 1e-9);
  EXPECT_NEAR(m, entropy, 3.0 * se);
}

// Identity flow against u = -log prior: every sample has u + log q = 0.
TEST(KlLoss, PerfectProposalIsZero) {
  Rng rng(74);
  const EqFlow flow(4, 2);
  const HarmonicEnergy energy(3.0 * std::log(2.0 * std::numbers::pi));
  const auto loss = kl_loss(flow, energy, rng, 64);
  EXPECT_NEAR(loss.loss, 0.0, 1e-12);
}

TEST(KlLoss, ClampInactiveBelowThreshold) {
  Rng rng(75);
  auto flow = small_flow(true, rng);
  const DoubleWellEnergy energy;
  std::vector<Configuration> base;
  for (int b = 0; b < 8; ++b) base.push_back(flow->sample_base(rng));
  const auto on = kl_loss_from_base(*flow, energy, base, {1e9, 1e-2, true});
  const auto off = kl_loss_from_base(*flow, energy, base, {1e9, 1e-2, false});
  EXPECT_EQ(on.loss, off.loss);
  EXPECT_EQ(on.grad, off.grad);
}

TEST(EnergyClamp, LinearAboveThreshold) {
  const EnergyClamp c{10.0, 0.5, true};
  EXPECT_EQ(c.value(3.0), 3.0);
  EXPECT_EQ(c.value(14.0), 12.0);
  EXPECT_EQ(c.derivative(14.0), 0.5);
  EXPECT_EQ(c.derivative(3.0), 1.0);
}

struct InfiniteEnergy final : EnergyModel {
  double energy(const Configuration&) const override { return std::numeric_limits<double>::infinity(); }
  Configuration gradient(const Configuration& x) const override { return Configuration(x.particles(), x.dim()); }
  Eigen::MatrixXd hessian(const Configuration& x) const override {
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
  }
};

TEST(KlLoss, MostlyNonFiniteEnergiesDiverge) {
  Rng rng(76);
  const EqFlow flow(3, 2);
  EXPECT_THROW((void)kl_loss(flow, InfiniteEnergy{}, rng, 8), DivergenceError);
}

TEST(ClipGradient, ScalesOnlyAboveLimit) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_gradient(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(clip_gradient(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
}

std::vector<Configuration> tiny_dataset(Rng& rng, int n) {
  std::vector<Configuration> data;
  for (int i = 0; i < n; ++i) data.push_back(random_mean_free(4, 2, rng, 2.0));
  return data;
}

TrainConfig tiny_config(int ml, int mixed, double lambda) {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.batch_size_kl = 8;
  cfg.n_iters_ml = ml;
  cfg.n_iters_mixed = mixed;
  cfg.kl_weight = lambda;
  cfg.seed = 99;
  return cfg;
}

TEST(TrainLoop, ZeroKlWeightEqualsLongerMl) {
  Rng rng(77);
  const auto data = tiny_dataset(rng, 32);
  const DoubleWellEnergy energy;
  EqFlowConfig fc;
  fc.n_steps = 8;
  EqFlow a(4, 2, fc);
  EqFlow b(4, 2, fc);
  (void)train_loop(a, energy, data, tiny_config(10, 10, 0.0));
  (void)train_loop(b, energy, data, tiny_config(20, 0, 0.0));
  EXPECT_EQ(current(a), current(b));
}

TEST(TrainLoop, DeterministicAcrossRunsAndThreadCounts) {
  Rng rng(78);
  const auto data = tiny_dataset(rng, 32);
  const DoubleWellEnergy energy;
  const auto run = [&](int threads) {
    set_num_threads(threads);
    EqFlowConfig fc;
    fc.n_steps = 8;
    EqFlow flow(4, 2, fc);
    auto result = train_loop(flow, energy, data, tiny_config(5, 5, 0.5));
    return std::make_pair(current(flow), result.history);
  };
  const auto r1 = run(1);
  const auto r2 = run(1);
  const auto r4 = run(4);
  set_num_threads(0);
  EXPECT_EQ(r1.first, r2.first);
  EXPECT_EQ(r1.first, r4.first);
  ASSERT_EQ(r1.second.size(), r4.second.size());
  for (std::size_t i = 0; i < r1.second.size(); ++i) {
    EXPECT_EQ(r1.second[i].total, r4.second[i].total);
    EXPECT_EQ(r1.second[i].kl, r4.second[i].kl);
  }
}

TEST(TrainLoop, FullBatchLossDecreasesMonotonically) {
  Rng rng(79);
  const auto data = tiny_dataset(rng, 6);
  const DoubleWellEnergy energy;
  EqFlowConfig fc;
  fc.n_steps = 8;
  EqFlow flow(4, 2, fc);
  const auto result = train_loop(flow, energy, data, tiny_config(50, 0, 0.0));
  ASSERT_EQ(result.history.size(), 50u);
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    EXPECT_LT(result.history[i].nll, result.history[i - 1].nll) << "iteration " << i;
  }
}

TEST(TrainLoop, RejectsInvalidConfig) {
  Rng rng(80);
  const auto data = tiny_dataset(rng, 4);
  EqFlow flow(4, 2);
  auto cfg = tiny_config(1, 1, 1.5);
  EXPECT_THROW((void)train_loop(flow, DoubleWellEnergy{}, data, cfg), InputError);
}

}  // namespace
}  // namespace eqbg
