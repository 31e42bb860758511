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
#include <numbers>

#include "eqbg/error.hpp"
#include "eqbg/prior.hpp"
#include "support.hpp"

namespace eqbg {
namespace {

// Orthonormal coordinates u on the mean-free plane of two particles:
// x_1 = u / sqrt(2), x_2 = -u / sqrt(2).
Configuration two_particle(std::span<const double> u) {
  const int d = static_cast<int>(u.size());
  Configuration x(2, d);
  for (int a = 0; a < d; ++a) {
    x(0, a) = u[static_cast<std::size_t>(a)] / std::numbers::sqrt2;
    x(1, a) = -u[static_cast<std::size_t>(a)] / std::numbers::sqrt2;
  }
  return x;
}

TEST(Prior, NormalizesInOneDimension) {
  const MeanFreePrior prior(2, 1);
  const double h = 1e-3;
  double total = 0.0;
  for (double u = -12.0; u <= 12.0 + 1e-12; u += h) {
    const std::array<double, 1> c{u};
    total += std::exp(prior.log_prob(two_particle(c))) * h;
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Prior, NormalizesInTwoDimensions) {
  const MeanFreePrior prior(2, 2);
  const double h = 0.02;
  const int n = static_cast<int>(std::lround(24.0 / h));
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const std::array<double, 2> c{-12.0 + i * h, -12.0 + j * h};
      total += std::exp(prior.log_prob(two_particle(c))) * h * h;
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Prior, LogNormalizer) {
  const MeanFreePrior prior(4, 2);
  EXPECT_EQ(prior.subspace_dim(), 6);
  EXPECT_NEAR(prior.log_normalizer(), -3.0 * std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(Prior, RejectsNonMeanFree) {
  const MeanFreePrior prior(3, 2);
  auto x = Configuration::from_rows({{1, 0}, {-1, 0}, {0, 0}});
  EXPECT_NO_THROW((void)prior.log_prob(x));
  x(2, 1) = 1e-6;
  EXPECT_THROW((void)prior.log_prob(x), InputError);
}

TEST(Prior, SamplesAreMeanFree) {
  const MeanFreePrior prior(5, 3);
  Rng rng(3);
  for (int n = 0; n < 100; ++n) EXPECT_LT(mean_norm(prior.sample(rng)), 1e-14);
}

// E|z|^2 = (K - 1) D for the projected Gaussian; Monte Carlo within 3 standard errors.
TEST(Prior, SampleSecondMoment) {
  const MeanFreePrior prior(4, 2);
  Rng rng(4);
  const int n = 100000;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < n; ++s) {
    const double q = squared_norm(prior.sample(rng));
    m1 += q;
    m2 += q * q;
  }
  m1 /= n;
  const double se = std::sqrt((m2 / n - m1 * m1) / n);
  EXPECT_NEAR(m1, 6.0, 3.0 * se);
}

TEST(Prior, PointValues) {
  const MeanFreePrior prior(2, 2);
  const double ln2pi = std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(prior.log_prob(Configuration(2, 2)), -ln2pi, 1e-14);
  EXPECT_NEAR(prior.log_prob(Configuration::from_rows({{1, 0}, {-1, 0}})), -1.0 - ln2pi, 1e-14);
}

TEST(Prior, SameSeedSameDraw) {
  const MeanFreePrior prior(4, 3);
  Rng a(9);
  Rng b(9);
  EXPECT_EQ(prior.sample(a), prior.sample(b));
}

TEST(Prior, InvariantUnderGroupActions) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 4;
    const int d = 1 + trial % 3;
    const MeanFreePrior prior(k, d);
    const auto z = prior.sample(rng);
    const auto kind = static_cast<GroupKind>(trial % 3);
    const auto gz = remove_mean(apply_group(random_group_element(kind, k, d, rng), z));
    EXPECT_NEAR(prior.log_prob(gz), prior.log_prob(z), 1e-12);
  }
}

}  // namespace
}  // namespace eqbg
