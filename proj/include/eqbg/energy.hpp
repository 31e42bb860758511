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

#ifndef EQBG_ENERGY_HPP
#define EQBG_ENERGY_HPP

#include <Eigen/Dense>

#include "eqbg/geom.hpp"

namespace eqbg {

/// Reduced (dimensionless) potential energy u(x) of a particle configuration.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  [[nodiscard]] virtual double energy(const Configuration& x) const = 0;
  [[nodiscard]] virtual Configuration gradient(const Configuration& x) const = 0;
  /// (K*D) x (K*D) matrix in the flattened row-major coordinate order.
  [[nodiscard]] virtual Eigen::MatrixXd hessian(const Configuration& x) const = 0;
};

struct DoubleWellParams {
  double a = -4.0;
  double b = 0.9;
  double d0 = 4.0;
};

/// Pair potential a*s^2 + b*s^4 with s = |x_i - x_j| - d0, summed over all
/// ordered pairs i != j (every unordered pair contributes twice).
///
/// The per-pair term has minima at d0 +- sqrt(-a / (2b)) and a local maximum
/// at d0.
class DoubleWellEnergy final : public EnergyModel {
 public:
  /// Pairs closer than this have no defined distance gradient.
  static constexpr double kCoincidenceTol = 1e-10;

  explicit DoubleWellEnergy(DoubleWellParams params = {});

  [[nodiscard]] const DoubleWellParams& params() const noexcept { return params_; }

  [[nodiscard]] double energy(const Configuration& x) const override;
  [[nodiscard]] Configuration gradient(const Configuration& x) const override;
  [[nodiscard]] Eigen::MatrixXd hessian(const Configuration& x) const override;

  /// Contribution of one unordered pair at distance r (both orderings).
  [[nodiscard]] double pair_energy(double r) const noexcept;

 private:
  DoubleWellParams params_;
};

/// u(x) = 1/2 |x|^2 + offset. With offset = (K-1)*D/2 * ln(2 pi) this is the
/// negative log-density of the mean-free prior on mean-free inputs.
class HarmonicEnergy final : public EnergyModel {
 public:
  explicit HarmonicEnergy(double offset = 0.0) : offset_{offset} {}

  [[nodiscard]] double energy(const Configuration& x) const override;
  [[nodiscard]] Configuration gradient(const Configuration& x) const override;
  [[nodiscard]] Eigen::MatrixXd hessian(const Configuration& x) const override;

 private:
  double offset_;
};

}  // namespace eqbg

#endif  // EQBG_ENERGY_HPP
