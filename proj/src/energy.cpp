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

#include "eqbg/energy.hpp"

#include <cmath>
#include <string>

#include "eqbg/error.hpp"

namespace eqbg {

namespace {

struct PairGeometry {
  std::vector<double> unit;  // (x_i - x_j) / r
  double r;
};

PairGeometry pair_geometry(const Configuration& x, int i, int j) {
  PairGeometry g{std::vector<double>(static_cast<std::size_t>(x.dim())), 0.0};
  double s = 0.0;
  for (int a = 0; a < x.dim(); ++a) {
    const double diff = x(i, a) - x(j, a);
    g.unit[static_cast<std::size_t>(a)] = diff;
    s += diff * diff;
  }
  g.r = std::sqrt(s);
  if (g.r < DoubleWellEnergy::kCoincidenceTol) {
    throw SingularityError("particles " + std::to_string(i) + " and " + std::to_string(j) +
                           " coincide");
  }
  for (double& u : g.unit) u /= g.r;
  return g;
}

}  // namespace

DoubleWellEnergy::DoubleWellEnergy(DoubleWellParams params) : params_{params} {
  if (!(params_.b > 0.0)) {
    throw InputError("double-well quartic coefficient b must be positive");
  }
}

double DoubleWellEnergy::pair_energy(double r) const noexcept {
  const double s = r - params_.d0;
  const double s2 = s * s;
  return 2.0 * (params_.a * s2 + params_.b * s2 * s2);
}

double DoubleWellEnergy::energy(const Configuration& x) const {
  const int k = x.particles();
  double u = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double s = 0.0;
      for (int a = 0; a < x.dim(); ++a) {
        const double diff = x(i, a) - x(j, a);
        s += diff * diff;
      }
      u += pair_energy(std::sqrt(s));
    }
  }
  return u;
}

Configuration DoubleWellEnergy::gradient(const Configuration& x) const {
  const int k = x.particles();
  const int d = x.dim();
  Configuration grad(k, d);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const auto g = pair_geometry(x, i, j);
      const double s = g.r - params_.d0;
      const double dphi = 2.0 * (2.0 * params_.a * s + 4.0 * params_.b * s * s * s);
      for (int a = 0; a < d; ++a) {
        const double f = dphi * g.unit[static_cast<std::size_t>(a)];
        grad(i, a) += f;
        grad(j, a) -= f;
      }
    }
  }
  return grad;
}

Eigen::MatrixXd DoubleWellEnergy::hessian(const Configuration& x) const {
  const int k = x.particles();
  const int d = x.dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k * d, k * d);
  Eigen::MatrixXd block(d, d);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const auto g = pair_geometry(x, i, j);
      const double s = g.r - params_.d0;
      const double dphi = 2.0 * (2.0 * params_.a * s + 4.0 * params_.b * s * s * s);
      const double d2phi = 2.0 * (2.0 * params_.a + 12.0 * params_.b * s * s);
      // d^2 phi / dd dd^T = phi'' n n^T + (phi' / r) (I - n n^T)
      for (int a = 0; a < d; ++a) {
        for (int c = 0; c < d; ++c) {
          const double nn = g.unit[static_cast<std::size_t>(a)] * g.unit[static_cast<std::size_t>(c)];
          block(a, c) = d2phi * nn + dphi / g.r * ((a == c ? 1.0 : 0.0) - nn);
        }
      }
      h.block(i * d, i * d, d, d) += block;
      h.block(j * d, j * d, d, d) += block;
      h.block(i * d, j * d, d, d) -= block;
      h.block(j * d, i * d, d, d) -= block;
    }
  }
  return h;
}

double HarmonicEnergy::energy(const Configuration& x) const {
  return 0.5 * squared_norm(x) + offset_;
}

Configuration HarmonicEnergy::gradient(const Configuration& x) const { return x; }

Eigen::MatrixXd HarmonicEnergy::hessian(const Configuration& x) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  return Eigen::MatrixXd::Identity(n, n);
}

}  // namespace eqbg
