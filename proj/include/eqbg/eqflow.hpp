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

#ifndef EQBG_EQFLOW_HPP
#define EQBG_EQFLOW_HPP

#include <array>
#include <span>
#include <vector>

#include "eqbg/flow.hpp"
#include "eqbg/prior.hpp"
#include "eqbg/radial_net.hpp"

namespace eqbg {

/// Velocity field and its exact divergence at one state.
struct RadialField {
  Configuration velocity;
  double divergence = 0.0;
};

/// g_i = sum_{j != i} psi(|x_i - x_j|) (x_i - x_j).
///
/// Rows always sum to zero, so integrating g preserves the center of mass.
Configuration radial_dynamics(const Configuration& x, const RadialNet& net,
                              std::span<const double> theta);

/// Exact trace of dg/dx: sum_i sum_{j != i} [psi'(r_ij) r_ij + D psi(r_ij)].
double radial_divergence(const Configuration& x, const RadialNet& net,
                         std::span<const double> theta);

/// Both of the above in one pass over the pairs.
RadialField radial_field(const Configuration& x, const RadialNet& net,
                         std::span<const double> theta);

/// Vector-Jacobian product of (velocity, divergence) at x.
///
/// Adds d(<adjoint_velocity, g(x)> + adjoint_divergence * div g(x)) / dx into
/// adjoint_x and the corresponding parameter derivative into grad.
void radial_field_vjp(const Configuration& x, const RadialNet& net, std::span<const double> theta,
                      const Configuration& adjoint_velocity, double adjoint_divergence,
                      Configuration& adjoint_x, std::span<double> grad);

struct EqFlowConfig {
  int n_steps = 32;
  double t0 = 0.0;
  double t1 = 1.0;
  int num_centers = 32;
  double r_max = 8.0;
  double bandwidth = 0.0;  // <= 0: grid spacing
};

/// Stage inputs of every RK4 step of one integration, in integration order.
struct IntegrationTape final : FlowTape {
  double step = 0.0;  // signed step size
  std::vector<std::array<Configuration, 4>> stages;
};

/// Equivariant continuous normalizing flow over mean-free configurations.
///
/// The state follows dy/dt = g(y) with g the radial pairwise field above,
/// integrated with fixed-step RK4 over [t0, t1]. The log-determinant of the
/// map is integrated alongside as d(logdet)/dt = div g(y). Reverse passes run
/// the same scheme with a negated step, so their logdet is the negated
/// divergence integral. Parameter gradients are exact for the discretized
/// map (differentiate-through-the-solver).
class EqFlow final : public Flow {
 public:
  static constexpr double kMeanFreeTol = 1e-8;

  EqFlow(int particles, int dim, EqFlowConfig config = {});

  [[nodiscard]] std::string_view kind() const noexcept override { return "eqflow"; }
  [[nodiscard]] nlohmann::json hyperparams() const override;

  [[nodiscard]] const EqFlowConfig& config() const noexcept { return config_; }
  [[nodiscard]] const RadialNet& net() const noexcept { return net_; }
  [[nodiscard]] const MeanFreePrior& prior() const noexcept { return prior_; }
  [[nodiscard]] std::span<const double> theta() const noexcept { return params_.values(); }

  /// Sets psi to the constant c (all RBF weights zero).
  void set_constant_psi(double c);

  [[nodiscard]] Configuration sample_base(Rng& rng) const override;
  [[nodiscard]] double base_log_prob(const Configuration& z) const override;
  [[nodiscard]] Configuration base_log_prob_grad(const Configuration& z) const override;

  [[nodiscard]] FlowPass forward(const Configuration& z, bool record = false) const override;
  [[nodiscard]] FlowPass inverse(const Configuration& x, bool record = false) const override;

  /// Integrates y0 in the given direction. Throws InputError if y0 is not
  /// mean-free and DivergenceError (naming the step) on a non-finite state.
  [[nodiscard]] FlowPass integrate(const Configuration& y0, Direction direction,
                                   bool record = false) const;

  void backward(const FlowTape& tape, const Configuration& adjoint_out, double adjoint_logdet,
                std::span<double> grad) const override;

 private:
  EqFlowConfig config_;
  RadialNet net_;
  MeanFreePrior prior_;
};

}  // namespace eqbg

#endif  // EQBG_EQFLOW_HPP
