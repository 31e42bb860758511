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

#include "eqbg/eqflow.hpp"

#include <cmath>
#include <string>

#include "eqbg/error.hpp"

namespace eqbg {

namespace {

// Pair difference d = x_i - x_j and its length.
inline double pair_diff(const Configuration& x, int i, int j, double* diff) {
  double s = 0.0;
  for (int a = 0; a < x.dim(); ++a) {
    diff[a] = x(i, a) - x(j, a);
    s += diff[a] * diff[a];
  }
  return std::sqrt(s);
}

constexpr std::array<double, 4> kRkWeights = {1.0, 2.0, 2.0, 1.0};

}  // namespace

RadialField radial_field(const Configuration& x, const RadialNet& net,
                         std::span<const double> theta) {
  const int k = x.particles();
  const int dim = x.dim();
  RadialField f{Configuration(k, dim), 0.0};
  double diff[3];
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double r = pair_diff(x, i, j, diff);
      const PsiValue psi = net.eval(theta, r);
      for (int a = 0; a < dim; ++a) {
        f.velocity(i, a) += psi.value * diff[a];
        f.velocity(j, a) -= psi.value * diff[a];
      }
      // Both orderings (i, j) and (j, i) contribute equally.
      f.divergence += 2.0 * (psi.d1 * r + dim * psi.value);
    }
  }
  return f;
}

Configuration radial_dynamics(const Configuration& x, const RadialNet& net,
                              std::span<const double> theta) {
  return radial_field(x, net, theta).velocity;
}

double radial_divergence(const Configuration& x, const RadialNet& net,
                         std::span<const double> theta) {
  return radial_field(x, net, theta).divergence;
}

void radial_field_vjp(const Configuration& x, const RadialNet& net, std::span<const double> theta,
                      const Configuration& adjoint_velocity, double adjoint_divergence,
                      Configuration& adjoint_x, std::span<double> grad) {
  const int k = x.particles();
  const int dim = x.dim();
  const double b2 = 2.0 * adjoint_divergence;
  double diff[3];
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double r = pair_diff(x, i, j, diff);
      double p = 0.0;
      double e[3];
      for (int a = 0; a < dim; ++a) {
        e[a] = adjoint_velocity(i, a) - adjoint_velocity(j, a);
        p += e[a] * diff[a];
      }
      // Per unordered pair: L = psi(r) <e, d> + 2b (psi'(r) r + D psi(r)).
      net.accumulate_param_grads(r, p + b2 * dim, b2 * r, grad);

      const PsiValue psi = net.eval(theta, r);
      const double radial =
          r > 0.0 ? (psi.d1 * p + b2 * (psi.d2 * r + (1.0 + dim) * psi.d1)) / r : 0.0;
      for (int a = 0; a < dim; ++a) {
        const double g = psi.value * e[a] + radial * diff[a];
        adjoint_x(i, a) += g;
        adjoint_x(j, a) -= g;
      }
    }
  }
}

EqFlow::EqFlow(int particles, int dim, EqFlowConfig config)
    : Flow(particles, dim),
      config_{config},
      net_(config.num_centers, config.r_max, config.bandwidth),
      prior_(particles, dim) {
  if (config_.n_steps < 1) {
    throw InputError("eqflow: n_steps must be positive");
  }
  if (!(config_.t1 > config_.t0)) {
    throw InputError("eqflow: integration horizon needs t1 > t0");
  }
  params_.add("psi", static_cast<std::size_t>(net_.num_params()));
}

nlohmann::json EqFlow::hyperparams() const {
  return {{"K", particles()},
          {"D", dim()},
          {"n_steps", config_.n_steps},
          {"t0", config_.t0},
          {"t1", config_.t1},
          {"M", config_.num_centers},
          {"r_max", config_.r_max},
          {"bandwidth", net_.bandwidth()}};
}

void EqFlow::set_constant_psi(double c) {
  auto theta = params_.mutable_values();
  std::fill(theta.begin(), theta.end(), 0.0);
  theta[static_cast<std::size_t>(net_.num_centers())] = c;
}

Configuration EqFlow::sample_base(Rng& rng) const { return prior_.sample(rng); }

double EqFlow::base_log_prob(const Configuration& z) const { return prior_.log_prob(z); }

Configuration EqFlow::base_log_prob_grad(const Configuration& z) const { return -1.0 * z; }

FlowPass EqFlow::forward(const Configuration& z, bool record) const {
  return integrate(z, Direction::kForward, record);
}

FlowPass EqFlow::inverse(const Configuration& x, bool record) const {
  return integrate(x, Direction::kReverse, record);
}

FlowPass EqFlow::integrate(const Configuration& y0, Direction direction, bool record) const {
  if (y0.particles() != particles() || y0.dim() != dim()) {
    throw InputError("eqflow: configuration shape mismatch");
  }
  if (!y0.all_finite()) {
    throw InputError("eqflow: non-finite input configuration");
  }
  if (!(mean_norm(y0) <= kMeanFreeTol)) {
    throw InputError("eqflow: input configuration is not mean-free");
  }
  const double span = config_.t1 - config_.t0;
  const double h = (direction == Direction::kForward ? 1.0 : -1.0) * span / config_.n_steps;
  const auto theta = params_.values();

  std::unique_ptr<IntegrationTape> tape;
  if (record) {
    tape = std::make_unique<IntegrationTape>();
    stamp(*tape, direction);
    tape->step = h;
    tape->stages.reserve(static_cast<std::size_t>(config_.n_steps));
  }

  Configuration y = y0;
  double logdet = 0.0;
  for (int n = 0; n < config_.n_steps; ++n) {
    const RadialField f1 = radial_field(y, net_, theta);
    Configuration y2 = y;
    y2.add_scaled(0.5 * h, f1.velocity);
    const RadialField f2 = radial_field(y2, net_, theta);
    Configuration y3 = y;
    y3.add_scaled(0.5 * h, f2.velocity);
    const RadialField f3 = radial_field(y3, net_, theta);
    Configuration y4 = y;
    y4.add_scaled(h, f3.velocity);
    const RadialField f4 = radial_field(y4, net_, theta);

    if (tape) {
      tape->stages.push_back({y, std::move(y2), std::move(y3), std::move(y4)});
    }
    const double w = h / 6.0;
    y.add_scaled(w, f1.velocity);
    y.add_scaled(2.0 * w, f2.velocity);
    y.add_scaled(2.0 * w, f3.velocity);
    y.add_scaled(w, f4.velocity);
    logdet += w * (f1.divergence + 2.0 * f2.divergence + 2.0 * f3.divergence + f4.divergence);

    if (!y.all_finite() || !std::isfinite(logdet)) {
      throw DivergenceError("eqflow: non-finite state at integration step " + std::to_string(n));
    }
  }
  return {std::move(y), logdet, std::move(tape)};
}

void EqFlow::backward(const FlowTape& tape, const Configuration& adjoint_out,
                      double adjoint_logdet, std::span<double> grad) const {
  check_tape(tape);
  const auto* it = dynamic_cast<const IntegrationTape*>(&tape);
  if (it == nullptr || it->stages.size() != static_cast<std::size_t>(config_.n_steps)) {
    throw ContractError("eqflow: tape does not match this model");
  }
  if (grad.size() != params_.size()) {
    throw ContractError("eqflow: gradient buffer has the wrong size");
  }
  if (!adjoint_out.same_shape(it->stages.front()[0])) {
    throw ContractError("eqflow: adjoint shape does not match tape");
  }
  const double h = it->step;
  const auto theta = params_.values();
  const int k = particles();
  const int d = dim();

  Configuration ybar = adjoint_out;
  std::array<Configuration, 4> kbar;
  for (auto step = it->stages.rbegin(); step != it->stages.rend(); ++step) {
    const auto& stage = *step;
    for (int s = 0; s < 4; ++s) {
      kbar[static_cast<std::size_t>(s)] = (h / 6.0 * kRkWeights[static_cast<std::size_t>(s)]) * ybar;
    }
    Configuration prev = ybar;
    // Stage s input is y + c_s h k_{s-1} with c = (1/2, 1/2, 1).
    constexpr std::array<double, 4> kNodeScale = {0.0, 0.5, 0.5, 1.0};
    for (int s = 3; s >= 0; --s) {
      const auto us = static_cast<std::size_t>(s);
      Configuration adj(k, d);
      const double mbar = h / 6.0 * kRkWeights[us] * adjoint_logdet;
      radial_field_vjp(stage[us], net_, theta, kbar[us], mbar, adj, grad);
      prev += adj;
      if (s > 0) kbar[us - 1].add_scaled(kNodeScale[us] * h, adj);
    }
    ybar = std::move(prev);
  }
}

}  // namespace eqbg
