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

#include "eqbg/coupling_flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "eqbg/error.hpp"
#include "eqbg/prior.hpp"

namespace eqbg {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

struct MlpLayout {
  std::size_t w1, b1, w2, b2, w3, b3, total;
};

MlpLayout layout(int in, int hidden, int out) {
  MlpLayout l{};
  const auto i = static_cast<std::size_t>(in);
  const auto h = static_cast<std::size_t>(hidden);
  const auto o = static_cast<std::size_t>(out);
  l.w1 = 0;
  l.b1 = l.w1 + h * i;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.w3 = l.b2 + h;
  l.b3 = l.w3 + o * h;
  l.total = l.b3 + o;
  return l;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Mlp::Mlp(int in, int hidden, int out) : in_{in}, hidden_{hidden}, out_{out} {
  if (in < 1 || hidden < 1 || out < 1) {
    throw InputError("mlp: all widths must be positive");
  }
}

int Mlp::num_params() const noexcept { return static_cast<int>(layout(in_, hidden_, out_).total); }

void Mlp::forward(std::span<const double> theta, const Eigen::VectorXd& input, Cache& cache) const {
  const auto l = layout(in_, hidden_, out_);
  const double* p = theta.data();
  cache.input = input;
  cache.h1 = (ConstMatrixMap(p + l.w1, hidden_, in_) * input + ConstVectorMap(p + l.b1, hidden_))
                 .array()
                 .tanh()
                 .matrix();
  cache.h2 =
      (ConstMatrixMap(p + l.w2, hidden_, hidden_) * cache.h1 + ConstVectorMap(p + l.b2, hidden_))
          .array()
          .tanh()
          .matrix();
  cache.out = ConstMatrixMap(p + l.w3, out_, hidden_) * cache.h2 + ConstVectorMap(p + l.b3, out_);
}

Eigen::VectorXd Mlp::backward(std::span<const double> theta, const Cache& cache,
                              const Eigen::VectorXd& out_adjoint, std::span<double> grad) const {
  const auto l = layout(in_, hidden_, out_);
  const double* p = theta.data();
  double* g = grad.data();

  MatrixMap(g + l.w3, out_, hidden_).noalias() += out_adjoint * cache.h2.transpose();
  VectorMap(g + l.b3, out_) += out_adjoint;
  const Eigen::VectorXd a2 =
      ((ConstMatrixMap(p + l.w3, out_, hidden_).transpose() * out_adjoint).array() *
       (1.0 - cache.h2.array().square()))
          .matrix();
  MatrixMap(g + l.w2, hidden_, hidden_).noalias() += a2 * cache.h1.transpose();
  VectorMap(g + l.b2, hidden_) += a2;
  const Eigen::VectorXd a1 =
      ((ConstMatrixMap(p + l.w2, hidden_, hidden_).transpose() * a2).array() *
       (1.0 - cache.h1.array().square()))
          .matrix();
  MatrixMap(g + l.w1, hidden_, in_).noalias() += a1 * cache.input.transpose();
  VectorMap(g + l.b1, hidden_) += a1;
  return ConstMatrixMap(p + l.w1, hidden_, in_).transpose() * a1;
}

void Mlp::initialize(std::span<double> theta, Rng& rng) const {
  const auto l = layout(in_, hidden_, out_);
  std::fill(theta.begin(), theta.end(), 0.0);
  auto glorot = [&](std::size_t offset, int fan_out, int fan_in) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t k = 0; k < static_cast<std::size_t>(fan_out * fan_in); ++k) {
      theta[offset + k] = u(rng);
    }
  };
  glorot(l.w1, hidden_, in_);
  glorot(l.w2, hidden_, hidden_);
}

CouplingFlow::CouplingFlow(int particles, int dim, CouplingFlowConfig config)
    : Flow(particles, dim), config_{config} {
  build();
}

CouplingFlow::CouplingFlow(int particles, int dim, CouplingFlowConfig config, Rng& rng)
    : CouplingFlow(particles, dim, config) {
  for (int layer = 0; layer < config_.layers; ++layer) {
    const Mlp& net = nets_[static_cast<std::size_t>(layer % 2)];
    net.initialize(params_.mutable_values(scale_segments_[static_cast<std::size_t>(layer)]), rng);
    net.initialize(params_.mutable_values(shift_segments_[static_cast<std::size_t>(layer)]), rng);
  }
}

void CouplingFlow::build() {
  const int n = particles() * dim();
  if (n < 2) {
    throw InputError("coupling flow needs at least two coordinates");
  }
  if (config_.layers < 1 || config_.hidden < 1) {
    throw InputError("coupling flow needs positive layer count and hidden width");
  }
  if (!(config_.clamp > 0.0)) {
    throw InputError("coupling flow clamp must be positive");
  }
  fixed_.assign(2, {});
  moving_.assign(2, {});
  for (int parity = 0; parity < 2; ++parity) {
    for (int i = 0; i < n; ++i) {
      (i % 2 == parity ? fixed_ : moving_)[static_cast<std::size_t>(parity)].push_back(i);
    }
    nets_.emplace_back(static_cast<int>(fixed_[static_cast<std::size_t>(parity)].size()),
                       config_.hidden,
                       static_cast<int>(moving_[static_cast<std::size_t>(parity)].size()));
  }
  for (int layer = 0; layer < config_.layers; ++layer) {
    const auto size = static_cast<std::size_t>(nets_[static_cast<std::size_t>(layer % 2)].num_params());
    scale_segments_.push_back(params_.add("layer" + std::to_string(layer) + ".scale", size));
    shift_segments_.push_back(params_.add("layer" + std::to_string(layer) + ".shift", size));
  }
}

nlohmann::json CouplingFlow::hyperparams() const {
  return {{"K", particles()},
          {"D", dim()},
          {"L", config_.layers},
          {"hidden", config_.hidden},
          {"clamp", config_.clamp}};
}

const std::vector<int>& CouplingFlow::fixed_indices(int layer) const {
  return fixed_[static_cast<std::size_t>(layer % 2)];
}

const std::vector<int>& CouplingFlow::moving_indices(int layer) const {
  return moving_[static_cast<std::size_t>(layer % 2)];
}

Configuration CouplingFlow::sample_base(Rng& rng) const {
  return standard_normal(particles(), dim(), rng);
}

double CouplingFlow::base_log_prob(const Configuration& z) const {
  if (z.particles() != particles() || z.dim() != dim()) {
    throw InputError("realnvp: configuration shape mismatch");
  }
  return -0.5 * squared_norm(z) -
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi);
}

Configuration CouplingFlow::base_log_prob_grad(const Configuration& z) const { return -1.0 * z; }

FlowPass CouplingFlow::forward(const Configuration& z, bool record) const {
  return run(z, Direction::kForward, record);
}

FlowPass CouplingFlow::inverse(const Configuration& x, bool record) const {
  return run(x, Direction::kReverse, record);
}

FlowPass CouplingFlow::run(const Configuration& in, Direction direction, bool record) const {
  if (in.particles() != particles() || in.dim() != dim()) {
    throw InputError("realnvp: configuration shape mismatch");
  }
  std::unique_ptr<CouplingTape> tape;
  if (record) {
    tape = std::make_unique<CouplingTape>();
    stamp(*tape, direction);
    tape->records.reserve(static_cast<std::size_t>(config_.layers));
  }
  Configuration v = in;
  double logdet = 0.0;
  const bool fwd = direction == Direction::kForward;
  CouplingLayerRecord rec;
  for (int step = 0; step < config_.layers; ++step) {
    const int layer = fwd ? step : config_.layers - 1 - step;
    const auto ul = static_cast<std::size_t>(layer);
    const Mlp& net = nets_[ul % 2];
    const auto& fixed = fixed_indices(layer);
    const auto& moving = moving_indices(layer);

    Eigen::VectorXd cond(static_cast<Eigen::Index>(fixed.size()));
    for (std::size_t k = 0; k < fixed.size(); ++k) cond[static_cast<Eigen::Index>(k)] = v.flat()[static_cast<std::size_t>(fixed[k])];
    rec.layer = layer;
    net.forward(params_.values(scale_segments_[ul]), cond, rec.scale);
    net.forward(params_.values(shift_segments_[ul]), cond, rec.shift);
    rec.s = (config_.clamp * (rec.scale.out.array() / config_.clamp).tanh()).matrix();
    rec.t = rec.shift.out;
    rec.base_part.resize(static_cast<Eigen::Index>(moving.size()));

    for (std::size_t k = 0; k < moving.size(); ++k) {
      const auto ek = static_cast<Eigen::Index>(k);
      double& slot = v.flat()[static_cast<std::size_t>(moving[k])];
      if (fwd) {
        rec.base_part[ek] = slot;
        slot = slot * std::exp(rec.s[ek]) + rec.t[ek];
      } else {
        slot = (slot - rec.t[ek]) * std::exp(-rec.s[ek]);
        rec.base_part[ek] = slot;
      }
    }
    logdet += (fwd ? 1.0 : -1.0) * rec.s.sum();

    if (!v.all_finite() || !std::isfinite(logdet) || !finite(rec.s) || !finite(rec.t)) {
      throw DivergenceError("realnvp: non-finite value in coupling layer " + std::to_string(layer));
    }
    if (tape) tape->records.push_back(rec);
  }
  return {std::move(v), logdet, std::move(tape)};
}

void CouplingFlow::backward(const FlowTape& tape, const Configuration& adjoint_out,
                            double adjoint_logdet, std::span<double> grad) const {
  check_tape(tape);
  const auto* ct = dynamic_cast<const CouplingTape*>(&tape);
  if (ct == nullptr || ct->records.size() != static_cast<std::size_t>(config_.layers)) {
    throw ContractError("realnvp: tape does not match this model");
  }
  if (grad.size() != params_.size()) {
    throw ContractError("realnvp: gradient buffer has the wrong size");
  }
  if (adjoint_out.particles() != particles() || adjoint_out.dim() != dim()) {
    throw ContractError("realnvp: adjoint shape mismatch");
  }
  const bool fwd = ct->direction == Direction::kForward;
  Configuration bar = adjoint_out;
  for (auto it = ct->records.rbegin(); it != ct->records.rend(); ++it) {
    const CouplingLayerRecord& rec = *it;
    const auto ul = static_cast<std::size_t>(rec.layer);
    const Mlp& net = nets_[ul % 2];
    const auto& fixed = fixed_indices(rec.layer);
    const auto& moving = moving_indices(rec.layer);
    const auto nm = static_cast<Eigen::Index>(moving.size());

    Eigen::VectorXd s_bar(nm);
    Eigen::VectorXd t_bar(nm);
    for (Eigen::Index k = 0; k < nm; ++k) {
      double& slot = bar.flat()[static_cast<std::size_t>(moving[static_cast<std::size_t>(k)])];
      const double out_bar = slot;
      if (fwd) {
        // x = z e^s + t
        const double es = std::exp(rec.s[k]);
        slot = out_bar * es;
        s_bar[k] = out_bar * rec.base_part[k] * es + adjoint_logdet;
        t_bar[k] = out_bar;
      } else {
        // z = (x - t) e^{-s}, logdet -= s
        const double ems = std::exp(-rec.s[k]);
        slot = out_bar * ems;
        t_bar[k] = -out_bar * ems;
        s_bar[k] = -out_bar * rec.base_part[k] - adjoint_logdet;
      }
    }
    // s = clamp * tanh(raw / clamp)
    const Eigen::VectorXd raw_bar =
        (s_bar.array() * (1.0 - (rec.s.array() / config_.clamp).square())).matrix();

    const auto& sseg = scale_segments_[ul];
    const auto& tseg = shift_segments_[ul];
    const Eigen::VectorXd cond_bar_s =
        net.backward(params_.values(sseg), rec.scale, raw_bar, grad.subspan(sseg.offset, sseg.length));
    const Eigen::VectorXd cond_bar_t =
        net.backward(params_.values(tseg), rec.shift, t_bar, grad.subspan(tseg.offset, tseg.length));
    for (std::size_t k = 0; k < fixed.size(); ++k) {
      const auto ek = static_cast<Eigen::Index>(k);
      bar.flat()[static_cast<std::size_t>(fixed[k])] += cond_bar_s[ek] + cond_bar_t[ek];
    }
  }
}

}  // namespace eqbg
