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

#ifndef EQBG_COUPLING_FLOW_HPP
#define EQBG_COUPLING_FLOW_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eqbg/flow.hpp"

namespace eqbg {

/// Fully connected net in -> hidden -> hidden -> out with tanh hidden units
/// and a linear output. Weights are read from a parameter span laid out as
/// [W1 (hidden x in, row-major), b1, W2, b2, W3, b3].
class Mlp {
 public:
  struct Cache {
    Eigen::VectorXd input;
    Eigen::VectorXd h1;
    Eigen::VectorXd h2;
    Eigen::VectorXd out;
  };

  Mlp(int in, int hidden, int out);

  [[nodiscard]] int num_params() const noexcept;
  [[nodiscard]] int in() const noexcept { return in_; }
  [[nodiscard]] int out() const noexcept { return out_; }

  void forward(std::span<const double> theta, const Eigen::VectorXd& input, Cache& cache) const;

  /// Accumulates parameter gradients into grad and returns the input adjoint.
  Eigen::VectorXd backward(std::span<const double> theta, const Cache& cache,
                           const Eigen::VectorXd& out_adjoint, std::span<double> grad) const;

  /// Glorot-uniform hidden layers, zero output layer.
  void initialize(std::span<double> theta, Rng& rng) const;

 private:
  int in_;
  int hidden_;
  int out_;
};

struct CouplingFlowConfig {
  int layers = 8;
  int hidden = 64;
  double clamp = 5.0;  // |s| <= clamp via s = clamp * tanh(raw / clamp)
};

/// Per-layer record of a coupling pass.
struct CouplingLayerRecord {
  int layer = 0;
  Mlp::Cache scale;
  Mlp::Cache shift;
  Eigen::VectorXd s;
  Eigen::VectorXd t;
  /// Untransformed value of the moving half: the layer input on forward
  /// passes, the layer output on inverse passes.
  Eigen::VectorXd base_part;
};

struct CouplingTape final : FlowTape {
  std::vector<CouplingLayerRecord> records;  // processing order
};

/// Non-equivariant baseline: a stack of affine coupling layers on the
/// flattened K*D coordinate vector with a full standard normal base.
///
/// Layer l keeps the flat indices with parity l % 2 fixed and maps the others
/// as x = z * exp(s(z_fixed)) + t(z_fixed).
class CouplingFlow final : public Flow {
 public:
  /// Random hidden weights from rng; output layers start at zero so the
  /// initial map is the identity.
  CouplingFlow(int particles, int dim, CouplingFlowConfig config, Rng& rng);
  /// All parameters zero.
  CouplingFlow(int particles, int dim, CouplingFlowConfig config = {});

  [[nodiscard]] std::string_view kind() const noexcept override { return "realnvp"; }
  [[nodiscard]] nlohmann::json hyperparams() const override;
  [[nodiscard]] const CouplingFlowConfig& config() const noexcept { return config_; }

  [[nodiscard]] const std::vector<int>& fixed_indices(int layer) const;
  [[nodiscard]] const std::vector<int>& moving_indices(int layer) const;

  [[nodiscard]] Configuration sample_base(Rng& rng) const override;
  [[nodiscard]] double base_log_prob(const Configuration& z) const override;
  [[nodiscard]] Configuration base_log_prob_grad(const Configuration& z) const override;

  [[nodiscard]] FlowPass forward(const Configuration& z, bool record = false) const override;
  [[nodiscard]] FlowPass inverse(const Configuration& x, bool record = false) const override;

  void backward(const FlowTape& tape, const Configuration& adjoint_out, double adjoint_logdet,
                std::span<double> grad) const override;

 private:
  void build();
  FlowPass run(const Configuration& in, Direction direction, bool record) const;

  CouplingFlowConfig config_;
  std::vector<Mlp> nets_;                 // per parity; scale and shift nets share shapes
  std::vector<std::vector<int>> fixed_;   // per parity
  std::vector<std::vector<int>> moving_;  // per parity
  std::vector<ParamStore::Segment> scale_segments_;
  std::vector<ParamStore::Segment> shift_segments_;
};

}  // namespace eqbg

#endif  // EQBG_COUPLING_FLOW_HPP
