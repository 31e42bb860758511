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

#ifndef EQBG_FLOW_HPP
#define EQBG_FLOW_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include <json.hpp>

#include "eqbg/geom.hpp"
#include "eqbg/param_store.hpp"

namespace eqbg {

enum class Direction { kForward, kReverse };

/// Record of one forward or inverse pass, consumed by Flow::backward.
struct FlowTape {
  virtual ~FlowTape() = default;

  const void* owner = nullptr;
  std::uint64_t param_version = 0;
  Direction direction = Direction::kForward;
};

/// Output of a flow pass. logdet is log|det d(out)/d(in)| of the map that was
/// applied, so forward and inverse logdets of the same point cancel.
struct FlowPass {
  Configuration out;
  double logdet = 0.0;
  std::unique_ptr<FlowTape> tape;
};

struct FlowSample {
  Configuration x;
  double log_q = 0.0;
};

/// Exact-likelihood bijection from a base density onto configuration space.
///
/// forward maps base samples z to configurations x; inverse maps back.
/// log q(x) = base_log_prob(inverse(x).out) + inverse(x).logdet.
class Flow {
 public:
  Flow(int particles, int dim) : particles_{particles}, dim_{dim} {}
  virtual ~Flow() = default;
  Flow(const Flow&) = default;
  Flow& operator=(const Flow&) = default;
  Flow(Flow&&) = default;
  Flow& operator=(Flow&&) = default;

  [[nodiscard]] virtual std::string_view kind() const noexcept = 0;
  [[nodiscard]] virtual nlohmann::json hyperparams() const = 0;

  [[nodiscard]] int particles() const noexcept { return particles_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }

  [[nodiscard]] ParamStore& params() noexcept { return params_; }
  [[nodiscard]] const ParamStore& params() const noexcept { return params_; }

  [[nodiscard]] virtual Configuration sample_base(Rng& rng) const = 0;
  [[nodiscard]] virtual double base_log_prob(const Configuration& z) const = 0;
  /// Gradient of base_log_prob with respect to z.
  [[nodiscard]] virtual Configuration base_log_prob_grad(const Configuration& z) const = 0;

  [[nodiscard]] virtual FlowPass forward(const Configuration& z, bool record = false) const = 0;
  [[nodiscard]] virtual FlowPass inverse(const Configuration& x, bool record = false) const = 0;

  /// Accumulates d(<adjoint_out, out> + adjoint_logdet * logdet) / dtheta into
  /// grad for the pass recorded in tape. Throws ContractError if the tape came
  /// from another model or from different parameter values.
  virtual void backward(const FlowTape& tape, const Configuration& adjoint_out,
                        double adjoint_logdet, std::span<double> grad) const = 0;

  /// z from the base, pushed forward; log_q = base_log_prob(z) - logdet.
  [[nodiscard]] FlowSample sample(Rng& rng) const;
  [[nodiscard]] double log_prob(const Configuration& x) const;

 protected:
  void check_tape(const FlowTape& tape) const;
  void stamp(FlowTape& tape, Direction direction) const;

  ParamStore params_;

 private:
  int particles_;
  int dim_;
};

}  // namespace eqbg

#endif  // EQBG_FLOW_HPP
