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

#include "eqbg/flow.hpp"

#include "eqbg/error.hpp"

namespace eqbg {

FlowSample Flow::sample(Rng& rng) const {
  const Configuration z = sample_base(rng);
  FlowPass pass = forward(z);
  return {std::move(pass.out), base_log_prob(z) - pass.logdet};
}

double Flow::log_prob(const Configuration& x) const {
  const FlowPass pass = inverse(x);
  return base_log_prob(pass.out) + pass.logdet;
}

void Flow::check_tape(const FlowTape& tape) const {
  if (tape.owner != this) {
    throw ContractError("gradient tape was recorded by a different model");
  }
  if (tape.param_version != params_.version()) {
    throw ContractError("gradient tape is stale: parameters changed since it was recorded");
  }
}

void Flow::stamp(FlowTape& tape, Direction direction) const {
  tape.owner = this;
  tape.param_version = params_.version();
  tape.direction = direction;
}

}  // namespace eqbg
