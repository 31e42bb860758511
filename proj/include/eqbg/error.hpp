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

#ifndef EQBG_ERROR_HPP
#define EQBG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace eqbg {

/// Invalid argument shape, range or value supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration file failed schema validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical quantity became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method exhausted its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two particles coincide where a distance derivative is required.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API misuse, e.g. a gradient tape that does not match the model.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace eqbg

#endif  // EQBG_ERROR_HPP
