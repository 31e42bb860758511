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

#include "eqbg/param_store.hpp"

#include <algorithm>

#include "eqbg/error.hpp"

namespace eqbg {

const ParamStore::Segment& ParamStore::add(std::string name, std::size_t length) {
  for (const auto& s : segments_) {
    if (s.name == name) throw InputError("duplicate parameter segment '" + name + "'");
  }
  segments_.push_back({std::move(name), values_.size(), length});
  values_.resize(values_.size() + length, 0.0);
  grads_.resize(values_.size(), 0.0);
  ++version_;
  return segments_.back();
}

const ParamStore::Segment& ParamStore::segment(std::string_view name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return s;
  }
  throw InputError("unknown parameter segment '" + std::string(name) + "'");
}

std::span<double> ParamStore::mutable_values() noexcept {
  ++version_;
  return values_;
}

std::span<double> ParamStore::mutable_values(const Segment& s) noexcept {
  ++version_;
  return std::span<double>(values_).subspan(s.offset, s.length);
}

void ParamStore::assign(std::span<const double> values) {
  if (values.size() != values_.size()) {
    throw InputError("parameter count mismatch: expected " + std::to_string(values_.size()) +
                     ", got " + std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), values_.begin());
  ++version_;
}

void ParamStore::zero_grads() noexcept { std::fill(grads_.begin(), grads_.end(), 0.0); }

}  // namespace eqbg
