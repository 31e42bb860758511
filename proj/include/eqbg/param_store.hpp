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

#ifndef EQBG_PARAM_STORE_HPP
#define EQBG_PARAM_STORE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eqbg {

/// Flat learnable parameter vector split into named, contiguous segments,
/// with a same-shape gradient accumulator.
///
/// Segments are appended in order and always tile the vector. Every mutable
/// access to the values bumps version(), which gradient tapes use to detect
/// that they were recorded against different parameters.
class ParamStore {
 public:
  struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
  };

  /// Appends a zero-initialized segment and returns it.
  const Segment& add(std::string name, std::size_t length);

  [[nodiscard]] const Segment& segment(std::string_view name) const;
  [[nodiscard]] const std::vector<Segment>& segments() const noexcept { return segments_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<const double> values(const Segment& s) const noexcept {
    return std::span<const double>(values_).subspan(s.offset, s.length);
  }
  [[nodiscard]] std::span<double> mutable_values() noexcept;
  [[nodiscard]] std::span<double> mutable_values(const Segment& s) noexcept;
  /// Replaces all values; the size must match.
  void assign(std::span<const double> values);

  [[nodiscard]] std::span<double> grads() noexcept { return grads_; }
  [[nodiscard]] std::span<const double> grads() const noexcept { return grads_; }
  void zero_grads() noexcept;

  [[nodiscard]] std::uint64_t version() const noexcept { return version_; }

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::uint64_t version_ = 0;
};

}  // namespace eqbg

#endif  // EQBG_PARAM_STORE_HPP
