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

#ifndef EQBG_GEOM_HPP
#define EQBG_GEOM_HPP

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace eqbg {

using Rng = std::mt19937_64;

/// K particles in D dimensions, stored row-major with the particle index outer.
///
/// The same layout is used for any per-particle vector field over a
/// configuration (forces, velocities, adjoints).
class Configuration {
 public:
  Configuration() = default;
  Configuration(int particles, int dim);
  Configuration(int particles, int dim, std::vector<double> coords);

  /// Builds a configuration from explicit particle rows, e.g. {{0, 0}, {3, 4}}.
  static Configuration from_rows(std::initializer_list<std::initializer_list<double>> rows);

  [[nodiscard]] int particles() const noexcept { return particles_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return coords_.size(); }

  double& operator()(int i, int d) { return coords_[static_cast<std::size_t>(i * dim_ + d)]; }
  double operator()(int i, int d) const { return coords_[static_cast<std::size_t>(i * dim_ + d)]; }

  [[nodiscard]] std::span<double> row(int i) {
    return {coords_.data() + static_cast<std::ptrdiff_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  [[nodiscard]] std::span<const double> row(int i) const {
    return {coords_.data() + static_cast<std::ptrdiff_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  [[nodiscard]] std::span<double> flat() noexcept { return coords_; }
  [[nodiscard]] std::span<const double> flat() const noexcept { return coords_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return coords_; }

  [[nodiscard]] bool same_shape(const Configuration& other) const noexcept {
    return particles_ == other.particles_ && dim_ == other.dim_;
  }
  [[nodiscard]] bool all_finite() const noexcept;

  Configuration& operator+=(const Configuration& other);
  Configuration& operator-=(const Configuration& other);
  Configuration& operator*=(double s);
  /// this += s * other
  Configuration& add_scaled(double s, const Configuration& other);

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  int particles_ = 0;
  int dim_ = 0;
  std::vector<double> coords_;
};

Configuration operator+(Configuration a, const Configuration& b);
Configuration operator-(Configuration a, const Configuration& b);
Configuration operator*(double s, Configuration a);

/// Frobenius inner product of two same-shape arrays.
double dot(const Configuration& a, const Configuration& b);
double squared_norm(const Configuration& x);
/// Largest absolute coordinate difference.
double max_abs_diff(const Configuration& a, const Configuration& b);

/// Throws InputError unless K >= 2, 1 <= D <= 3 and all coordinates are finite.
void validate_configuration(const Configuration& x);

// ---------------------------------------------------------------------------
// Symmetry group actions

/// Output row i is input row sigma[i].
struct Permutation {
  std::vector<int> sigma;
};

/// Proper rotation, applied as x_i -> R x_i.
struct Rotation {
  Eigen::MatrixXd matrix;
};

/// Uniform shift x_i -> x_i + v.
struct Translation {
  std::vector<double> shift;
};

using GroupElement = std::variant<Permutation, Rotation, Translation>;

enum class GroupKind { kPermutation, kRotation, kTranslation };

/// Throws InputError if `g` violates its invariants (bijection, orthogonal with det +1).
void validate_group_element(const GroupElement& g);

Configuration apply_group(const GroupElement& g, const Configuration& x);

/// Group product gh, defined so that apply(gh, x) == apply(g, apply(h, x)).
/// Both elements must be of the same variant.
GroupElement compose(const GroupElement& g, const GroupElement& h);

/// Uniform permutation, Haar-ish rotation (QR of a Gaussian matrix with sign
/// and determinant fixed), or standard normal translation.
GroupElement random_group_element(GroupKind kind, int particles, int dim, Rng& rng);

// ---------------------------------------------------------------------------

/// Arithmetic mean of the particle positions.
std::vector<double> center_of_mass(const Configuration& x);

/// x minus its center of mass.
Configuration remove_mean(const Configuration& x);

/// Euclidean norm of the center of mass.
double mean_norm(const Configuration& x);

/// Symmetric K x K matrix of Euclidean distances.
Eigen::MatrixXd pairwise_distances(const Configuration& x);

}  // namespace eqbg

#endif  // EQBG_GEOM_HPP
