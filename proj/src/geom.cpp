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

#include "eqbg/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>

#include "eqbg/error.hpp"

namespace eqbg {

Configuration::Configuration(int particles, int dim)
    : particles_{particles}, dim_{dim}, coords_(static_cast<std::size_t>(particles * dim), 0.0) {
  if (particles < 1 || dim < 1) {
    throw InputError("configuration needs at least one particle and one dimension");
  }
}

Configuration::Configuration(int particles, int dim, std::vector<double> coords)
    : particles_{particles}, dim_{dim}, coords_{std::move(coords)} {
  if (particles < 1 || dim < 1) {
    throw InputError("configuration needs at least one particle and one dimension");
  }
  if (coords_.size() != static_cast<std::size_t>(particles * dim)) {
    throw InputError("coordinate count " + std::to_string(coords_.size()) + " does not match " +
                     std::to_string(particles) + "x" + std::to_string(dim));
  }
}

Configuration Configuration::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) {
    throw InputError("from_rows: no rows");
  }
  const int dim = static_cast<int>(rows.begin()->size());
  std::vector<double> coords;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != dim) {
      throw InputError("from_rows: ragged rows");
    }
    coords.insert(coords.end(), r.begin(), r.end());
  }
  return {static_cast<int>(rows.size()), dim, std::move(coords)};
}

bool Configuration::all_finite() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); });
}

Configuration& Configuration::operator+=(const Configuration& other) {
  return add_scaled(1.0, other);
}

Configuration& Configuration::operator-=(const Configuration& other) {
  return add_scaled(-1.0, other);
}

Configuration& Configuration::operator*=(double s) {
  for (double& v : coords_) v *= s;
  return *this;
}

Configuration& Configuration::add_scaled(double s, const Configuration& other) {
  if (!same_shape(other)) {
    throw InputError("configuration shape mismatch");
  }
  for (std::size_t k = 0; k < coords_.size(); ++k) coords_[k] += s * other.coords_[k];
  return *this;
}

Configuration operator+(Configuration a, const Configuration& b) { return a += b; }
Configuration operator-(Configuration a, const Configuration& b) { return a -= b; }
Configuration operator*(double s, Configuration a) { return a *= s; }

double dot(const Configuration& a, const Configuration& b) {
  if (!a.same_shape(b)) {
    throw InputError("configuration shape mismatch");
  }
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

double squared_norm(const Configuration& x) { return dot(x, x); }

double max_abs_diff(const Configuration& a, const Configuration& b) {
  if (!a.same_shape(b)) {
    throw InputError("configuration shape mismatch");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  }
  return m;
}

void validate_configuration(const Configuration& x) {
  if (x.particles() < 2) {
    throw InputError("configuration needs K >= 2 particles");
  }
  if (x.dim() < 1 || x.dim() > 3) {
    throw InputError("spatial dimension must be 1, 2 or 3");
  }
  if (!x.all_finite()) {
    throw InputError("configuration has non-finite coordinates");
  }
}

namespace {

constexpr double kGroupTol = 1e-12;

void check_permutation(const Permutation& p) {
  std::vector<bool> seen(p.sigma.size(), false);
  for (int s : p.sigma) {
    if (s < 0 || s >= static_cast<int>(p.sigma.size()) || seen[static_cast<std::size_t>(s)]) {
      throw InputError("permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(s)] = true;
  }
}

void check_rotation(const Rotation& r) {
  const auto& m = r.matrix;
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InputError("rotation matrix must be square");
  }
  const auto n = m.rows();
  if ((m.transpose() * m - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > kGroupTol) {
    throw InputError("rotation matrix is not orthogonal");
  }
  if (std::abs(m.determinant() - 1.0) > kGroupTol) {
    throw InputError("rotation matrix must have determinant +1");
  }
}

}  // namespace

void validate_group_element(const GroupElement& g) {
  std::visit(
      [](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Permutation>) {
          check_permutation(e);
        } else if constexpr (std::is_same_v<T, Rotation>) {
          check_rotation(e);
        } else {
          for (double v : e.shift) {
            if (!std::isfinite(v)) throw InputError("translation has non-finite entries");
          }
        }
      },
      g);
}

Configuration apply_group(const GroupElement& g, const Configuration& x) {
  const int k = x.particles();
  const int d = x.dim();
  return std::visit(
      [&](const auto& e) -> Configuration {
        using T = std::decay_t<decltype(e)>;
        Configuration out(k, d);
        if constexpr (std::is_same_v<T, Permutation>) {
          if (static_cast<int>(e.sigma.size()) != k) {
            throw InputError("permutation size does not match particle count");
          }
          for (int i = 0; i < k; ++i) {
            const auto src = x.row(e.sigma[static_cast<std::size_t>(i)]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
          }
        } else if constexpr (std::is_same_v<T, Rotation>) {
          if (e.matrix.rows() != d || e.matrix.cols() != d) {
            throw InputError("rotation dimension does not match configuration");
          }
          for (int i = 0; i < k; ++i) {
            for (int a = 0; a < d; ++a) {
              double s = 0.0;
              for (int b = 0; b < d; ++b) s += e.matrix(a, b) * x(i, b);
              out(i, a) = s;
            }
          }
        } else {
          if (static_cast<int>(e.shift.size()) != d) {
            throw InputError("translation dimension does not match configuration");
          }
          for (int i = 0; i < k; ++i) {
            for (int a = 0; a < d; ++a) out(i, a) = x(i, a) + e.shift[static_cast<std::size_t>(a)];
          }
        }
        return out;
      },
      g);
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  if (g.index() != h.index()) {
    throw InputError("compose: group elements must be of the same variant");
  }
  if (const auto* pg = std::get_if<Permutation>(&g)) {
    const auto& ph = std::get<Permutation>(h);
    if (pg->sigma.size() != ph.sigma.size()) {
      throw InputError("compose: permutation sizes differ");
    }
    // apply(g, apply(h, x))_i = apply(h, x)_{sg(i)} = x_{sh(sg(i))}
    Permutation out{std::vector<int>(pg->sigma.size())};
    for (std::size_t i = 0; i < out.sigma.size(); ++i) {
      out.sigma[i] = ph.sigma[static_cast<std::size_t>(pg->sigma[i])];
    }
    return out;
  }
  if (const auto* rg = std::get_if<Rotation>(&g)) {
    const auto& rh = std::get<Rotation>(h);
    if (rg->matrix.rows() != rh.matrix.rows()) {
      throw InputError("compose: rotation dimensions differ");
    }
    return Rotation{rg->matrix * rh.matrix};
  }
  const auto& tg = std::get<Translation>(g);
  const auto& th = std::get<Translation>(h);
  if (tg.shift.size() != th.shift.size()) {
    throw InputError("compose: translation dimensions differ");
  }
  Translation out{tg.shift};
  for (std::size_t a = 0; a < out.shift.size(); ++a) out.shift[a] += th.shift[a];
  return out;
}

GroupElement random_group_element(GroupKind kind, int particles, int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind) {
    case GroupKind::kPermutation: {
      Permutation p{std::vector<int>(static_cast<std::size_t>(particles))};
      std::iota(p.sigma.begin(), p.sigma.end(), 0);
      // Fisher-Yates with an explicit uniform draw; std::shuffle is not
      // specified bit-for-bit across standard libraries.
      for (int i = particles - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(p.sigma[static_cast<std::size_t>(i)], p.sigma[static_cast<std::size_t>(pick(rng))]);
      }
      return p;
    }
    case GroupKind::kRotation: {
      Eigen::MatrixXd a(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) a(r, c) = normal(rng);
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int c = 0; c < dim; ++c) {
        if (r(c, c) < 0.0) q.col(c) *= -1.0;
      }
      if (q.determinant() < 0.0) q.col(0) *= -1.0;
      return Rotation{q};
    }
    case GroupKind::kTranslation: {
      Translation t{std::vector<double>(static_cast<std::size_t>(dim))};
      for (double& v : t.shift) v = normal(rng);
      return t;
    }
  }
  throw InputError("unknown group kind");
}

std::vector<double> center_of_mass(const Configuration& x) {
  std::vector<double> mu(static_cast<std::size_t>(x.dim()), 0.0);
  for (int i = 0; i < x.particles(); ++i) {
    for (int a = 0; a < x.dim(); ++a) mu[static_cast<std::size_t>(a)] += x(i, a);
  }
  for (double& m : mu) m /= x.particles();
  return mu;
}

Configuration remove_mean(const Configuration& x) {
  const auto mu = center_of_mass(x);
  Configuration out = x;
  for (int i = 0; i < x.particles(); ++i) {
    for (int a = 0; a < x.dim(); ++a) out(i, a) -= mu[static_cast<std::size_t>(a)];
  }
  return out;
}

double mean_norm(const Configuration& x) {
  double s = 0.0;
  for (double m : center_of_mass(x)) s += m * m;
  return std::sqrt(s);
}

Eigen::MatrixXd pairwise_distances(const Configuration& x) {
  const int k = x.particles();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double s = 0.0;
      for (int a = 0; a < x.dim(); ++a) {
        const double diff = x(i, a) - x(j, a);
        s += diff * diff;
      }
      dist(i, j) = dist(j, i) = std::sqrt(s);
    }
  }
  return dist;
}

}  // namespace eqbg
