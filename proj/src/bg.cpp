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

#include "eqbg/bg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqbg/error.hpp"
#include "eqbg/parallel.hpp"

namespace eqbg {

std::vector<WeightedSample> generate(const Flow& flow, const EnergyModel& energy, int n, Rng& rng) {
  if (n < 0) {
    throw InputError("generate: n must be non-negative");
  }
  std::vector<Configuration> base;
  base.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) base.push_back(flow.sample_base(rng));

  std::vector<WeightedSample> out(static_cast<std::size_t>(n));
  parallel_for(base.size(), [&](std::size_t i) {
    const FlowPass pass = flow.forward(base[i]);
    WeightedSample& s = out[i];
    s.x = pass.out;
    s.log_q = flow.base_log_prob(base[i]) - pass.logdet;
    s.u = energy.energy(s.x);
    if (std::isfinite(s.u)) {
      s.log_w = -s.u - s.log_q;
    } else {
      s.flagged = true;
      s.log_w = -std::numeric_limits<double>::infinity();
    }
  });
  return out;
}

namespace {

double max_finite(std::span<const double> log_w) {
  double m = -std::numeric_limits<double>::infinity();
  for (double l : log_w) {
    if (std::isfinite(l)) m = std::max(m, l);
  }
  if (!std::isfinite(m)) {
    throw InputError("no sample has a finite importance weight");
  }
  return m;
}

std::vector<double> log_weights(std::span<const WeightedSample> samples) {
  std::vector<double> lw;
  lw.reserve(samples.size());
  for (const auto& s : samples) lw.push_back(s.log_w);
  return lw;
}

}  // namespace

double effective_sample_size(std::span<const double> log_w) {
  const double m = max_finite(log_w);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double l : log_w) {
    const double w = std::isfinite(l) ? std::exp(l - m) : 0.0;
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

double effective_sample_size(std::span<const WeightedSample> samples) {
  return effective_sample_size(log_weights(samples));
}

ReweightedEstimate reweight(std::span<const WeightedSample> samples,
                            const std::function<double(const Configuration&)>& observable) {
  const auto lw = log_weights(samples);
  const double m = max_finite(lw);
  std::vector<double> w(samples.size());
  std::vector<double> f(samples.size());
  double sum_w = 0.0;
  double sum_wf = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    w[i] = std::isfinite(lw[i]) ? std::exp(lw[i] - m) : 0.0;
    if (w[i] == 0.0) continue;
    f[i] = observable(samples[i].x);
    sum_w += w[i];
    sum_wf += w[i] * f[i];
  }
  ReweightedEstimate est;
  est.mean = sum_wf / sum_w;
  double var = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double dev = f[i] - est.mean;
    var += w[i] * w[i] * dev * dev;
    sum_sq += w[i] * w[i];
  }
  est.std_error = std::sqrt(var) / sum_w;
  est.ess = sum_w * sum_w / sum_sq;
  return est;
}

double reweighted_expectation(std::span<const WeightedSample> samples,
                              const std::function<double(const Configuration&)>& observable) {
  return reweight(samples, observable).mean;
}

std::vector<double> pair_signature(const Configuration& x) {
  const Eigen::MatrixXd dist = pairwise_distances(x);
  std::vector<double> sig;
  for (int i = 0; i < x.particles(); ++i) {
    for (int j = i + 1; j < x.particles(); ++j) sig.push_back(dist(i, j));
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

namespace {

// Removes the per-dimension mean from a flattened K x D vector.
void project_mean_free(Eigen::VectorXd& v, int k, int d) {
  for (int a = 0; a < d; ++a) {
    double mean = 0.0;
    for (int i = 0; i < k; ++i) mean += v[i * d + a];
    mean /= k;
    for (int i = 0; i < k; ++i) v[i * d + a] -= mean;
  }
}

Eigen::VectorXd as_vector(const Configuration& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.values().data(), static_cast<Eigen::Index>(c.size()));
}

}  // namespace

MinimizeResult minimize_energy(const Configuration& x0, const EnergyModel& energy,
                               const MinimizeOptions& options) {
  validate_configuration(x0);
  const int k = x0.particles();
  const int d = x0.dim();
  const auto n = static_cast<Eigen::Index>(x0.size());
  constexpr double kMinDamping = 1e-10;
  constexpr double kMaxDamping = 1e14;
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  Configuration x = x0;
  double u = energy.energy(x);
  if (!std::isfinite(u)) {
    throw InputError("minimize_energy: start has non-finite energy");
  }
  Eigen::VectorXd g = as_vector(energy.gradient(x));
  project_mean_free(g, k, d);

  // P = I - (1/K) 1 1^T (x) I_D
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int a = 0; a < d; ++a) proj(i * d + a, j * d + a) -= 1.0 / k;
    }
  }

  double mu = options.initial_damping;
  int iter = 0;
  bool converged = g.norm() < options.grad_tol;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    const Eigen::MatrixXd h = proj * energy.hessian(x) * proj;
    bool accepted = false;
    while (!accepted && mu <= kMaxDamping) {
      Eigen::LLT<Eigen::MatrixXd> llt(h + mu * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() != Eigen::Success) {
        mu = std::max(mu * 10.0, kMinDamping);
        continue;
      }
      Eigen::VectorXd step = llt.solve(-g);
      project_mean_free(step, k, d);
      Configuration trial = x;
      for (Eigen::Index q = 0; q < n; ++q) trial.flat()[static_cast<std::size_t>(q)] += step[q];
      const double u_trial = energy.energy(trial);
      Eigen::VectorXd g_trial;
      bool ok = std::isfinite(u_trial);
      if (ok) {
        try {
          g_trial = as_vector(energy.gradient(trial));
          project_mean_free(g_trial, k, d);
        } catch (const SingularityError&) {
          ok = false;
        }
      }
      // Below rounding, the energy cannot resolve progress; accept if the
      // gradient shrinks instead.
      const double round = 4.0 * kEps * (1.0 + std::abs(u));
      if (ok && (u_trial < u || (u_trial <= u + round && g_trial.norm() < g.norm()))) {
        x = std::move(trial);
        u = std::min(u, u_trial);
        g = std::move(g_trial);
        mu = std::max(mu / 10.0, kMinDamping);
        accepted = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
    converged = g.norm() < options.grad_tol;
  }

  MinimizeResult result;
  result.converged = converged;
  result.record.x_min = x;
  result.record.u_min = energy.energy(x);
  result.record.signature = pair_signature(x);
  result.record.grad_norm = g.norm();
  result.record.iterations = iter;
  return result;
}

bool same_signature(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

std::vector<MinimumRecord> distinct_minima(std::span<const MinimumRecord> records, double tol) {
  std::vector<const MinimumRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->u_min < b->u_min; });
  std::vector<MinimumRecord> out;
  for (const MinimumRecord* r : order) {
    auto match = std::find_if(out.begin(), out.end(), [&](const MinimumRecord& rep) {
      return same_signature(rep.signature, r->signature, tol);
    });
    if (match == out.end()) {
      out.push_back(*r);
    } else {
      match->n_hits += r->n_hits;
    }
  }
  return out;
}

}  // namespace eqbg
