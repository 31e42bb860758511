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

#include "eqbg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "eqbg/coupling_flow.hpp"
#include "eqbg/eqflow.hpp"
#include "eqbg/error.hpp"
#include "eqbg/parallel.hpp"

namespace eqbg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Short names used in reports.
std::string label(const std::string& type) { return type == "eqflow" ? "eqbg" : "nbg"; }

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

void write_histogram_csv(const fs::path& path, const Histogram1D& h) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "bin_lo,bin_hi,count\n";
  const double w = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << format_real(h.lo + w * static_cast<double>(b)) << ','
        << format_real(h.lo + w * static_cast<double>(b + 1)) << ',' << h.counts[b] << '\n';
  }
}

void write_histogram2d_csv(const fs::path& path, const Histogram2D& h) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "x_lo,y_lo,count\n";
  const double w = (h.hi - h.lo) / h.bins;
  for (int bx = 0; bx < h.bins; ++bx) {
    for (int by = 0; by < h.bins; ++by) {
      out << format_real(h.lo + w * bx) << ',' << format_real(h.lo + w * by) << ','
          << h.counts[static_cast<std::size_t>(bx * h.bins + by)] << '\n';
    }
  }
}

ModelOutcome train_model(const std::string& type, const RunConfig& cfg, const EnergyModel& energy,
                         std::span<const Configuration> data, std::unique_ptr<Flow>& flow,
                         const Logger& log) {
  flow = make_flow(type, cfg);
  say(log, "training " + label(type) + " (" + std::to_string(flow->params().size()) +
               " parameters) on " + std::to_string(data.size()) + " configurations");
  const int every = std::max(1, (cfg.train.n_iters_ml + cfg.train.n_iters_mixed) / 10);
  ModelOutcome outcome;
  outcome.model = type;
  outcome.train = train_loop(*flow, energy, data, cfg.train, [&](const LossRecord& r) {
    if (r.iter % every == 0) {
      say(log, "  " + label(type) + " iter " + std::to_string(r.iter) + " [" + r.phase +
                   "] nll=" + format_real(r.nll) + (r.kl ? " kl=" + format_real(*r.kl) : ""));
    }
  });
  if (outcome.train.aborted) say(log, "  " + label(type) + " aborted: " + outcome.train.message);
  outcome.checkpoint = make_checkpoint(*flow, cfg.train.seed, outcome.train.history, to_json(cfg.train));
  return outcome;
}

std::vector<double> first_particle(std::span<const Configuration> xs, int axis) {
  std::vector<double> v;
  v.reserve(xs.size());
  for (const auto& x : xs) v.push_back(x(0, axis));
  return v;
}

}  // namespace

std::unique_ptr<Flow> make_flow(const std::string& type, const RunConfig& cfg) {
  const int k = cfg.system.particles;
  const int d = cfg.system.dim;
  if (type == "eqflow") {
    return std::make_unique<EqFlow>(k, d, cfg.model.eqflow);
  }
  if (type == "realnvp") {
    Rng rng(cfg.stream_seed("init_realnvp"));
    return std::make_unique<CouplingFlow>(k, d, cfg.model.realnvp, rng);
  }
  throw ConfigError("unknown model type '" + type + "'");
}

double mean_nll(const Flow& flow, std::span<const Configuration> data) {
  if (data.empty()) {
    throw InputError("mean_nll: empty dataset");
  }
  std::vector<double> nll(data.size());
  parallel_for(data.size(), [&](std::size_t i) { nll[i] = -flow.log_prob(data[i]); });
  double s = 0.0;
  for (double v : nll) s += v;
  return s / static_cast<double>(data.size());
}

InvarianceProbe probe_invariance(const Flow& flow, std::span<const Configuration> data,
                                 int n_actions, Rng& rng) {
  if (data.empty()) {
    throw InputError("probe_invariance: empty dataset");
  }
  InvarianceProbe probe;
  probe.n_actions = n_actions;
  const std::array<std::pair<GroupKind, const char*>, 3> kinds = {
      {{GroupKind::kPermutation, "permutation"},
       {GroupKind::kRotation, "rotation"},
       {GroupKind::kTranslation, "translation"}}};
  for (const auto& [kind, name] : kinds) {
    std::vector<GroupElement> actions;
    for (int n = 0; n < n_actions; ++n) {
      actions.push_back(random_group_element(kind, flow.particles(), flow.dim(), rng));
    }
    std::vector<double> delta(actions.size());
    parallel_for(actions.size(), [&](std::size_t n) {
      const Configuration x = remove_mean(data[n % data.size()]);
      const Configuration gx = remove_mean(apply_group(actions[n], x));
      delta[n] = std::abs(flow.log_prob(gx) - flow.log_prob(x));
    });
    probe.max_abs_delta[name] = delta.empty() ? 0.0 : *std::max_element(delta.begin(), delta.end());
  }
  return probe;
}

MinimumRecord reference_minimum(const RunConfig& cfg, const EnergyModel& energy) {
  const Configuration start =
      cfg.experiment.start ? *cfg.experiment.start
                           : default_start(cfg.system.particles, cfg.system.dim, cfg.system.energy);
  MinimizeResult res = minimize_energy(remove_mean(start), energy);
  if (!res.converged) {
    throw ConvergenceError("reference minimum: minimizer did not converge (|grad| = " +
                           format_real(res.record.grad_norm) + ")");
  }
  return res.record;
}

Configuration chain_start(const RunConfig& cfg, const EnergyModel& energy) {
  if (cfg.mcmc.init.size() != 0) return cfg.mcmc.init;
  Configuration x = reference_minimum(cfg, energy).x_min;
  Rng rng(cfg.stream_seed("mcmc_init"));
  std::normal_distribution<double> normal(0.0, cfg.experiment.noise_scale);
  for (double& v : x.flat()) v += normal(rng);
  return x;
}

Histogram1D histogram(std::span<const double> values, double lo, double hi, int bins) {
  Histogram1D h{lo, hi, std::vector<int>(static_cast<std::size_t>(bins), 0)};
  const double w = (hi - lo) / bins;
  for (double v : values) {
    if (!std::isfinite(v) || v < lo || v > hi) continue;
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / w));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

Histogram2D histogram2d(std::span<const double> xs, std::span<const double> ys, double lo,
                        double hi, int bins) {
  Histogram2D h{lo, hi, bins, std::vector<int>(static_cast<std::size_t>(bins * bins), 0)};
  const double w = (hi - lo) / bins;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!(xs[i] >= lo && xs[i] <= hi && ys[i] >= lo && ys[i] <= hi)) continue;
    const int bx = std::min(bins - 1, static_cast<int>((xs[i] - lo) / w));
    const int by = std::min(bins - 1, static_cast<int>((ys[i] - lo) / w));
    ++h.counts[static_cast<std::size_t>(bx * bins + by)];
  }
  return h;
}

json to_json(const Histogram1D& h) { return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}}; }

json to_json(const Histogram2D& h) {
  return {{"lo", h.lo}, {"hi", h.hi}, {"bins", h.bins}, {"counts", h.counts}};
}

Experiment1Result run_experiment1(const RunConfig& cfg, const fs::path& out_dir, const Logger& log) {
  const DoubleWellEnergy energy(cfg.system.energy);
  Experiment1Result result;

  McmcConfig mcmc = cfg.mcmc;
  mcmc.init = chain_start(cfg, energy);
  say(log, "sampling MCMC trajectory (" + std::to_string(mcmc.n_samples) + " samples)");
  const ChainResult chain = run_chain(mcmc, energy);
  result.acceptance_rate = chain.acceptance_rate();
  const auto n_train = static_cast<std::size_t>(
      std::floor(cfg.experiment.split_fraction * static_cast<double>(chain.samples.size())));
  if (n_train == 0 || n_train >= chain.samples.size()) {
    throw ConfigError("experiment1: split leaves an empty train or test set");
  }
  const std::span<const Configuration> all(chain.samples);
  const auto train = all.subspan(0, n_train);
  const auto test = all.subspan(n_train);
  result.n_train = train.size();
  result.n_test = test.size();
  say(log, "acceptance rate " + format_real(result.acceptance_rate) + ", train " +
               std::to_string(train.size()) + ", test " + std::to_string(test.size()));

  json metrics = {{"experiment", "experiment1"},
                  {"seed", cfg.seed},
                  {"acceptance_rate", result.acceptance_rate},
                  {"n_train", result.n_train},
                  {"n_test", result.n_test}};

  std::map<std::string, std::vector<WeightedSample>> generated;
  for (const std::string type : {"realnvp", "eqflow"}) {
    std::unique_ptr<Flow> flow;
    ModelOutcome outcome = train_model(type, cfg, energy, train, flow, log);
    const double nll_train = mean_nll(*flow, train);
    const double nll_test = mean_nll(*flow, test);
    say(log, label(type) + ": nll_train=" + format_real(nll_train) +
                 " nll_test=" + format_real(nll_test));
    result.nll[label(type)] = {nll_train, nll_test};
    metrics[label(type)] = {{"nll_train", nll_train},
                            {"nll_test", nll_test},
                            {"aborted", outcome.train.aborted}};
    Rng rng(cfg.stream_seed("generate_" + type));
    generated[label(type)] = generate(*flow, energy, cfg.experiment.n_generate, rng);
    result.models.push_back(std::move(outcome));
  }

  // Plot data: energy histograms and the marginal of the first particle.
  const int bins = cfg.experiment.histogram_bins;
  std::map<std::string, std::vector<double>> energies{{"data", chain.energies}};
  std::map<std::string, std::vector<Configuration>> configs{
      {"data", std::vector<Configuration>(chain.samples.begin(), chain.samples.end())}};
  for (const auto& [name, samples] : generated) {
    for (const auto& s : samples) {
      energies[name].push_back(s.u);
      configs[name].push_back(s.x);
    }
  }
  double e_lo = std::numeric_limits<double>::infinity();
  for (double u : chain.energies) e_lo = std::min(e_lo, u);
  const double e_hi = e_lo + 100.0;
  double x_abs = 0.0;
  for (const auto& x : chain.samples) x_abs = std::max({x_abs, std::abs(x(0, 0)), std::abs(x(0, 1 % x.dim()))});
  x_abs = std::ceil(x_abs + 1.0);

  json hist_energy = json::object();
  json hist_x1 = json::object();
  std::map<std::string, std::pair<Histogram1D, Histogram2D>> hists;
  for (const auto& [name, es] : energies) {
    const auto& cs = configs[name];
    const auto xs = first_particle(cs, 0);
    const auto ys = first_particle(cs, cfg.system.dim > 1 ? 1 : 0);
    hists[name] = {histogram(es, e_lo, e_hi, bins), histogram2d(xs, ys, -x_abs, x_abs, bins)};
    hist_energy[name] = to_json(hists[name].first);
    hist_x1[name] = to_json(hists[name].second);
  }
  metrics["histograms"] = {{"energy", hist_energy}, {"x1", hist_x1}};
  result.metrics = metrics;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_dataset_csv(out_dir / "trajectory.csv", chain.samples);
    write_json(out_dir / "trajectory_meta.json",
               {{"seed", mcmc.seed},
                {"acceptance_rate", result.acceptance_rate},
                {"steps", chain.steps},
                {"accepted", chain.accepted},
                {"energy_min", *std::min_element(chain.energies.begin(), chain.energies.end())},
                {"energy_max", *std::max_element(chain.energies.begin(), chain.energies.end())}});
    for (const auto& m : result.models) {
      save_checkpoint(out_dir / (label(m.model) + "_checkpoint.json"), m.checkpoint);
      write_loss_csv(out_dir / (label(m.model) + "_loss.csv"), m.train.history);
    }
    for (const auto& [name, h] : hists) {
      write_histogram_csv(out_dir / ("energy_hist_" + name + ".csv"), h.first);
      write_histogram2d_csv(out_dir / ("x1_hist_" + name + ".csv"), h.second);
    }
    for (const auto& [name, samples] : generated) {
      write_samples_csv(out_dir / ("samples_" + name + ".csv"), samples);
    }
    write_json(out_dir / "metrics.json", metrics);
  }
  return result;
}

MinimaSummary summarize_minima(std::span<const Configuration> samples, const EnergyModel& energy,
                               std::span<const double> training_signature, double tol) {
  std::vector<MinimizeResult> results(samples.size());
  std::vector<char> valid(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t i) {
    try {
      results[i] = minimize_energy(samples[i], energy);
      valid[i] = results[i].converged && results[i].record.grad_norm < 1e-6;
    } catch (const std::exception&) {
      valid[i] = 0;
    }
  });
  MinimaSummary summary;
  summary.n_samples = static_cast<int>(samples.size());
  std::vector<MinimumRecord> ok;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (valid[i]) {
      ok.push_back(std::move(results[i].record));
    } else {
      ++summary.n_failed;
    }
  }
  summary.distinct = distinct_minima(ok, tol);
  for (const auto& m : summary.distinct) {
    if (!same_signature(m.signature, training_signature, tol)) ++summary.n_new;
  }
  return summary;
}

Experiment2Result run_experiment2(const RunConfig& cfg, const fs::path& out_dir, const Logger& log) {
  const DoubleWellEnergy energy(cfg.system.energy);
  Experiment2Result result;
  result.training_minimum = reference_minimum(cfg, energy);
  say(log, "training minimum u=" + format_real(result.training_minimum.u_min));

  Rng data_rng(cfg.stream_seed("perturb"));
  const Dataset data = perturb_minimum(result.training_minimum.x_min, energy,
                                       cfg.experiment.noise_scale,
                                       cfg.experiment.n_train_samples, data_rng);

  json models = json::object();
  std::map<std::string, std::vector<WeightedSample>> generated;
  for (const std::string type : {"realnvp", "eqflow"}) {
    std::unique_ptr<Flow> flow;
    ModelOutcome outcome = train_model(type, cfg, energy, data, flow, log);
    Rng rng(cfg.stream_seed("generate_" + type));
    auto samples = generate(*flow, energy, cfg.experiment.n_generate, rng);
    std::vector<Configuration> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(s.x);
    MinimaSummary summary =
        summarize_minima(xs, energy, result.training_minimum.signature, cfg.experiment.minima_tol);
    say(log, label(type) + ": " + std::to_string(summary.distinct.size()) + " distinct minima, " +
                 std::to_string(summary.n_new) + " new, " + std::to_string(summary.n_failed) +
                 " failed minimizations");
    models[label(type)] = {{"n_distinct", summary.distinct.size()},
                           {"n_new", summary.n_new},
                           {"n_failed", summary.n_failed},
                           {"n_samples", summary.n_samples},
                           {"aborted", outcome.train.aborted},
                           {"minima", minima_to_json(summary.distinct)}};
    result.minima[label(type)] = std::move(summary);
    generated[label(type)] = std::move(samples);
    result.models.push_back(std::move(outcome));
  }

  result.report = {{"experiment", "experiment2"},
                   {"seed", cfg.seed},
                   {"training_minimum",
                    {{"coords", result.training_minimum.x_min.values()},
                     {"u_min", result.training_minimum.u_min},
                     {"signature", result.training_minimum.signature}}},
                   {"models", models}};

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_dataset_csv(out_dir / "training_set.csv", data);
    for (const auto& m : result.models) {
      save_checkpoint(out_dir / (label(m.model) + "_checkpoint.json"), m.checkpoint);
      write_loss_csv(out_dir / (label(m.model) + "_loss.csv"), m.train.history);
    }
    for (const auto& [name, samples] : generated) {
      write_samples_csv(out_dir / ("samples_" + name + ".csv"), samples);
      write_json(out_dir / ("minima_" + name + ".json"), minima_to_json(result.minima[name].distinct));
    }
    write_json(out_dir / "minima_report.json", result.report);
  }
  return result;
}

}  // namespace eqbg
