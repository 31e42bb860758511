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

// Command-line driver: sampling, training, evaluation and both experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqbg/bg.hpp"
#include "eqbg/config.hpp"
#include "eqbg/error.hpp"
#include "eqbg/experiments.hpp"
#include "eqbg/io.hpp"
#include "eqbg/mcmc.hpp"
#include "eqbg/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eqbg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitConvergence = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;

  std::string data;
  std::string checkpoint;
  std::string resume;
  std::string input;
  int n = -1;
  int probes = 100;
};

void log_line(std::string_view msg) { std::clog << msg << '\n'; }

RunConfig resolve_config(const Options& opt) {
  RunConfig cfg = opt.config.empty() ? parse_run_config(json::object()) : load_run_config(opt.config);
  if (opt.seed) override_seed(cfg, *opt.seed);
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  return cfg;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_sample_mcmc(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const DoubleWellEnergy energy(cfg.system.energy);
  McmcConfig mcmc = cfg.mcmc;
  mcmc.init = chain_start(cfg, energy);
  const ChainResult chain = run_chain(mcmc, energy);
  double u_min = chain.energies.front();
  double u_max = u_min;
  double u_sum = 0.0;
  for (double u : chain.energies) {
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    u_sum += u;
  }
  const json meta = {{"seed", mcmc.seed},
                     {"n_samples", chain.samples.size()},
                     {"steps", chain.steps},
                     {"accepted", chain.accepted},
                     {"acceptance_rate", chain.acceptance_rate()},
                     {"proposal_scale", mcmc.proposal_scale},
                     {"energy_min", u_min},
                     {"energy_max", u_max},
                     {"energy_mean", u_sum / static_cast<double>(chain.energies.size())}};
  write_dataset_csv(cfg.out_dir / "trajectory.csv", chain.samples);
  write_json(cfg.out_dir / "trajectory_meta.json", meta);
  print(meta);
  return kExitOk;
}

int cmd_train(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const DoubleWellEnergy energy(cfg.system.energy);
  const Dataset data = read_dataset_csv(opt.data, cfg.system.particles, cfg.system.dim);
  if (data.empty()) throw InputError("train: dataset '" + opt.data + "' is empty");

  std::unique_ptr<Flow> flow;
  std::vector<LossRecord> history;
  if (!opt.resume.empty()) {
    const Checkpoint prev = load_checkpoint(opt.resume);
    flow = flow_from_checkpoint(prev);
    history = prev.loss_history;
  } else {
    flow = make_flow(cfg.model.type, cfg);
  }
  if (flow->particles() != cfg.system.particles || flow->dim() != cfg.system.dim) {
    throw ConfigError("train: model shape does not match system.K/system.D");
  }
  const int offset = history.empty() ? 0 : history.back().iter + 1;
  const TrainResult result = train_loop(*flow, energy, data, cfg.train, {});
  for (LossRecord r : result.history) {
    r.iter += offset;
    history.push_back(std::move(r));
  }
  json train_meta = to_json(cfg.train);
  if (result.aborted) train_meta["aborted"] = result.message;
  const Checkpoint ck = make_checkpoint(*flow, cfg.train.seed, history, train_meta);
  save_checkpoint(cfg.out_dir / "checkpoint.json", ck);
  write_loss_csv(cfg.out_dir / "loss.csv", history);
  if (result.aborted) throw DivergenceError(result.message + " (partial checkpoint written)");
  print({{"model", ck.model},
         {"iterations", history.size()},
         {"final_loss", history.empty() ? 0.0 : history.back().total}});
  return kExitOk;
}

int cmd_eval(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const auto flow = flow_from_checkpoint(load_checkpoint(opt.checkpoint));
  const Dataset data = read_dataset_csv(opt.data, flow->particles(), flow->dim());
  if (data.empty()) throw InputError("eval: dataset '" + opt.data + "' is empty");
  Rng rng(cfg.stream_seed("eval_probe"));
  const InvarianceProbe probe = probe_invariance(*flow, data, opt.probes, rng);
  const json metrics = {{"model", std::string(flow->kind())},
                        {"n", data.size()},
                        {"nll", mean_nll(*flow, data)},
                        {"invariance", {{"n_actions", probe.n_actions},
                                        {"max_abs_delta", probe.max_abs_delta}}}};
  write_json(cfg.out_dir / "eval.json", metrics);
  print(metrics);
  return kExitOk;
}

int cmd_generate(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const DoubleWellEnergy energy(cfg.system.energy);
  const auto flow = flow_from_checkpoint(load_checkpoint(opt.checkpoint));
  const int n = opt.n > 0 ? opt.n : cfg.experiment.n_generate;
  Rng rng(cfg.stream_seed("generate"));
  const auto samples = generate(*flow, energy, n, rng);
  int flagged = 0;
  for (const auto& s : samples) flagged += s.flagged ? 1 : 0;
  const json summary = {{"model", std::string(flow->kind())},
                        {"n", samples.size()},
                        {"flagged", flagged},
                        {"ess", effective_sample_size(samples)}};
  write_samples_csv(cfg.out_dir / "samples.csv", samples);
  write_json(cfg.out_dir / "generate_meta.json", summary);
  print(summary);
  return kExitOk;
}

// Counts the fields of the first line of a CSV file.
std::size_t csv_columns(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::size_t n = line.empty() ? 0 : 1;
  for (char c : line) n += c == ',' ? 1 : 0;
  return n;
}

int cmd_minimize(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const DoubleWellEnergy energy(cfg.system.energy);
  const int k = cfg.system.particles;
  const int d = cfg.system.dim;
  const auto coords = static_cast<std::size_t>(k * d);
  const std::size_t cols = csv_columns(opt.input);
  Dataset xs;
  if (cols == coords) {
    xs = read_dataset_csv(opt.input, k, d);
  } else if (cols == coords + 3) {
    for (auto& s : read_samples_csv(opt.input, k, d)) xs.push_back(std::move(s.x));
  } else {
    throw InputError("minimize: '" + opt.input + "' has " + std::to_string(cols) +
                     " columns; expected " + std::to_string(coords) + " or " +
                     std::to_string(coords + 3));
  }
  const MinimumRecord ref = reference_minimum(cfg, energy);
  const MinimaSummary summary = summarize_minima(xs, energy, ref.signature, cfg.experiment.minima_tol);
  write_json(cfg.out_dir / "minima.json", minima_to_json(summary.distinct));
  print({{"n_samples", summary.n_samples},
         {"n_failed", summary.n_failed},
         {"n_distinct", summary.distinct.size()},
         {"n_new", summary.n_new}});
  return kExitOk;
}

json nll_summary(const json& metrics) {
  json out = json::object();
  for (const char* m : {"nbg", "eqbg"}) out[m] = metrics.at(m);
  out["acceptance_rate"] = metrics.at("acceptance_rate");
  return out;
}

int cmd_experiment1(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const Experiment1Result r = run_experiment1(cfg, cfg.out_dir, log_line);
  print(nll_summary(r.metrics));
  return kExitOk;
}

int cmd_experiment2(const Options& opt) {
  const RunConfig cfg = resolve_config(opt);
  const Experiment2Result r = run_experiment2(cfg, cfg.out_dir, log_line);
  json summary = json::object();
  for (const auto& [name, m] : r.minima) {
    summary[name] = {{"n_distinct", m.distinct.size()}, {"n_new", m.n_new}, {"n_failed", m.n_failed}};
  }
  print(summary);
  return kExitOk;
}

int report(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boltzmann generators with equivariant flows"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "Run config JSON");
  app.add_option("--seed", opt.seed, "Override the run seed");
  app.add_option("--threads", opt.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", opt.out, "Output directory");

  auto* sample = app.add_subcommand("sample-mcmc", "Metropolis-Hastings trajectory");
  auto* train = app.add_subcommand("train", "Train the configured model on a dataset");
  train->add_option("--data", opt.data, "Dataset CSV")->required();
  train->add_option("--resume", opt.resume, "Checkpoint to continue from");
  auto* eval = app.add_subcommand("eval", "Mean NLL and invariance probe");
  eval->add_option("--checkpoint", opt.checkpoint)->required();
  eval->add_option("--data", opt.data)->required();
  eval->add_option("--probes", opt.probes, "Group actions per kind")->check(CLI::PositiveNumber);
  auto* gen = app.add_subcommand("generate", "Draw weighted samples from a checkpoint");
  gen->add_option("--checkpoint", opt.checkpoint)->required();
  gen->add_option("-n,--n", opt.n, "Number of samples (default experiment.n_generate)");
  auto* minimize = app.add_subcommand("minimize", "Minimize and deduplicate configurations");
  minimize->add_option("--input", opt.input, "Dataset or samples CSV")->required();
  auto* exp1 = app.add_subcommand("experiment1", "NLL on train and held-out trajectory halves");
  auto* exp2 = app.add_subcommand("experiment2", "Mode discovery from a single minimum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kExitConfig);
  }

  if (opt.threads > 0) set_num_threads(opt.threads);
  try {
    if (*sample) return cmd_sample_mcmc(opt);
    if (*train) return cmd_train(opt);
    if (*eval) return cmd_eval(opt);
    if (*gen) return cmd_generate(opt);
    if (*minimize) return cmd_minimize(opt);
    if (*exp1) return cmd_experiment1(opt);
    if (*exp2) return cmd_experiment2(opt);
  } catch (const ConfigError& e) {
    return report("config", e.what(), kExitConfig);
  } catch (const InputError& e) {
    return report("input", e.what(), kExitConfig);
  } catch (const DivergenceError& e) {
    return report("divergence", e.what(), kExitDivergence);
  } catch (const ConvergenceError& e) {
    return report("convergence", e.what(), kExitConvergence);
  } catch (const IoError& e) {
    return report("io", e.what(), kExitIo);
  } catch (const std::exception& e) {
    return report("internal", e.what(), kExitIo);
  }
  return kExitOk;
}
