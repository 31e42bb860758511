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

#include "eqbg/config.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "eqbg/error.hpp"
#include "eqbg/io.hpp"

namespace eqbg {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Typed access to one JSON object with unknown-key rejection.
class Section {
 public:
  Section(const json& j, std::string path) : j_{j}, path_{std::move(path)} {
    if (!j_.is_object()) fail("must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) fail("unknown key '" + key + "'");
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail("'" + key + "' must be a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail("'" + key + "' must be a number");
      out = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
          out = v.get<T>();
        } else {
          fail("'" + key + "' must be non-negative");
        }
      } else {
        out = v.get<T>();
      }
    }
  }

  const json& sub(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(path_ + ": " + msg);
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Configuration parse_configuration(const json& j, int particles, int dim, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != particles) {
    throw ConfigError(path + ": must be an array of " + std::to_string(particles) + " rows");
  }
  std::vector<double> coords;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw ConfigError(path + ": every row must have " + std::to_string(dim) + " numbers");
    }
    for (const auto& v : row) {
      if (!v.is_number()) throw ConfigError(path + ": coordinates must be numbers");
      coords.push_back(v.get<double>());
    }
  }
  return {particles, dim, std::move(coords)};
}

json configuration_to_json(const Configuration& x) {
  json rows = json::array();
  for (int i = 0; i < x.particles(); ++i) {
    rows.push_back(std::vector<double>(x.row(i).begin(), x.row(i).end()));
  }
  return rows;
}

void rederive_seeds(RunConfig& cfg) {
  if (!cfg.train_seed_explicit) cfg.train.seed = cfg.stream_seed("train");
  if (!cfg.mcmc_seed_explicit) cfg.mcmc.seed = cfg.stream_seed("mcmc");
}

}  // namespace

std::uint64_t RunConfig::stream_seed(std::string_view purpose) const noexcept {
  return splitmix64(seed ^ fnv1a(purpose));
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  try {
    Section root(j, "config");
    root.get("seed", cfg.seed);

    if (root.has("system")) {
      Section s(root.sub("system"), "system");
      s.get("K", cfg.system.particles);
      s.get("D", cfg.system.dim);
      if (s.has("energy")) {
        Section e(s.sub("energy"), "system.energy");
        e.get("a", cfg.system.energy.a);
        e.get("b", cfg.system.energy.b);
        e.get("d0", cfg.system.energy.d0);
      }
    }
    const int k = cfg.system.particles;
    const int d = cfg.system.dim;
    if (k < 2) throw ConfigError("system.K must be at least 2");
    if (d < 1 || d > 3) throw ConfigError("system.D must be 1, 2 or 3");
    if (!(cfg.system.energy.b > 0.0)) throw ConfigError("system.energy.b must be positive");

    if (root.has("model")) {
      Section m(root.sub("model"), "model");
      m.get("type", cfg.model.type);
      if (m.has("eqflow")) {
        Section e(m.sub("eqflow"), "model.eqflow");
        e.get("n_steps", cfg.model.eqflow.n_steps);
        e.get("t0", cfg.model.eqflow.t0);
        e.get("t1", cfg.model.eqflow.t1);
        e.get("M", cfg.model.eqflow.num_centers);
        e.get("r_max", cfg.model.eqflow.r_max);
        e.get("bandwidth", cfg.model.eqflow.bandwidth);
      }
      if (m.has("realnvp")) {
        Section r(m.sub("realnvp"), "model.realnvp");
        r.get("L", cfg.model.realnvp.layers);
        r.get("hidden", cfg.model.realnvp.hidden);
        r.get("clamp", cfg.model.realnvp.clamp);
      }
    }
    if (cfg.model.type != "eqflow" && cfg.model.type != "realnvp") {
      throw ConfigError("model.type must be \"eqflow\" or \"realnvp\"");
    }
    const auto& eq = cfg.model.eqflow;
    if (eq.n_steps < 1 || !(eq.t1 > eq.t0) || eq.num_centers < 2 || !(eq.r_max > 0.0)) {
      throw ConfigError("model.eqflow: needs n_steps >= 1, t1 > t0, M >= 2, r_max > 0");
    }
    const auto& nvp = cfg.model.realnvp;
    if (nvp.layers < 1 || nvp.hidden < 1 || !(nvp.clamp > 0.0)) {
      throw ConfigError("model.realnvp: needs L >= 1, hidden >= 1, clamp > 0");
    }

    if (root.has("train")) {
      Section t(root.sub("train"), "train");
      t.get("batch_size", cfg.train.batch_size);
      t.get("batch_size_kl", cfg.train.batch_size_kl);
      t.get("n_iters_ml", cfg.train.n_iters_ml);
      t.get("n_iters_mixed", cfg.train.n_iters_mixed);
      t.get("learning_rate", cfg.train.learning_rate);
      t.get("kl_weight", cfg.train.kl_weight);
      t.get("grad_clip", cfg.train.grad_clip);
      t.get("energy_clamp", cfg.train.energy_clamp);
      t.get("energy_clamp_slope", cfg.train.energy_clamp_slope);
      cfg.train_seed_explicit = t.has("seed");
      t.get("seed", cfg.train.seed);
    }
    try {
      validate(cfg.train);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }

    if (root.has("mcmc")) {
      Section m(root.sub("mcmc"), "mcmc");
      m.get("n_samples", cfg.mcmc.n_samples);
      m.get("burn_in", cfg.mcmc.burn_in);
      m.get("thinning", cfg.mcmc.thinning);
      m.get("proposal_scale", cfg.mcmc.proposal_scale);
      cfg.mcmc_seed_explicit = m.has("seed");
      m.get("seed", cfg.mcmc.seed);
      if (m.has("init")) cfg.mcmc.init = parse_configuration(m.sub("init"), k, d, "mcmc.init");
    }
    if (cfg.mcmc.n_samples < 0 || cfg.mcmc.burn_in < 0 || cfg.mcmc.thinning < 1 ||
        !(cfg.mcmc.proposal_scale > 0.0)) {
      throw ConfigError("mcmc: needs counts >= 0, thinning >= 1, proposal_scale > 0");
    }

    if (root.has("experiment")) {
      Section e(root.sub("experiment"), "experiment");
      e.get("name", cfg.experiment.name);
      e.get("split_fraction", cfg.experiment.split_fraction);
      e.get("noise_scale", cfg.experiment.noise_scale);
      e.get("n_generate", cfg.experiment.n_generate);
      e.get("n_train_samples", cfg.experiment.n_train_samples);
      e.get("minima_tol", cfg.experiment.minima_tol);
      e.get("histogram_bins", cfg.experiment.histogram_bins);
      if (e.has("start")) {
        cfg.experiment.start = parse_configuration(e.sub("start"), k, d, "experiment.start");
      }
    }
    const auto& ex = cfg.experiment;
    if (!(ex.split_fraction > 0.0 && ex.split_fraction < 1.0)) {
      throw ConfigError("experiment.split_fraction must lie in (0, 1)");
    }
    if (!(ex.noise_scale >= 0.0) || ex.n_generate < 0 || ex.n_train_samples < 1 ||
        !(ex.minima_tol > 0.0) || ex.histogram_bins < 1) {
      throw ConfigError(
          "experiment: needs noise_scale >= 0, n_generate >= 0, n_train_samples >= 1, "
          "minima_tol > 0, histogram_bins >= 1");
    }

    if (root.has("paths")) {
      Section p(root.sub("paths"), "paths");
      std::string out = cfg.out_dir.string();
      p.get("out", out);
      cfg.out_dir = out;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  rederive_seeds(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  json j = {
      {"seed", cfg.seed},
      {"system",
       {{"K", cfg.system.particles},
        {"D", cfg.system.dim},
        {"energy", {{"a", cfg.system.energy.a}, {"b", cfg.system.energy.b}, {"d0", cfg.system.energy.d0}}}}},
      {"model",
       {{"type", cfg.model.type},
        {"eqflow",
         {{"n_steps", cfg.model.eqflow.n_steps},
          {"t0", cfg.model.eqflow.t0},
          {"t1", cfg.model.eqflow.t1},
          {"M", cfg.model.eqflow.num_centers},
          {"r_max", cfg.model.eqflow.r_max},
          {"bandwidth", cfg.model.eqflow.bandwidth}}},
        {"realnvp",
         {{"L", cfg.model.realnvp.layers},
          {"hidden", cfg.model.realnvp.hidden},
          {"clamp", cfg.model.realnvp.clamp}}}}},
      {"train", to_json(cfg.train)},
      {"mcmc",
       {{"n_samples", cfg.mcmc.n_samples},
        {"burn_in", cfg.mcmc.burn_in},
        {"thinning", cfg.mcmc.thinning},
        {"proposal_scale", cfg.mcmc.proposal_scale},
        {"seed", cfg.mcmc.seed}}},
      {"experiment",
       {{"name", cfg.experiment.name},
        {"split_fraction", cfg.experiment.split_fraction},
        {"noise_scale", cfg.experiment.noise_scale},
        {"n_generate", cfg.experiment.n_generate},
        {"n_train_samples", cfg.experiment.n_train_samples},
        {"minima_tol", cfg.experiment.minima_tol},
        {"histogram_bins", cfg.experiment.histogram_bins}}},
      {"paths", {{"out", cfg.out_dir.string()}}}};
  if (cfg.mcmc.init.size() > 0) j["mcmc"]["init"] = configuration_to_json(cfg.mcmc.init);
  if (cfg.experiment.start) j["experiment"]["start"] = configuration_to_json(*cfg.experiment.start);
  return j;
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  rederive_seeds(cfg);
}

Configuration default_start(int particles, int dim, const DoubleWellParams& p) {
  const double spacing = p.a < 0.0 ? p.d0 + std::sqrt(-p.a / (2.0 * p.b)) : p.d0;
  Configuration x(particles, dim);
  if (dim == 1) {
    for (int i = 0; i < particles; ++i) x(i, 0) = spacing * i;
    return remove_mean(x);
  }
  const double radius = spacing / (2.0 * std::sin(std::numbers::pi / particles));
  for (int i = 0; i < particles; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / particles;
    x(i, 0) = radius * std::cos(phi);
    x(i, 1) = radius * std::sin(phi);
  }
  return x;
}

}  // namespace eqbg
