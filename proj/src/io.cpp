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

#include "eqbg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eqbg/coupling_flow.hpp"
#include "eqbg/eqflow.hpp"
#include "eqbg/error.hpp"

namespace eqbg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_real(std::string s, double& out) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  const char* first = s.data() + start;
  const char* last = s.data() + s.size();
  if (first == last) return false;
  std::string_view sv(first, static_cast<std::size_t>(last - first));
  if (sv == "inf" || sv == "-inf" || sv == "nan") {
    out = sv == "inf" ? INFINITY : (sv == "-inf" ? -INFINITY : NAN);
    return true;
  }
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

// Reads all numeric rows of a CSV file; a single leading non-numeric row is
// skipped as a header.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t columns) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size() && numeric; ++k) numeric = parse_real(fields[k], row[k]);
    if (!numeric) {
      if (line_no == 1) continue;
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (row.size() != columns) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(columns) + " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string coord_header(int particles, int dim) {
  std::string h;
  for (int i = 0; i < particles; ++i) {
    for (int a = 0; a < dim; ++a) {
      if (!h.empty()) h += ',';
      h += "x" + std::to_string(i + 1) + "_" + std::to_string(a + 1);
    }
  }
  return h;
}

void write_coords(std::ostream& out, const Configuration& x) {
  bool first = true;
  for (double v : x.values()) {
    if (!first) out << ',';
    out << format_real(v);
    first = false;
  }
}

}  // namespace

void write_dataset_csv(const fs::path& path, std::span<const Configuration> data) {
  auto out = open_out(path);
  if (!data.empty()) {
    out << coord_header(data.front().particles(), data.front().dim()) << '\n';
  }
  for (const auto& x : data) {
    write_coords(out, x);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset read_dataset_csv(const fs::path& path, int particles, int dim) {
  const auto rows = read_numeric_csv(path, static_cast<std::size_t>(particles * dim));
  Dataset data;
  data.reserve(rows.size());
  for (const auto& r : rows) data.emplace_back(particles, dim, r);
  return data;
}

void write_samples_csv(const fs::path& path, std::span<const WeightedSample> samples) {
  auto out = open_out(path);
  if (!samples.empty()) {
    out << coord_header(samples.front().x.particles(), samples.front().x.dim())
        << ",logq,u,logw\n";
  }
  for (const auto& s : samples) {
    write_coords(out, s.x);
    out << ',' << format_real(s.log_q) << ',' << format_real(s.u) << ',' << format_real(s.log_w)
        << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<WeightedSample> read_samples_csv(const fs::path& path, int particles, int dim) {
  const auto n = static_cast<std::size_t>(particles * dim);
  const auto rows = read_numeric_csv(path, n + 3);
  std::vector<WeightedSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    WeightedSample s;
    s.x = Configuration(particles, dim, std::vector<double>(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(n)));
    s.log_q = r[n];
    s.u = r[n + 1];
    s.log_w = r[n + 2];
    s.flagged = !std::isfinite(s.u);
    out.push_back(std::move(s));
  }
  return out;
}

void write_loss_csv(const fs::path& path, std::span<const LossRecord> history) {
  auto out = open_out(path);
  out << "iter,nll,kl,total,grad_norm,excluded_count\n";
  for (const auto& r : history) {
    out << r.iter << ',' << format_real(r.nll) << ',' << (r.kl ? format_real(*r.kl) : "") << ','
        << format_real(r.total) << ',' << format_real(r.grad_norm) << ',' << r.excluded << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json to_json(const LossRecord& r) {
  json j = {{"iter", r.iter},           {"phase", r.phase},        {"nll", r.nll},
            {"total", r.total},         {"grad_norm", r.grad_norm}, {"excluded", r.excluded}};
  j["kl"] = r.kl ? json(*r.kl) : json(nullptr);
  return j;
}

LossRecord loss_record_from_json(const json& j) {
  LossRecord r;
  r.iter = j.at("iter").get<int>();
  r.phase = j.at("phase").get<std::string>();
  r.nll = j.at("nll").get<double>();
  if (j.contains("kl") && !j.at("kl").is_null()) r.kl = j.at("kl").get<double>();
  r.total = j.at("total").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.excluded = j.at("excluded").get<int>();
  return r;
}

json to_json(const Checkpoint& c) {
  json history = json::array();
  for (const auto& r : c.loss_history) history.push_back(to_json(r));
  return {{"model", c.model},   {"hyperparams", c.hyperparams}, {"params", c.params},
          {"seed", c.seed},     {"created_by", c.created_by},   {"loss_history", history},
          {"train", c.train}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint c;
    c.model = j.at("model").get<std::string>();
    c.hyperparams = j.at("hyperparams");
    c.params = j.at("params").get<std::vector<double>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.created_by = j.value("created_by", "");
    for (const auto& r : j.at("loss_history")) c.loss_history.push_back(loss_record_from_json(r));
    if (j.contains("train")) c.train = j.at("train");
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void save_checkpoint(const fs::path& path, const Checkpoint& c) { write_json(path, to_json(c)); }

Checkpoint load_checkpoint(const fs::path& path) { return checkpoint_from_json(read_json(path)); }

Checkpoint make_checkpoint(const Flow& flow, std::uint64_t seed, std::span<const LossRecord> history,
                           json train) {
  Checkpoint c;
  c.model = std::string(flow.kind());
  c.hyperparams = flow.hyperparams();
  c.params.assign(flow.params().values().begin(), flow.params().values().end());
  c.seed = seed;
  c.created_by = "eqbg";
  c.loss_history.assign(history.begin(), history.end());
  c.train = std::move(train);
  return c;
}

std::unique_ptr<Flow> flow_from_checkpoint(const Checkpoint& c) {
  const auto& h = c.hyperparams;
  std::unique_ptr<Flow> flow;
  try {
    const int k = h.at("K").get<int>();
    const int d = h.at("D").get<int>();
    if (c.model == "eqflow") {
      EqFlowConfig cfg;
      cfg.n_steps = h.at("n_steps").get<int>();
      cfg.t0 = h.at("t0").get<double>();
      cfg.t1 = h.at("t1").get<double>();
      cfg.num_centers = h.at("M").get<int>();
      cfg.r_max = h.at("r_max").get<double>();
      cfg.bandwidth = h.value("bandwidth", 0.0);
      flow = std::make_unique<EqFlow>(k, d, cfg);
    } else if (c.model == "realnvp") {
      CouplingFlowConfig cfg;
      cfg.layers = h.at("L").get<int>();
      cfg.hidden = h.at("hidden").get<int>();
      cfg.clamp = h.at("clamp").get<double>();
      flow = std::make_unique<CouplingFlow>(k, d, cfg);
    } else {
      throw IoError("unknown model type '" + c.model + "' in checkpoint");
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint hyperparams: ") + e.what());
  }
  flow->params().assign(c.params);
  return flow;
}

json to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"batch_size_kl", cfg.batch_size_kl},
          {"n_iters_ml", cfg.n_iters_ml},
          {"n_iters_mixed", cfg.n_iters_mixed},
          {"learning_rate", cfg.learning_rate},
          {"kl_weight", cfg.kl_weight},
          {"grad_clip", cfg.grad_clip},
          {"energy_clamp", cfg.energy_clamp},
          {"energy_clamp_slope", cfg.energy_clamp_slope},
          {"seed", cfg.seed}};
}

json minima_to_json(std::span<const MinimumRecord> minima) {
  json out = json::array();
  for (const auto& m : minima) {
    out.push_back({{"coords", m.x_min.values()},
                   {"u_min", m.u_min},
                   {"signature", m.signature},
                   {"n_hits", m.n_hits}});
  }
  return out;
}

std::vector<MinimumRecord> minima_from_json(const json& j, int particles, int dim) {
  std::vector<MinimumRecord> out;
  try {
    for (const auto& m : j) {
      MinimumRecord r;
      r.x_min = Configuration(particles, dim, m.at("coords").get<std::vector<double>>());
      r.u_min = m.at("u_min").get<double>();
      r.signature = m.at("signature").get<std::vector<double>>();
      r.n_hits = m.at("n_hits").get<int>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed minima file: ") + e.what());
  }
  return out;
}

}  // namespace eqbg
