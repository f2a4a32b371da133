// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/results.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string commented(const std::string& text) {
  std::ostringstream os;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) os << "# " << line << '\n';
  return os.str();
}

nlohmann::json yaml_to_json(const YAML::Node& node) {
  using nlohmann::json;
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      json j = json::object();
      for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      json j = json::array();
      for (const auto& item : node) j.push_back(yaml_to_json(item));
      return j;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted in the source
      if (s == "true" || s == "false") return s == "true";
      std::size_t used = 0;
      try {
        if (s.find_first_of(".eEn") == std::string::npos) {
          long long v = std::stoll(s, &used);
          if (used == s.size()) return v;
        }
        double d = std::stod(s, &used);
        if (used == s.size()) return d;
      } catch (const std::exception&) {
      }
      return s;
    }
    default:
      return nullptr;
  }
}

nlohmann::json mean_se_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}}; }

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory for " + path.string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string results_csv(const ExperimentResult& r) {
  const auto& cfg = r.config;
  std::ostringstream os;
  os << "# ntta " << r.library_version << '\n';
  os << commented(dump_config(cfg));
  os << "method,group,sweep_axis,sweep_value,seed,samples,status,target_reward";
  for (const auto& name : r.held_out_names) os << ',' << csv_field(name);
  os << ",phi_drift,off_manifold_rate,denoiser_passes,reward_evals,expected_denoiser_passes,"
        "expected_reward_evals,wall_seconds,error\n";
  for (const auto& c : r.cells) {
    os << to_string(cfg.method) << ',' << c.group << ',' << to_string(cfg.sweep.axis) << ','
       << csv_field(cfg.sweep.label(c.group)) << ',' << c.seed << ',' << c.samples << ','
       << (c.failed ? "failed" : "ok") << ',' << num(c.target_reward);
    for (double h : c.held_out) os << ',' << num(h);
    os << ',' << num(c.phi_drift) << ',' << num(c.off_manifold_rate) << ',' << c.denoiser_passes
       << ',' << c.reward_evals << ',' << c.expected_denoiser_passes << ','
       << c.expected_reward_evals << ',' << num(c.wall_seconds) << ',' << csv_field(c.error)
       << '\n';
  }
  os << "# summary: group,sweep_value,completed,target_mean,target_se";
  for (const auto& name : r.held_out_names) os << ',' << name << "_mean," << name << "_se";
  os << ",phi_drift_mean,phi_drift_se,off_manifold_mean,off_manifold_se\n";
  for (const auto& g : r.groups) {
    os << "# summary: " << g.group << ',' << csv_field(g.sweep_label) << ',' << g.completed << ','
       << num(g.target.mean) << ',' << num(g.target.se);
    for (const auto& h : g.held_out) os << ',' << num(h.mean) << ',' << num(h.se);
    os << ',' << num(g.phi_drift.mean) << ',' << num(g.phi_drift.se) << ','
       << num(g.off_manifold_rate.mean) << ',' << num(g.off_manifold_rate.se) << '\n';
  }
  return os.str();
}

std::string results_json(const ExperimentResult& r) {
  using nlohmann::json;
  json doc;
  doc["library_version"] = r.library_version;
  doc["config"] = yaml_to_json(YAML::Load(dump_config(r.config)));
  doc["held_out_names"] = r.held_out_names;
  json cells = json::array();
  for (const auto& c : r.cells) {
    json j;
    j["group"] = c.group;
    j["sweep_value"] = r.config.sweep.label(c.group);
    j["seed"] = c.seed;
    j["samples"] = c.samples;
    j["status"] = c.failed ? "failed" : "ok";
    j["target_reward"] = c.target_reward;
    j["held_out"] = c.held_out;
    j["phi_drift"] = c.phi_drift;
    j["off_manifold_rate"] = c.off_manifold_rate;
    j["denoiser_passes"] = c.denoiser_passes;
    j["reward_evals"] = c.reward_evals;
    j["expected_denoiser_passes"] = c.expected_denoiser_passes;
    j["expected_reward_evals"] = c.expected_reward_evals;
    j["wall_seconds"] = c.wall_seconds;
    j["error"] = c.error;
    json finals = json::array();
    for (const auto& x : c.finals) finals.push_back(std::vector<double>(x.begin(), x.end()));
    j["finals"] = finals;
    cells.push_back(j);
  }
  doc["cells"] = cells;
  json groups = json::array();
  for (const auto& g : r.groups) {
    json j;
    j["group"] = g.group;
    j["sweep_value"] = g.sweep_label;
    j["completed"] = g.completed;
    j["target"] = mean_se_json(g.target);
    json held = json::array();
    for (const auto& h : g.held_out) held.push_back(mean_se_json(h));
    j["held_out"] = held;
    j["phi_drift"] = mean_se_json(g.phi_drift);
    j["off_manifold_rate"] = mean_se_json(g.off_manifold_rate);
    groups.push_back(j);
  }
  doc["groups"] = groups;
  return doc.dump(2) + "\n";
}

void emit_results(const ExperimentResult& result, const std::string& format,
                  const std::filesystem::path& path) {
  if (format == "csv") {
    write_file_atomic(path, results_csv(result));
  } else if (format == "json") {
    write_file_atomic(path, results_json(result));
  } else {
    throw ConfigError("unknown result format '" + format + "'");
  }
}

std::string trajectory_csv(const ExperimentConfig& config, const AlignmentResult& run) {
  std::ostringstream os;
  os << "# ntta " << kLibraryVersion << '\n' << commented(dump_config(config));
  os << "t,lambda2_t,inner_steps,objective_start,objective,reward,kl_transition,kl_embedding,"
        "phi_drift,selected,selected_reward\n";
  for (const auto& r : run.record) {
    os << r.t << ',' << num(r.lambda2_t) << ',' << r.inner_steps << ',' << num(r.objective_start)
       << ',' << num(r.objective) << ',' << num(r.reward) << ',' << num(r.kl_transition) << ','
       << num(r.kl_embedding) << ',' << num(r.phi_drift) << ',' << r.selected << ','
       << num(r.selected_reward) << '\n';
  }
  os << "# x0:";
  for (double v : run.x0) os << ' ' << num(v);
  os << "\n# denoiser_passes: " << run.counters.denoiser_passes
     << "\n# reward_evals: " << run.counters.reward_evals << '\n';
  return os.str();
}

std::string trajectory_json(const ExperimentConfig& config, const AlignmentResult& run) {
  using nlohmann::json;
  json doc;
  doc["library_version"] = kLibraryVersion;
  doc["config"] = yaml_to_json(YAML::Load(dump_config(config)));
  json rows = json::array();
  for (const auto& r : run.record) {
    rows.push_back({{"t", r.t},
                    {"lambda2_t", r.lambda2_t},
                    {"inner_steps", r.inner_steps},
                    {"objective_start", r.objective_start},
                    {"objective", r.objective},
                    {"reward", r.reward},
                    {"kl_transition", r.kl_transition},
                    {"kl_embedding", r.kl_embedding},
                    {"phi_drift", r.phi_drift},
                    {"selected", r.selected},
                    {"selected_reward", r.selected_reward},
                    {"candidate_rewards", r.candidate_rewards}});
  }
  doc["trajectory"] = rows;
  doc["x0"] = std::vector<double>(run.x0.begin(), run.x0.end());
  doc["phi_prime"] = std::vector<double>(run.phi_prime.begin(), run.phi_prime.end());
  doc["denoiser_passes"] = run.counters.denoiser_passes;
  doc["reward_evals"] = run.counters.reward_evals;
  return doc.dump(2) + "\n";
}

std::vector<ParetoRow> pareto_rows(const std::vector<ExperimentResult>& results) {
  if (results.empty()) throw ConfigError("pareto data needs at least one result");
  const auto& ref = results.front().config.held_out;
  for (const auto& r : results) {
    const auto& h = r.config.held_out;
    bool same = h.size() == ref.size();
    for (std::size_t i = 0; same && i < h.size(); ++i) {
      same = h[i].name == ref[i].name && h[i].spec.describe() == ref[i].spec.describe();
    }
    if (!same) {
      throw ConfigError("result '" + r.config.name + "' uses a different held-out reward battery");
    }
  }
  std::vector<ParetoRow> rows;
  for (const auto& r : results) {
    for (const auto& g : r.groups) {
      rows.push_back({r.config.name, g.sweep_label, g.target, g.held_out, false});
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size() && !rows[i].dominated; ++j) {
      if (i == j) continue;
      bool geq = rows[j].target.mean >= rows[i].target.mean;
      bool gt = rows[j].target.mean > rows[i].target.mean;
      for (std::size_t k = 0; geq && k < rows[i].held_out.size(); ++k) {
        geq = rows[j].held_out[k].mean >= rows[i].held_out[k].mean;
        gt = gt || rows[j].held_out[k].mean > rows[i].held_out[k].mean;
      }
      rows[i].dominated = geq && gt;
    }
  }
  return rows;
}

void emit_pareto_data(const std::vector<ExperimentResult>& results,
                      const std::filesystem::path& path) {
  const auto rows = pareto_rows(results);
  std::ostringstream os;
  os << "method,sweep_value,target_mean,target_se";
  for (const auto& h : results.front().config.held_out) {
    os << ',' << csv_field(h.name + "_mean") << ',' << csv_field(h.name + "_se");
  }
  os << ",dominated\n";
  for (const auto& row : rows) {
    os << csv_field(row.method) << ',' << csv_field(row.sweep_label) << ',' << num(row.target.mean)
       << ',' << num(row.target.se);
    for (const auto& h : row.held_out) os << ',' << num(h.mean) << ',' << num(h.se);
    os << ',' << (row.dominated ? 1 : 0) << '\n';
  }
  write_file_atomic(path, os.str());
}

}  // namespace ntta
