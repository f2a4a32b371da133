// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

// ntta: train toy denoisers, run null-embedding alignment, sweeps,
// multi-method comparisons and the acceptance suite.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ntta/acceptance.hpp"
#include "ntta/config.hpp"
#include "ntta/errors.hpp"
#include "ntta/experiment.hpp"
#include "ntta/results.hpp"

namespace {

using ntta::ExperimentConfig;
using ntta::Overrides;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Common {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string format;
  int threads = -1;
  std::vector<std::string> sets;
  std::map<std::string, std::string> fields;  // override key -> raw value
  std::vector<std::string> switches;          // boolean keys given on the command line
};

struct FieldFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FieldFlag kAlignmentFlags[] = {
    {"--lambda1", "alignment.lambda1", "reward weight"},
    {"--lambda2", "alignment.lambda2", "base regularisation weight"},
    {"--sigma-phi-sq", "alignment.sigma_phi_sq", "embedding prior variance"},
    {"--gamma", "alignment.gamma", "annealing growth rate"},
    {"--n-min", "alignment.n_min", "inner steps at t = T"},
    {"--n-max", "alignment.n_max", "maximum inner steps"},
    {"--particles", "alignment.particles", "particles per timestep"},
    {"--guidance-scale", "alignment.guidance_scale", "classifier-free guidance scale"},
    {"--learning-rate", "alignment.learning_rate", "inner-loop Adam learning rate"},
    {"--gradient", "alignment.gradient.mode", "analytic | zeroth_order"},
    {"--zo-mu", "alignment.gradient.mu", "zeroth-order smoothing radius"},
    {"--zo-samples", "alignment.gradient.num_samples", "zeroth-order directions per step"},
    {"--zo-seed", "alignment.gradient.seed", "zeroth-order direction seed"},
    {"--method", "method", "null_tta | unaligned | best_of_n | step_guidance | noise_opt"},
    {"--label", "label", "class label to sample"},
    {"--samples", "samples", "samples per cell"},
    {"--checkpoint", "model.checkpoint", "model checkpoint path"},
    {"--name", "name", "experiment name (output file stem)"},
};

constexpr FieldFlag kAlignmentSwitches[] = {
    {"--antithetic", "alignment.gradient.antithetic", "symmetric zeroth-order differences"},
    {"--persist-moments", "alignment.persist_moments", "keep Adam moments across timesteps"},
    {"--reset-embedding-per-timestep", "alignment.reset_embedding_per_timestep",
     "restart phi' at every timestep"},
};

void add_common(CLI::App* app, Common& c, bool alignment_flags) {
  app->add_option("--config", c.config, "YAML configuration (or a result file echoing one)")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seeds, "seed(s); replaces the configured seed list");
  app->add_option("--format", c.format, "result format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--set", c.sets, "override any config field: section.key=value")
      ->type_name("KEY=VALUE");
  if (!alignment_flags) return;
  for (const auto& f : kAlignmentFlags) {
    app->add_option(f.flag, c.fields[f.key], f.help);
  }
  for (const auto& f : kAlignmentSwitches) {
    app->add_flag_callback(f.flag, [&c, key = f.key] { c.switches.emplace_back(key); }, f.help);
  }
}

Overrides collect_overrides(const Common& c, bool out_is_checkpoint) {
  Overrides o;
  for (const auto& [key, value] : c.fields) {
    if (!value.empty()) o[key] = value;
  }
  for (const auto& key : c.switches) o[key] = "true";
  if (o.count("alignment.gradient.mu") || o.count("alignment.gradient.num_samples") ||
      o.count("alignment.gradient.seed") || o.count("alignment.gradient.antithetic")) {
    o.emplace("alignment.gradient.mode", "zeroth_order");
  }
  if (!c.seeds.empty()) {
    std::string list = "[";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
      list += (i ? ", " : "") + std::to_string(c.seeds[i]);
    }
    o["seeds"] = list + "]";
  }
  if (!c.out.empty()) o[out_is_checkpoint ? "model.checkpoint" : "output.dir"] = c.out;
  if (!c.format.empty()) o["output.format"] = c.format;
  if (c.threads >= 0) o["threads"] = std::to_string(c.threads);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ntta::ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    }
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

ExperimentConfig resolve(const Common& c, bool out_is_checkpoint) {
  const Overrides o = collect_overrides(c, out_is_checkpoint);
  if (c.config.empty()) return ntta::parse_config("", "<defaults>", o);
  return ntta::load_config(c.config, o);
}

void print_groups(const ntta::ExperimentResult& r, std::ostream& out) {
  out << "group  sweep_value  completed  target_mean  target_se  phi_drift  off_manifold\n";
  for (const auto& g : r.groups) {
    out << g.group << "  " << (g.sweep_label.empty() ? "-" : g.sweep_label) << "  " << g.completed
        << "  " << short_num(g.target.mean) << "  " << short_num(g.target.se) << "  "
        << short_num(g.phi_drift.mean) << "  " << short_num(g.off_manifold_rate.mean) << '\n';
  }
  for (const auto& c : r.cells) {
    if (c.failed) out << "cell group " << c.group << " seed " << c.seed << " failed: " << c.error << '\n';
  }
}

int cmd_train(const Common& c) {
  ExperimentConfig cfg = resolve(c, true);
  const std::string path = cfg.model.checkpoint;
  if (path.empty()) throw ntta::ConfigError("train needs --out or model.checkpoint");
  cfg.model.checkpoint.clear();
  ntta::Checkpoint ck = ntta::prepare_model(cfg);
  ntta::save_checkpoint(ck, path);
  std::cout << "trained " << ck.training.steps << " steps, final loss "
            << short_num(ck.training.final_loss) << ", saved " << path << '\n';
  return 0;
}

int cmd_align(const Common& c) {
  ExperimentConfig cfg = resolve(c, false);
  if (cfg.method != ntta::Method::NullTta) {
    throw ntta::ConfigError("align runs null_tta; use sweep for method " + ntta::to_string(cfg.method));
  }
  if (cfg.sweep.axis != ntta::SweepAxis::None) {
    throw ntta::ConfigError("align runs a single configuration; use sweep for sweep axes");
  }
  const ntta::Checkpoint ck = ntta::prepare_model(cfg);
  const auto& s = ck.schedule;
  const ntta::NoiseSchedule sched = ntta::build_schedule(s.total_steps, s.beta_start, s.beta_end);
  ntta::AlignmentConfig ac = cfg.alignment;
  ac.seed = cfg.seeds.front();
  const ntta::AlignmentResult run = ntta::align_sample(ck.model, sched, cfg.label, ac, cfg.target.spec);

  std::cout << "t  lambda2_t  inner_steps  objective  reward  kl_transition  kl_embedding  "
               "phi_drift  selected\n";
  for (const auto& r : run.record) {
    if (r.t % 10 != 0 && r.t != 1 && r.t != sched.total_steps()) continue;
    std::cout << r.t << "  " << short_num(r.lambda2_t) << "  " << r.inner_steps << "  "
              << short_num(r.objective) << "  " << short_num(r.reward) << "  "
              << short_num(r.kl_transition) << "  " << short_num(r.kl_embedding) << "  "
              << short_num(r.phi_drift) << "  " << r.selected << '\n';
  }
  std::cout << "seed " << ac.seed << '\n' << "x0";
  for (double v : run.x0) std::cout << ' ' << num(v);
  std::cout << "\n" << cfg.target.name << ' ' << num(ntta::evaluate(cfg.target.spec, run.x0)) << '\n';
  for (const auto& h : cfg.held_out) {
    std::cout << h.name << ' ' << num(ntta::evaluate(h.spec, run.x0)) << '\n';
  }
  const ntta::EvalCounters expected = ntta::expected_evaluations(ac, sched.total_steps());
  std::cout << "denoiser_passes " << run.counters.denoiser_passes << " (expected "
            << expected.denoiser_passes << ")\nreward_evals " << run.counters.reward_evals
            << " (expected " << expected.reward_evals << ")\n";

  if (!c.out.empty()) {
    const std::filesystem::path path = std::filesystem::path(cfg.output_dir) /
                                       (cfg.name + ".trajectory." + cfg.format);
    ntta::write_file_atomic(path, cfg.format == "json" ? ntta::trajectory_json(cfg, run)
                                                       : ntta::trajectory_csv(cfg, run));
    std::cout << "wrote " << path.string() << '\n';
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = resolve(c, false);
  const ntta::ExperimentResult r = ntta::run_experiment(cfg);
  print_groups(r, std::cout);
  std::cout << "wrote "
            << (std::filesystem::path(cfg.output_dir) / (cfg.name + "." + cfg.format)).string()
            << '\n';
  return r.any_failed() ? 1 : 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& methods) {
  const ExperimentConfig base = resolve(c, false);
  const ntta::Checkpoint ck = ntta::prepare_model(base);
  std::vector<ntta::ExperimentResult> results;
  bool failed = false;
  for (const auto& name : methods) {
    ExperimentConfig cfg = base;
    cfg.method = ntta::method_from_string(name);
    cfg.name = base.name + "_" + name;
    try {
      cfg.validate();
    } catch (const ntta::ConfigError&) {
      // Sweep axes belong to one method; the others run unswept.
      cfg.sweep = ntta::SweepConfig{};
      cfg.validate();
    }
    ntta::ExperimentResult r = ntta::run_cells(cfg, ck);
    const auto path = std::filesystem::path(cfg.output_dir) / (cfg.name + "." + cfg.format);
    ntta::emit_results(r, cfg.format, path);
    std::cout << "== " << name << " (" << path.string() << ")\n";
    print_groups(r, std::cout);
    failed = failed || r.any_failed();
    results.push_back(std::move(r));
  }
  const auto pareto = std::filesystem::path(base.output_dir) / (base.name + "_pareto.csv");
  ntta::emit_pareto_data(results, pareto);
  std::cout << "wrote " << pareto.string() << '\n';
  return failed ? 1 : 0;
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    for (std::string part; std::getline(ss, part, ',');) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ntta: null-embedding test-time alignment on toy diffusion models"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string("ntta ") + ntta::kLibraryVersion);

  Common train_c, align_c, sweep_c, compare_c;
  auto* train = app.add_subcommand("train", "train a denoiser on the configured dataset and save a checkpoint");
  add_common(train, train_c, false);
  train->add_option("--out", train_c.out, "checkpoint path");

  auto* align = app.add_subcommand("align", "one null_tta run; prints the per-timestep record");
  add_common(align, align_c, true);
  align->add_option("--out", align_c.out, "directory for the trajectory file");

  auto* sweep = app.add_subcommand("sweep", "run every (sweep value, seed) cell and write results");
  add_common(sweep, sweep_c, true);
  sweep->add_option("--out", sweep_c.out, "result directory");

  std::vector<std::string> methods{"null_tta", "unaligned", "best_of_n", "step_guidance", "noise_opt"};
  auto* compare = app.add_subcommand("compare", "run several methods on one config and write Pareto data");
  add_common(compare, compare_c, true);
  compare->add_option("--out", compare_c.out, "result directory");
  compare->add_option("--methods", methods, "comma-separated methods")->delimiter(',');

  std::string st_checkpoint, st_work;
  std::vector<std::string> st_only;
  bool st_quiet = false;
  int st_threads = 0;
  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_option("--checkpoint", st_checkpoint, "reference checkpoint (trained and saved if missing)");
  selftest->add_option("--work-dir", st_work, "scratch directory");
  selftest->add_option("--only", st_only, "criteria to run, e.g. A1,A7")->delimiter(',');
  selftest->add_option("--threads", st_threads, "worker threads")->check(CLI::NonNegativeNumber);
  selftest->add_flag("--quiet", st_quiet, "one line per criterion only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_c);
    if (*align) return cmd_align(align_c);
    if (*sweep) return cmd_sweep(sweep_c);
    if (*compare) return cmd_compare(compare_c, split_commas(methods));
    if (*selftest) {
      ntta::AcceptanceOptions opts;
      opts.checkpoint = st_checkpoint;
      if (!st_work.empty()) opts.work_dir = st_work;
      opts.only.insert(st_only.begin(), st_only.end());
      opts.threads = st_threads;
      const auto results = ntta::run_acceptance(opts, std::cout, !st_quiet);
      int failures = 0;
      for (const auto& r : results) failures += r.pass ? 0 : 1;
      std::cout << results.size() - failures << "/" << results.size() << " criteria passed\n";
      return failures == 0 ? 0 : 1;
    }
  } catch (const ntta::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
