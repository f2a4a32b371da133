// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "ntta/errors.hpp"
#include "ntta/results.hpp"

namespace ntta {

namespace {

std::uint64_t sample_seed(std::uint64_t seed, int index) {
  if (index == 0) return seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

CellResult run_cell(const ExperimentConfig& config, const Checkpoint& ck,
                    const NoiseSchedule& sched, const DatasetSpec& dataset, std::size_t group,
                    std::uint64_t seed) {
  CellResult cell;
  cell.group = group;
  cell.seed = seed;
  cell.samples = config.samples;
  cell.held_out.assign(config.held_out.size(), 0.0);
  const auto start = std::chrono::steady_clock::now();
  try {
    const int T = sched.total_steps();
    for (int j = 0; j < config.samples; ++j) {
      const std::uint64_t s = sample_seed(seed, j);
      Vec x;
      if (config.is_baseline()) {
        const BaselineConfig bc = config.baseline_config(s);
        EvalCounters counters;
        x = run_baseline(ck.model, sched, config.label, bc, config.target.spec, &counters);
        const EvalCounters expected = baseline_evaluations(bc, T);
        cell.denoiser_passes += counters.denoiser_passes;
        cell.reward_evals += counters.reward_evals;
        cell.expected_denoiser_passes += expected.denoiser_passes;
        cell.expected_reward_evals += expected.reward_evals;
      } else {
        AlignmentConfig ac = config.alignment;
        ac.seed = s;
        const AlignmentResult r = align_sample(ck.model, sched, config.label, ac, config.target.spec);
        const EvalCounters expected = expected_evaluations(ac, T);
        x = r.x0;
        cell.phi_drift += (r.phi_prime - ck.model.null_embedding()).norm();
        cell.denoiser_passes += r.counters.denoiser_passes;
        cell.reward_evals += r.counters.reward_evals;
        cell.expected_denoiser_passes += expected.denoiser_passes;
        cell.expected_reward_evals += expected.reward_evals;
      }
      cell.target_reward += evaluate(config.target.spec, x);
      for (std::size_t k = 0; k < config.held_out.size(); ++k) {
        cell.held_out[k] += evaluate(config.held_out[k].spec, x);
      }
      cell.off_manifold_rate += is_off_manifold(dataset, x) ? 1.0 : 0.0;
      cell.finals.push_back(std::move(x));
    }
    const double n = config.samples;
    cell.target_reward /= n;
    for (double& h : cell.held_out) h /= n;
    cell.phi_drift /= n;
    cell.off_manifold_rate /= n;
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
  }
  cell.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

}  // namespace

bool ExperimentResult::any_failed() const {
  for (const auto& c : cells) {
    if (c.failed) return true;
  }
  return false;
}

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

Checkpoint prepare_model(const ExperimentConfig& config) {
  const auto& mc = config.model;
  if (!mc.checkpoint.empty() && std::filesystem::exists(mc.checkpoint)) {
    Checkpoint ck = load_checkpoint(mc.checkpoint);
    if (!(ck.schedule == mc.schedule)) {
      throw ConfigError("checkpoint " + mc.checkpoint +
                        " was trained with a different schedule than the configuration");
    }
    if (config.label >= ck.model.arch().num_classes) {
      throw ConfigError("label is not a class of checkpoint " + mc.checkpoint);
    }
    return ck;
  }
  const DatasetSpec spec = config.dataset.to_spec();
  const LabeledPoints data = generate_dataset(spec);
  const NoiseSchedule sched =
      build_schedule(mc.schedule.total_steps, mc.schedule.beta_start, mc.schedule.beta_end);
  DenoiserArch arch = mc.arch;
  arch.num_classes = spec.num_classes();
  arch.data_dim = spec.data_dim();
  arch.total_steps = mc.schedule.total_steps;
  TrainResult tr = train(DenoiserModel(arch, mc.init_seed), data, sched, mc.training);
  Checkpoint ck{std::move(tr.model), mc.schedule,
                {static_cast<std::uint64_t>(mc.training.steps), mc.training.seed, tr.final_loss}};
  if (!mc.checkpoint.empty()) save_checkpoint(ck, mc.checkpoint);
  return ck;
}

ExperimentResult run_cells(const ExperimentConfig& config, const Checkpoint& ck) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  for (const auto& h : config.held_out) result.held_out_names.push_back(h.name);

  const NoiseSchedule sched = build_schedule(ck.schedule.total_steps, ck.schedule.beta_start,
                                             ck.schedule.beta_end);
  const DatasetSpec dataset = config.dataset.to_spec();
  const std::size_t groups = config.sweep.groups();
  std::vector<ExperimentConfig> group_configs;
  for (std::size_t g = 0; g < groups; ++g) group_configs.push_back(config.for_group(g));

  const std::size_t n_cells = groups * config.seeds.size();
  result.cells.resize(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n_cells; i = next++) {
      const std::size_t g = i / config.seeds.size();
      const std::size_t k = i % config.seeds.size();
      result.cells[i] = run_cell(group_configs[g], ck, sched, dataset, g, config.seeds[k]);
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_cells));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t g = 0; g < groups; ++g) {
    GroupSummary s;
    s.group = g;
    s.sweep_label = config.sweep.label(g);
    if (config.sweep.axis != SweepAxis::None) s.sweep_value = config.sweep.values[g];
    std::vector<double> target, drift, off;
    std::vector<std::vector<double>> held(config.held_out.size());
    for (const auto& c : result.cells) {
      if (c.group != g || c.failed) continue;
      target.push_back(c.target_reward);
      drift.push_back(c.phi_drift);
      off.push_back(c.off_manifold_rate);
      for (std::size_t h = 0; h < held.size(); ++h) held[h].push_back(c.held_out[h]);
    }
    s.completed = static_cast<int>(target.size());
    s.target = mean_se(target);
    s.phi_drift = mean_se(drift);
    s.off_manifold_rate = mean_se(off);
    for (const auto& h : held) s.held_out.push_back(mean_se(h));
    result.groups.push_back(std::move(s));
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Checkpoint ck = prepare_model(config);
  ExperimentResult result = run_cells(config, ck);
  const std::filesystem::path out =
      std::filesystem::path(config.output_dir) / (config.name + "." + config.format);
  emit_results(result, config.format, out);
  return result;
}

}  // namespace ntta
