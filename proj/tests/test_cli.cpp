// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "ntta/baselines.hpp"
#include "ntta/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;  // stdout and stderr
};

Run run(const std::string& args) {
  const std::string cmd = std::string(NTTA_BINARY) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path write_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.yaml";
  std::ofstream(p) << "name: tiny\n"
                      "threads: 2\n"
                      "dataset: {samples_per_class: 100}\n"
                      "model:\n"
                      "  checkpoint: "
                   << (dir / "tiny.ckpt").string()
                   << "\n"
                      "  arch: {hidden_width: 16, hidden_layers: 2}\n"
                      "  schedule: {total_steps: 10}\n"
                      "  training: {steps: 40, batch_size: 32}\n"
                      "alignment: {n_min: 1, n_max: 2, particles: 2}\n"
                      "baseline: {n: 2, steps: 2}\n"
                      "output: {dir: "
                   << (dir / "out").string() << "}\n";
  return p;
}

int data_rows(const fs::path& p) {
  std::ifstream in(p);
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') ++rows;
  return rows;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  Run r = run("");
  CHECK(r.status != 0);
  CHECK(r.output.find("Usage") != std::string::npos);

  r = run("frobnicate");
  CHECK(r.status != 0);
  CHECK(r.output.find("Usage") != std::string::npos);

  r = run("align --no-such-flag");
  CHECK(r.status != 0);
  CHECK(r.output.find("Usage") != std::string::npos);
}

TEST_CASE("cli: invalid config exits 2 with a position") {
  const fs::path dir = ntta::testing::scratch_dir("cli_bad");
  const fs::path p = dir / "bad.yaml";
  std::ofstream(p) << "alignment:\n  n_max: 10\n  lamda1: 3\n";
  const Run r = run("align --config " + p.string());
  CHECK(r.status == 2);
  CHECK(r.output.find(p.string() + ":3:3:") != std::string::npos);
  CHECK(r.output.find("lamda1") != std::string::npos);

  const Run o = run("align --config " + p.string() + " --set alignment.nope=1");
  CHECK(o.status == 2);
}

TEST_CASE("cli: train, align, sweep and compare") {
  const fs::path dir = ntta::testing::scratch_dir("cli_flow");
  fs::remove_all(dir / "out");
  fs::remove(dir / "tiny.ckpt");
  const fs::path cfg = write_config(dir);

  Run r = run("train --config " + cfg.string());
  REQUIRE(r.status == 0);
  REQUIRE(fs::exists(dir / "tiny.ckpt"));

  SUBCASE("lambda1 = 0 with one particle is plain sampling") {
    const ntta::Checkpoint ck = ntta::load_checkpoint(dir / "tiny.ckpt");
    const ntta::NoiseSchedule s =
        ntta::build_schedule(ck.schedule.total_steps, ck.schedule.beta_start, ck.schedule.beta_end);
    for (std::uint64_t seed : {3u, 11u}) {
      r = run("align --config " + cfg.string() + " --particles 1 --lambda1 0 --seed " + std::to_string(seed));
      REQUIRE(r.status == 0);
      const ntta::Vec x = ntta::sample_unaligned(ck.model, s, 0, 3.0, seed);
      char want[128];
      std::snprintf(want, sizeof want, "\nx0 %.17g %.17g\n", x[0], x[1]);
      CHECK_MESSAGE(r.output.find(want) != std::string::npos, r.output);
    }
  }
  SUBCASE("align writes a trajectory when asked") {
    r = run("align --config " + cfg.string() + " --seed 1 --format json --out " + (dir / "traj").string());
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir / "traj" / "tiny.trajectory.json"));
  }
  SUBCASE("particle sweep from overrides") {
    r = run("sweep --config " + cfg.string() +
            " --seed 1 --seed 2 --set sweep.axis=particles --set 'sweep.values=[1, 3, 10, 25, 50]'");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(data_rows(dir / "out" / "tiny.csv") == 5 * 2 + 1);
  }
  SUBCASE("compare writes one result per method and pareto rows") {
    r = run("compare --config " + cfg.string() + " --seed 4 --methods null_tta,unaligned,best_of_n --format json");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(fs::exists(dir / "out" / "tiny_null_tta.json"));
    CHECK(fs::exists(dir / "out" / "tiny_best_of_n.json"));
    CHECK(data_rows(dir / "out" / "tiny_pareto.csv") == 4);
  }
}
