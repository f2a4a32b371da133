// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t le(int n) {
    if (remaining() < static_cast<std::size_t>(n)) throw CheckpointError("checkpoint header truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }
  const std::vector<char>& bytes_;
  std::size_t pos_ = kCheckpointMagic.size();
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const DenoiserArch& a = checkpoint.model.arch();
  Writer w;
  w.raw(kCheckpointMagic);
  for (int v : {a.data_dim, a.embed_dim, a.hidden_width, a.hidden_layers, a.time_frequencies,
                a.num_classes, a.total_steps}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(checkpoint.schedule.total_steps));
  w.f64(checkpoint.schedule.beta_start);
  w.f64(checkpoint.schedule.beta_end);
  w.u64(checkpoint.training.steps);
  w.u64(checkpoint.training.seed);
  w.f64(checkpoint.training.final_loss);
  const Vec params = checkpoint.model.flat_parameters();
  w.u64(static_cast<std::uint64_t>(params.size()));
  for (double p : params) w.f64(p);

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  const std::string_view family = kCheckpointMagic.substr(0, kCheckpointMagic.rfind('-'));
  const std::string_view head(bytes.data(), std::min(bytes.size(), kCheckpointMagic.size()));
  if (head != kCheckpointMagic) {
    if (head.substr(0, std::min(head.size(), family.size())) == family && head.size() > family.size()) {
      throw CheckpointError("unsupported checkpoint version '" + std::string(head) + "' in " +
                            path.string());
    }
    throw CheckpointError("bad checkpoint magic in " + path.string());
  }

  Reader r(bytes);
  DenoiserArch arch;
  arch.data_dim = static_cast<int>(r.u32());
  arch.embed_dim = static_cast<int>(r.u32());
  arch.hidden_width = static_cast<int>(r.u32());
  arch.hidden_layers = static_cast<int>(r.u32());
  arch.time_frequencies = static_cast<int>(r.u32());
  arch.num_classes = static_cast<int>(r.u32());
  arch.total_steps = static_cast<int>(r.u32());
  ScheduleParams sched;
  sched.total_steps = static_cast<int>(r.u32());
  sched.beta_start = r.f64();
  sched.beta_end = r.f64();
  TrainingMetadata meta;
  meta.steps = r.u64();
  meta.seed = r.u64();
  meta.final_loss = r.f64();
  const std::uint64_t count = r.u64();

  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  DenoiserModel model(arch, 0);
  if (count != model.parameter_count()) {
    throw CheckpointError("checkpoint payload length " + std::to_string(count) +
                          " does not match architecture (" +
                          std::to_string(model.parameter_count()) + ")");
  }
  if (r.remaining() != count * 8) {
    throw CheckpointError("checkpoint payload truncated: expected " + std::to_string(count * 8) +
                          " bytes, found " + std::to_string(r.remaining()));
  }
  Vec params(static_cast<Eigen::Index>(count));
  for (auto& p : params) p = r.f64();
  model.set_flat_parameters(params);
  return Checkpoint{std::move(model), sched, meta};
}

}  // namespace ntta
