// Copyright 2026 The NTTA Authors
// SPDX-License-Identifier: Apache-2.0

#include "ntta/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ntta/errors.hpp"

namespace ntta {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark mark = node.Mark();
    std::ostringstream os;
    if (mark.is_null()) {
      os << source_ << ": override: " << msg;
    } else {
      os << source_ << ':' << mark.line + 1 << ':' << mark.column + 1 << ": " << msg;
    }
    throw ConfigError(os.str());
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

// A mapping whose keys must all be consumed.
class Section {
 public:
  Section(const Reader& reader, YAML::Node node, std::string path)
      : reader_(reader), node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      reader_.fail(node_, "'" + path_ + "' must be a mapping");
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return YAML::Node();
    return node_[key];
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) {
      used_.insert(key);
      return;
    }
    YAML::Node n = raw(key);
    out = convert<T>(n, key);
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) reader_.fail(n, "'" + qualified(key) + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      reader_.fail(n, "'" + qualified(key) + "' has invalid value '" + n.Scalar() + "'");
    }
  }

  Section child(const std::string& key) { return Section(reader_, raw(key), qualified(key)); }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) reader_.fail(kv.first, "unknown key '" + qualified(key) + "'");
    }
  }

  const YAML::Node& node() const { return node_; }
  const Reader& reader() const { return reader_; }

 private:
  const Reader& reader_;
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

Vec read_vector(const Reader& reader, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) reader.fail(n, "'" + what + "' must be a list of numbers");
  Vec v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = n[i].as<double>();
    } catch (const YAML::Exception&) {
      reader.fail(n[i], "'" + what + "' must be a list of numbers");
    }
  }
  return v;
}

RewardSpec read_reward(const Reader& reader, const YAML::Node& node, const std::string& path,
                       const DatasetConfig& dataset, int depth, std::string* name = nullptr) {
  if (!node || !node.IsMap()) reader.fail(node, "'" + path + "' must be a reward mapping");
  Section sec(reader, node, path);
  if (name) sec.get("name", *name);
  std::string type;
  if (!sec.has("type")) reader.fail(node, "'" + path + "' needs a 'type'");
  sec.get("type", type);
  RewardSpec spec;
  if (type == "target_mode") {
    if (sec.has("mode")) {
      int mode = 0;
      sec.get("mode", mode);
      const DatasetSpec ds = dataset.to_spec();
      if (mode < 0 || mode >= static_cast<int>(ds.components.size())) {
        reader.fail(node["mode"], "'" + path + ".mode' is not a component of the dataset");
      }
      spec.kind = TargetMode{ds.components[static_cast<std::size_t>(mode)].mean};
    } else {
      if (!sec.has("target")) reader.fail(node, "'" + path + "' needs 'target' or 'mode'");
      spec.kind = TargetMode{read_vector(reader, sec.raw("target"), path + ".target")};
    }
  } else if (type == "linear_score") {
    if (!sec.has("weights")) reader.fail(node, "'" + path + "' needs 'weights'");
    spec.kind = LinearScore{read_vector(reader, sec.raw("weights"), path + ".weights")};
  } else if (type == "radial_band") {
    RadialBand r;
    sec.get("radius", r.radius);
    sec.get("width", r.width);
    spec.kind = r;
  } else if (type == "quantized_code_length") {
    QuantizedCodeLength q;
    sec.get("cell", q.cell);
    spec.kind = q;
  } else if (type == "weighted_combo") {
    if (depth >= 2) reader.fail(node, "'" + path + "': rewards nest at most two levels deep");
    double w = 0.5;
    sec.get("weight", w);
    if (!sec.has("a") || !sec.has("b")) reader.fail(node, "'" + path + "' needs 'a' and 'b'");
    RewardSpec a = read_reward(reader, sec.raw("a"), path + ".a", dataset, depth + 1);
    RewardSpec b = read_reward(reader, sec.raw("b"), path + ".b", dataset, depth + 1);
    spec = make_combo(w, std::move(a), std::move(b));
  } else {
    reader.fail(node["type"], "unknown reward type '" + type + "'");
  }
  sec.finish();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    reader.fail(node, e.what());
  }
  return spec;
}

YAML::Node reward_node(const RewardSpec& spec) {
  YAML::Node n;
  std::visit(Overloaded{
                 [&](const TargetMode& r) {
                   n["type"] = "target_mode";
                   n["target"] = std::vector<double>(r.target.begin(), r.target.end());
                 },
                 [&](const LinearScore& r) {
                   n["type"] = "linear_score";
                   n["weights"] = std::vector<double>(r.weights.begin(), r.weights.end());
                 },
                 [&](const RadialBand& r) {
                   n["type"] = "radial_band";
                   n["radius"] = r.radius;
                   n["width"] = r.width;
                 },
                 [&](const QuantizedCodeLength& r) {
                   n["type"] = "quantized_code_length";
                   n["cell"] = r.cell;
                 },
                 [&](const WeightedCombo& r) {
                   n["type"] = "weighted_combo";
                   n["weight"] = r.weight;
                   n["a"] = reward_node(*r.a);
                   n["b"] = reward_node(*r.b);
                 },
             },
             spec.kind);
  return n;
}

void apply_override(YAML::Node root, const std::string& key, const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override '" + key + "': empty key segment");
    parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError("override with empty key");
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + key + "': " + e.msg);
  }
  // Nodes are held by copy-construction only; assigning one YAML::Node to
  // another would overwrite the referenced value.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const YAML::Node existing = chain.back()[parts[i]];
    if (!existing.IsDefined() || existing.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
    } else if (!existing.IsMap()) {
      throw ConfigError("override '" + key + "': '" + parts[i] + "' is not a section");
    }
    chain.push_back(chain.back()[parts[i]]);
  }
  chain.back()[parts.back()] = parsed;
}

void read_arch(Section sec, DenoiserArch& arch) {
  sec.get("data_dim", arch.data_dim);
  sec.get("embed_dim", arch.embed_dim);
  sec.get("hidden_width", arch.hidden_width);
  sec.get("hidden_layers", arch.hidden_layers);
  sec.get("time_frequencies", arch.time_frequencies);
  sec.finish();
}

void read_dataset(Section sec, DatasetConfig& d) {
  sec.get("kind", d.kind);
  sec.get("modes", d.modes);
  sec.get("radius", d.radius);
  sec.get("stddev", d.stddev);
  sec.get("classes", d.classes);
  sec.get("side", d.side);
  sec.get("spacing", d.spacing);
  sec.get("samples_per_class", d.samples_per_class);
  sec.get("seed", d.seed);
  if (sec.has("components")) {
    YAML::Node list = sec.raw("components");
    if (!list.IsSequence()) sec.reader().fail(list, "'dataset.components' must be a list");
    d.components.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section c(sec.reader(), list[i], "dataset.components[" + std::to_string(i) + "]");
      MixtureComponent comp;
      if (!c.has("mean")) sec.reader().fail(list[i], "component needs a 'mean'");
      comp.mean = read_vector(sec.reader(), c.raw("mean"), c.qualified("mean"));
      c.get("stddev", comp.stddev);
      c.get("label", comp.label);
      c.finish();
      d.components.push_back(comp);
    }
  } else {
    sec.raw("components");
  }
  sec.finish();
  try {
    d.to_spec().validate();
  } catch (const ConfigError& e) {
    sec.reader().fail(sec.node(), e.what());
  }
}

void read_alignment(Section sec, AlignmentConfig& a) {
  sec.get("lambda1", a.lambda1);
  sec.get("lambda2", a.lambda2);
  sec.get("sigma_phi_sq", a.sigma_phi_sq);
  sec.get("gamma", a.gamma);
  sec.get("n_min", a.n_min);
  sec.get("n_max", a.n_max);
  sec.get("particles", a.particles);
  sec.get("guidance_scale", a.guidance_scale);
  sec.get("learning_rate", a.learning_rate);
  sec.get("persist_moments", a.persist_moments);
  sec.get("reset_embedding_per_timestep", a.reset_embedding_per_timestep);
  if (sec.has("gradient")) {
    YAML::Node gnode = sec.raw("gradient");
    Section g(sec.reader(), gnode, "alignment.gradient");
    std::string mode = "analytic";
    g.get("mode", mode);
    if (mode == "analytic") {
      a.gradient = AnalyticGradient{};
    } else if (mode == "zeroth_order") {
      ZerothOrderGradient z;
      g.get("mu", z.mu);
      g.get("num_samples", z.num_samples);
      g.get("seed", z.seed);
      g.get("antithetic", z.antithetic);
      a.gradient = z;
    } else {
      sec.reader().fail(gnode["mode"], "unknown gradient mode '" + mode + "'");
    }
    g.finish();
  } else {
    sec.raw("gradient");
  }
  sec.finish();
  try {
    a.validate();
  } catch (const ConfigError& e) {
    sec.reader().fail(sec.node(), e.what());
  }
}

ExperimentConfig parse_node(const YAML::Node& doc, const Reader& reader) {
  if (!doc.IsMap()) reader.fail(doc, "configuration must be a mapping");
  YAML::Node root = doc;
  if (doc["config"] && doc["config"].IsMap()) root = doc["config"];

  ExperimentConfig cfg = default_experiment();
  Section top(reader, root, "");
  top.get("name", cfg.name);
  std::string method = to_string(cfg.method);
  top.get("method", method);
  try {
    cfg.method = method_from_string(method);
  } catch (const ConfigError& e) {
    reader.fail(root["method"], e.what());
  }
  top.get("label", cfg.label);
  top.get("samples", cfg.samples);
  top.get("threads", cfg.threads);
  if (top.has("seeds")) {
    YAML::Node s = top.raw("seeds");
    if (!s.IsSequence()) reader.fail(s, "'seeds' must be a list");
    cfg.seeds.clear();
    for (const auto& item : s) cfg.seeds.push_back(top.convert<std::uint64_t>(item, "seeds"));
  } else {
    top.raw("seeds");
  }

  // The dataset is read first so rewards can refer to its modes.
  read_dataset(top.child("dataset"), cfg.dataset);

  {
    Section m = top.child("model");
    m.get("checkpoint", cfg.model.checkpoint);
    m.get("init_seed", cfg.model.init_seed);
    read_arch(m.child("arch"), cfg.model.arch);
    Section s = m.child("schedule");
    s.get("total_steps", cfg.model.schedule.total_steps);
    s.get("beta_start", cfg.model.schedule.beta_start);
    s.get("beta_end", cfg.model.schedule.beta_end);
    s.finish();
    Section t = m.child("training");
    t.get("steps", cfg.model.training.steps);
    t.get("batch_size", cfg.model.training.batch_size);
    t.get("condition_dropout", cfg.model.training.condition_dropout);
    t.get("learning_rate", cfg.model.training.optimizer.learning_rate);
    t.get("ema_decay", cfg.model.training.ema_decay);
    t.get("seed", cfg.model.training.seed);
    t.finish();
    m.finish();
  }

  read_alignment(top.child("alignment"), cfg.alignment);

  {
    Section b = top.child("baseline");
    b.get("n", cfg.baseline.n);
    b.get("zeta", cfg.baseline.zeta);
    b.get("steps", cfg.baseline.steps);
    b.get("rate", cfg.baseline.rate);
    b.finish();
  }

  {
    Section r = top.child("reward");
    if (r.has("target")) {
      std::string name = cfg.target.name;
      cfg.target.spec = read_reward(reader, r.raw("target"), "reward.target", cfg.dataset, 0, &name);
      cfg.target.name = name;
    } else {
      r.raw("target");
    }
    if (r.has("held_out")) {
      YAML::Node list = r.raw("held_out");
      if (!list.IsSequence()) reader.fail(list, "'reward.held_out' must be a list");
      cfg.held_out.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "reward.held_out[" + std::to_string(i) + "]";
        std::string name = "held_out_" + std::to_string(i);
        RewardSpec spec = read_reward(reader, list[i], path, cfg.dataset, 0, &name);
        cfg.held_out.push_back({name, spec});
      }
    } else {
      r.raw("held_out");
    }
    r.finish();
  }

  {
    Section s = top.child("sweep");
    std::string axis = to_string(cfg.sweep.axis);
    s.get("axis", axis);
    try {
      cfg.sweep.axis = sweep_axis_from_string(axis);
    } catch (const ConfigError& e) {
      reader.fail(s.node()["axis"], e.what());
    }
    if (s.has("values")) {
      YAML::Node list = s.raw("values");
      if (!list.IsSequence()) reader.fail(list, "'sweep.values' must be a list");
      cfg.sweep.values.clear();
      for (const auto& item : list) {
        if (item.IsSequence()) {
          Vec v = read_vector(reader, item, "sweep.values");
          cfg.sweep.values.emplace_back(v.begin(), v.end());
        } else {
          cfg.sweep.values.push_back({s.convert<double>(item, "values")});
        }
      }
    } else {
      s.raw("values");
    }
    s.finish();
  }

  {
    Section o = top.child("output");
    o.get("dir", cfg.output_dir);
    o.get("format", cfg.format);
    o.finish();
  }
  top.finish();
  cfg.model.arch.num_classes = cfg.dataset.to_spec().num_classes();
  cfg.model.arch.total_steps = cfg.model.schedule.total_steps;

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    reader.fail(root, e.what());
  }
  return cfg;
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

DatasetSpec DatasetConfig::to_spec() const {
  DatasetSpec spec;
  if (kind == "ring") {
    spec = ring_spec(modes, radius, stddev, classes, samples_per_class, seed);
  } else if (kind == "grid") {
    spec = grid_spec(side, spacing, stddev, samples_per_class, seed);
  } else if (kind == "gaussian_mixture") {
    spec.kind = DatasetKind::GaussianMixture;
    spec.components = components;
    spec.samples_per_class = samples_per_class;
    spec.seed = seed;
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::NullTta: return "null_tta";
    case Method::Unaligned: return "unaligned";
    case Method::BestOfN: return "best_of_n";
    case Method::StepGuidance: return "step_guidance";
    case Method::NoiseOpt: return "noise_opt";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::NullTta, Method::Unaligned, Method::BestOfN, Method::StepGuidance,
                   Method::NoiseOpt}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::NMax: return "n_max";
    case SweepAxis::Particles: return "particles";
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::Weight: return "weight";
    case SweepAxis::Zeta: return "zeta";
    case SweepAxis::NoiseSteps: return "noise_steps";
    case SweepAxis::BestOfN: return "best_of_n";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  for (SweepAxis a : {SweepAxis::None, SweepAxis::NMax, SweepAxis::Particles, SweepAxis::Gamma,
                      SweepAxis::Lambda, SweepAxis::Weight, SweepAxis::Zeta,
                      SweepAxis::NoiseSteps, SweepAxis::BestOfN}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string SweepConfig::label(std::size_t group) const {
  if (axis == SweepAxis::None) return "";
  std::string out;
  const auto& v = values.at(group);
  for (std::size_t i = 0; i < v.size(); ++i) {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v[i]).ptr;  // shortest round trip
    out += (i ? "/" : "") + std::string(buf, end);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  model.arch.validate();
  if (label < 0 || label >= model.arch.num_classes) throw ConfigError("label is not a class");
  alignment.validate();
  baseline_config(0).validate();
  target.spec.validate();
  for (const auto& r : held_out) r.spec.validate();
  const bool needs_grad = method == Method::StepGuidance ||
                          (method == Method::NoiseOpt && baseline.steps > 0) ||
                          (method == Method::NullTta &&
                           std::holds_alternative<AnalyticGradient>(alignment.gradient));
  if (needs_grad && !target.spec.differentiable()) {
    throw ConfigError("method " + to_string(method) + " needs a differentiable target reward");
  }

  if (sweep.axis == SweepAxis::None) return;
  if (sweep.values.empty()) throw ConfigError("sweep values must not be empty");
  for (const auto& v : sweep.values) {
    const std::size_t want = sweep.axis == SweepAxis::Lambda ? 3 : 1;
    if (v.size() != want) {
      throw ConfigError("sweep axis " + to_string(sweep.axis) + " takes " +
                        std::to_string(want) + " number(s) per value");
    }
    switch (sweep.axis) {
      case SweepAxis::NMax:
        if (!is_integral(v[0]) || v[0] < alignment.n_min)
          throw ConfigError("n_max sweep values must be integers >= n_min");
        break;
      case SweepAxis::Particles:
      case SweepAxis::BestOfN:
        if (!is_integral(v[0]) || v[0] < 1)
          throw ConfigError(to_string(sweep.axis) + " sweep values must be integers >= 1");
        break;
      case SweepAxis::NoiseSteps:
        if (!is_integral(v[0]) || v[0] < 0)
          throw ConfigError("noise_steps sweep values must be integers >= 0");
        break;
      case SweepAxis::Gamma:
        if (!(v[0] > 0.0)) throw ConfigError("gamma sweep values must be > 0");
        break;
      case SweepAxis::Lambda:
        if (!(v[0] >= 0.0 && v[1] >= 0.0 && v[2] > 0.0))
          throw ConfigError("lambda sweep triples need lambda1, lambda2 >= 0 and sigma_phi_sq > 0");
        break;
      case SweepAxis::Weight:
        if (!(v[0] >= 0.0 && v[0] <= 1.0)) throw ConfigError("weight sweep values must be in [0, 1]");
        if (!std::holds_alternative<WeightedCombo>(target.spec.kind))
          throw ConfigError("weight sweep needs a weighted_combo target reward");
        break;
      case SweepAxis::Zeta:
        if (!std::isfinite(v[0])) throw ConfigError("zeta sweep values must be finite");
        break;
      case SweepAxis::None:
        break;
    }
  }
  const bool alignment_axis = sweep.axis == SweepAxis::NMax || sweep.axis == SweepAxis::Particles ||
                              sweep.axis == SweepAxis::Gamma || sweep.axis == SweepAxis::Lambda;
  if ((sweep.axis == SweepAxis::Zeta && method != Method::StepGuidance) ||
      (sweep.axis == SweepAxis::NoiseSteps && method != Method::NoiseOpt) ||
      (sweep.axis == SweepAxis::BestOfN && method != Method::BestOfN) ||
      (alignment_axis && method != Method::NullTta)) {
    throw ConfigError("sweep axis " + to_string(sweep.axis) + " does not apply to method " +
                      to_string(method));
  }
}

BaselineConfig ExperimentConfig::baseline_config(std::uint64_t seed) const {
  BaselineConfig b;
  b.guidance_scale = alignment.guidance_scale;
  b.seed = seed;
  switch (method) {
    case Method::BestOfN: b.variant = BestOfN{baseline.n}; break;
    case Method::StepGuidance: b.variant = StepGuidance{baseline.zeta}; break;
    case Method::NoiseOpt: b.variant = NoiseOpt{baseline.steps, baseline.rate}; break;
    case Method::Unaligned:
    case Method::NullTta: b.variant = Unaligned{}; break;
  }
  return b;
}

ExperimentConfig ExperimentConfig::for_group(std::size_t group) const {
  ExperimentConfig c = *this;
  c.sweep = SweepConfig{};
  if (sweep.axis == SweepAxis::None) return c;
  const auto& v = sweep.values.at(group);
  switch (sweep.axis) {
    case SweepAxis::NMax: c.alignment.n_max = static_cast<int>(v[0]); break;
    case SweepAxis::Particles: c.alignment.particles = static_cast<int>(v[0]); break;
    case SweepAxis::Gamma: c.alignment.gamma = v[0]; break;
    case SweepAxis::Lambda:
      c.alignment.lambda1 = v[0];
      c.alignment.lambda2 = v[1];
      c.alignment.sigma_phi_sq = v[2];
      break;
    case SweepAxis::Weight: {
      const auto& combo = std::get<WeightedCombo>(target.spec.kind);
      c.target.spec = make_combo(v[0], *combo.a, *combo.b);
      break;
    }
    case SweepAxis::Zeta: c.baseline.zeta = v[0]; break;
    case SweepAxis::NoiseSteps: c.baseline.steps = static_cast<int>(v[0]); break;
    case SweepAxis::BestOfN: c.baseline.n = static_cast<int>(v[0]); break;
    case SweepAxis::None: break;
  }
  return c;
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  const DatasetSpec ds = cfg.dataset.to_spec();
  cfg.model.arch.num_classes = ds.num_classes();
  cfg.model.arch.total_steps = cfg.model.schedule.total_steps;
  cfg.target = {"target_mode_1", RewardSpec{TargetMode{ds.components[1].mean}}};
  Vec a(2);
  a << 1.0, 0.0;
  cfg.held_out = {
      {"target_mode_0", RewardSpec{TargetMode{ds.components[0].mean}}},
      {"linear_x", RewardSpec{LinearScore{a}}},
      {"radial_band", RewardSpec{RadialBand{cfg.dataset.radius, 0.5}}},
  };
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const Overrides& overrides) {
  Reader reader(source);
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    std::ostringstream os;
    os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
    throw ConfigError(os.str());
  }
  if (!doc || doc.IsNull()) doc = YAML::Node(YAML::NodeType::Map);
  if (!overrides.empty()) {
    if (!doc.IsMap()) reader.fail(doc, "configuration must be a mapping");
    YAML::Node root = doc["config"] && doc["config"].IsMap() ? doc["config"] : doc;
    for (const auto& [key, value] : overrides) apply_override(root, key, value);
  }
  return parse_node(doc, reader);
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  std::string line;
  const bool csv = path.extension() == ".csv";
  bool first = true;
  while (std::getline(in, line)) {
    if (!csv) {
      text << line << '\n';
      continue;
    }
    // CSV results carry the config echo as "# " lines ahead of the header.
    if (line.empty() || line[0] != '#') break;
    if (first && line.rfind("# ntta ", 0) == 0) {
      text << '\n';
    } else {
      text << (line.size() > 2 ? line.substr(2) : std::string()) << '\n';
    }
    first = false;
  }
  return parse_config(text.str(), path.string(), overrides);
}

std::string dump_config(const ExperimentConfig& c) {
  YAML::Node n;
  n["name"] = c.name;
  n["method"] = to_string(c.method);
  n["label"] = c.label;
  n["seeds"] = c.seeds;
  n["samples"] = c.samples;
  n["threads"] = c.threads;

  YAML::Node d;
  d["kind"] = c.dataset.kind;
  d["modes"] = c.dataset.modes;
  d["radius"] = c.dataset.radius;
  d["stddev"] = c.dataset.stddev;
  d["classes"] = c.dataset.classes;
  d["side"] = c.dataset.side;
  d["spacing"] = c.dataset.spacing;
  d["samples_per_class"] = c.dataset.samples_per_class;
  d["seed"] = c.dataset.seed;
  YAML::Node comps(YAML::NodeType::Sequence);
  for (const auto& comp : c.dataset.components) {
    YAML::Node e;
    e["mean"] = std::vector<double>(comp.mean.begin(), comp.mean.end());
    e["stddev"] = comp.stddev;
    e["label"] = comp.label;
    comps.push_back(e);
  }
  d["components"] = comps;
  n["dataset"] = d;

  YAML::Node m;
  m["checkpoint"] = c.model.checkpoint;
  m["init_seed"] = c.model.init_seed;
  const auto& ar = c.model.arch;
  m["arch"]["data_dim"] = ar.data_dim;
  m["arch"]["embed_dim"] = ar.embed_dim;
  m["arch"]["hidden_width"] = ar.hidden_width;
  m["arch"]["hidden_layers"] = ar.hidden_layers;
  m["arch"]["time_frequencies"] = ar.time_frequencies;
  m["schedule"]["total_steps"] = c.model.schedule.total_steps;
  m["schedule"]["beta_start"] = c.model.schedule.beta_start;
  m["schedule"]["beta_end"] = c.model.schedule.beta_end;
  m["training"]["steps"] = c.model.training.steps;
  m["training"]["batch_size"] = c.model.training.batch_size;
  m["training"]["condition_dropout"] = c.model.training.condition_dropout;
  m["training"]["learning_rate"] = c.model.training.optimizer.learning_rate;
  m["training"]["ema_decay"] = c.model.training.ema_decay;
  m["training"]["seed"] = c.model.training.seed;
  n["model"] = m;

  YAML::Node a;
  const auto& al = c.alignment;
  a["lambda1"] = al.lambda1;
  a["lambda2"] = al.lambda2;
  a["sigma_phi_sq"] = al.sigma_phi_sq;
  a["gamma"] = al.gamma;
  a["n_min"] = al.n_min;
  a["n_max"] = al.n_max;
  a["particles"] = al.particles;
  a["guidance_scale"] = al.guidance_scale;
  a["learning_rate"] = al.learning_rate;
  a["persist_moments"] = al.persist_moments;
  a["reset_embedding_per_timestep"] = al.reset_embedding_per_timestep;
  if (const auto* z = std::get_if<ZerothOrderGradient>(&al.gradient)) {
    a["gradient"]["mode"] = "zeroth_order";
    a["gradient"]["mu"] = z->mu;
    a["gradient"]["num_samples"] = z->num_samples;
    a["gradient"]["seed"] = z->seed;
    a["gradient"]["antithetic"] = z->antithetic;
  } else {
    a["gradient"]["mode"] = "analytic";
  }
  n["alignment"] = a;

  n["baseline"]["n"] = c.baseline.n;
  n["baseline"]["zeta"] = c.baseline.zeta;
  n["baseline"]["steps"] = c.baseline.steps;
  n["baseline"]["rate"] = c.baseline.rate;

  YAML::Node target = reward_node(c.target.spec);
  target["name"] = c.target.name;
  n["reward"]["target"] = target;
  YAML::Node held(YAML::NodeType::Sequence);
  for (const auto& r : c.held_out) {
    YAML::Node e = reward_node(r.spec);
    e["name"] = r.name;
    held.push_back(e);
  }
  n["reward"]["held_out"] = held;

  n["sweep"]["axis"] = to_string(c.sweep.axis);
  YAML::Node values(YAML::NodeType::Sequence);
  for (const auto& v : c.sweep.values) {
    if (v.size() == 1) values.push_back(v[0]);
    else values.push_back(v);
  }
  n["sweep"]["values"] = values;

  n["output"]["dir"] = c.output_dir;
  n["output"]["format"] = c.format;

  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out.SetSeqFormat(YAML::Flow);
  out << n;
  return std::string(out.c_str()) + "\n";
}

RewardSpec parse_reward(const std::string& text, const DatasetConfig& dataset) {
  Reader reader("<reward>");
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<reward>: " + e.msg);
  }
  return read_reward(reader, node, "reward", dataset, 0);
}

}  // namespace ntta
