#include "graftnet/config.hpp"

#include "graftnet/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace graftnet {

namespace {

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(section + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(section + "." + key + ": cannot convert '" + YAML::Dump(node[key]) + "'");
  }
}

Shape read_shape(const YAML::Node& node, const std::string& where) {
  if (!node || !node.IsSequence()) throw ConfigError(where + " must be a list of extents");
  Shape s;
  for (const auto& d : node) s.push_back(d.as<std::size_t>());
  return s;
}

Architecture architecture_from(const YAML::Node& node, const std::string& section) {
  check_keys(node, section, {"input", "layers"});
  Architecture arch;
  arch.input = read_shape(node["input"], section + ".input");
  const auto layers = node["layers"];
  if (!layers || !layers.IsSequence()) throw ConfigError(section + ".layers must be a list");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto l = layers[i];
    const std::string where = section + ".layers[" + std::to_string(i) + "]";
    check_keys(l, where, {"type", "channels", "units", "kernel", "stride", "padding"});
    std::string type;
    read(l, "type", type, where);
    LayerSpec spec;
    if (type == "conv") {
      spec.kind = LayerSpec::Kind::Conv;
      read(l, "channels", spec.units, where);
      spec.kernel = 3;
      read(l, "kernel", spec.kernel, where);
      read(l, "stride", spec.stride, where);
      read(l, "padding", spec.padding, where);
    } else if (type == "dense") {
      spec.kind = LayerSpec::Kind::Dense;
      read(l, "units", spec.units, where);
    } else if (type == "relu") {
      spec.kind = LayerSpec::Kind::Relu;
    } else if (type == "maxpool") {
      spec.kind = LayerSpec::Kind::MaxPool;
      spec.kernel = 2;
      read(l, "kernel", spec.kernel, where);
      read(l, "stride", spec.stride, where);
    } else if (type == "flatten") {
      spec.kind = LayerSpec::Kind::Flatten;
    } else {
      throw ConfigError(where + ": unknown layer type '" + type + "'");
    }
    arch.layers.push_back(spec);
  }
  return arch;
}

const std::set<std::string> kTrainerKeys{"learning_rate", "momentum", "weight_decay", "batch_size", "epochs",
                                         "lr_decay_factor", "lr_decay_period_epochs", "seed", "loader_seed"};

TrainerConfig trainer_from(const YAML::Node& node, const std::string& section, TrainerConfig t,
                           std::set<std::string> extra = {}) {
  auto keys = kTrainerKeys;
  keys.insert(extra.begin(), extra.end());
  check_keys(node, section, keys);
  read(node, "learning_rate", t.learning_rate, section);
  read(node, "momentum", t.momentum, section);
  read(node, "weight_decay", t.weight_decay, section);
  read(node, "batch_size", t.batch_size, section);
  read(node, "epochs", t.epochs, section);
  read(node, "lr_decay_factor", t.lr_decay_factor, section);
  read(node, "lr_decay_period_epochs", t.lr_decay_period_epochs, section);
  read(node, "seed", t.seed, section);
  read(node, "loader_seed", t.loader_seed, section);
  return t;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1);
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir) {
  const YAML::Node root = parse_yaml(text);
  if (!root.IsMap()) throw ConfigError("experiment config must be a mapping");
  check_keys(root, "config", {"seed", "students", "teachers", "max_iterations", "architecture",
                              "teacher_architecture", "trainer", "trainers", "graft", "distill", "data", "output"});
  ExperimentConfig cfg;
  read(root, "seed", cfg.seed, "config");
  read(root, "students", cfg.num_students, "config");
  read(root, "teachers", cfg.num_teachers, "config");
  read(root, "max_iterations", cfg.max_iterations, "config");

  if (!root["architecture"]) throw ConfigError("config needs an architecture section");
  cfg.architecture = architecture_from(root["architecture"], "architecture");
  if (root["teacher_architecture"])
    cfg.teacher_architecture = architecture_from(root["teacher_architecture"], "teacher_architecture");

  const std::size_t total = cfg.num_students + cfg.num_teachers;
  if (root["trainers"]) {
    const auto list = root["trainers"];
    if (!list.IsSequence()) throw ConfigError("trainers must be a list");
    for (std::size_t k = 0; k < list.size(); ++k)
      cfg.trainers.push_back(trainer_from(list[k], "trainers[" + std::to_string(k) + "]", TrainerConfig{}));
  } else {
    TrainerConfig base;
    base.seed = cfg.seed;
    base.loader_seed = cfg.seed;
    bool diversify_networks = true;
    if (root["trainer"]) {
      base = trainer_from(root["trainer"], "trainer", base, {"diversify"});
      read(root["trainer"], "diversify", diversify_networks, "trainer");
    }
    for (std::size_t k = 0; k < total; ++k) {
      TrainerConfig t = diversify(base, k);
      if (!diversify_networks) t.learning_rate = base.learning_rate;
      cfg.trainers.push_back(t);
    }
  }

  if (const auto g = root["graft"]) {
    check_keys(g, "graft", {"enabled", "scion_source", "criterion", "A", "c", "bin_count", "gamma", "noise_decay_a",
                            "period_iterations", "alpha_clamp_epsilon", "graft_dense", "internal_additive"});
    read(g, "enabled", cfg.graft_enabled, "graft");
    std::string s;
    if (g["scion_source"]) {
      read(g, "scion_source", s, "graft");
      cfg.graft.scion_source = parse_scion_source(s);
    }
    if (g["criterion"]) {
      read(g, "criterion", s, "graft");
      cfg.graft.criterion = parse_criterion(s);
    }
    read(g, "A", cfg.graft.A, "graft");
    read(g, "c", cfg.graft.c, "graft");
    read(g, "bin_count", cfg.graft.bin_count, "graft");
    read(g, "gamma", cfg.graft.invalid_threshold_gamma, "graft");
    read(g, "noise_decay_a", cfg.graft.noise_decay_a, "graft");
    read(g, "period_iterations", cfg.graft.graft_period_iters, "graft");
    read(g, "alpha_clamp_epsilon", cfg.graft.alpha_clamp_epsilon, "graft");
    read(g, "graft_dense", cfg.graft.graft_dense, "graft");
    read(g, "internal_additive", cfg.graft.internal_additive, "graft");
  }

  if (const auto d = root["distill"]) {
    check_keys(d, "distill", {"temperature", "kd_weight", "teacher_checkpoints"});
    read(d, "temperature", cfg.distill.temperature, "distill");
    read(d, "kd_weight", cfg.distill.kd_weight, "distill");
    if (d["teacher_checkpoints"])
      for (const auto& p : d["teacher_checkpoints"])
        cfg.teacher_checkpoints.push_back(resolve(base_dir, p.as<std::string>()));
  }

  if (const auto d = root["data"]) {
    check_keys(d, "data", {"source", "num_classes", "train_per_class", "test_per_class", "image_size", "seed",
                           "channels", "blobs_per_class", "pixel_noise", "max_shift", "pattern_seed", "train_csv",
                           "test_csv", "image_shape", "augment"});
    std::string source = "synthetic";
    read(d, "source", source, "data");
    if (source == "csv")
      cfg.data.source = DataConfig::Source::Csv;
    else if (source != "synthetic")
      throw ConfigError("data.source must be synthetic or csv");
    read(d, "num_classes", cfg.data.num_classes, "data");
    read(d, "train_per_class", cfg.data.train_per_class, "data");
    read(d, "test_per_class", cfg.data.test_per_class, "data");
    read(d, "image_size", cfg.data.image_size, "data");
    read(d, "seed", cfg.data.seed, "data");
    read(d, "channels", cfg.data.style.channels, "data");
    read(d, "blobs_per_class", cfg.data.style.blobs_per_class, "data");
    read(d, "pixel_noise", cfg.data.style.pixel_noise, "data");
    read(d, "max_shift", cfg.data.style.max_shift, "data");
    read(d, "pattern_seed", cfg.data.style.pattern_seed, "data");
    read(d, "augment", cfg.data.augment, "data");
    if (d["train_csv"]) cfg.data.train_csv = resolve(base_dir, d["train_csv"].as<std::string>());
    if (d["test_csv"]) cfg.data.test_csv = resolve(base_dir, d["test_csv"].as<std::string>());
    if (d["image_shape"]) cfg.data.image_shape = read_shape(d["image_shape"], "data.image_shape");
  }

  if (const auto o = root["output"]) {
    check_keys(o, "output", {"dir", "metrics_format", "checkpoint_every_epochs"});
    if (o["dir"]) cfg.output_dir = resolve(base_dir, o["dir"].as<std::string>());
    std::string fmt = "csv";
    read(o, "metrics_format", fmt, "output");
    if (fmt == "jsonl" || fmt == "json-lines")
      cfg.metrics_format = MetricsFormat::JsonLines;
    else if (fmt != "csv")
      throw ConfigError("output.metrics_format must be csv or jsonl");
    read(o, "checkpoint_every_epochs", cfg.checkpoint_every_epochs, "output");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(slurp(path), path.parent_path());
}

Architecture parse_architecture(const std::string& text) {
  const YAML::Node root = parse_yaml(text);
  if (root.IsMap() && root["architecture"]) return architecture_from(root["architecture"], "architecture");
  return architecture_from(root, "architecture");
}

Architecture load_architecture(const std::filesystem::path& path) { return parse_architecture(slurp(path)); }

void reseed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  for (std::size_t k = 0; k < cfg.trainers.size(); ++k) {
    cfg.trainers[k].seed = seed + k;
    cfg.trainers[k].loader_seed = seed + k;
  }
}

}  // namespace graftnet
