#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "augsearch/augment.hpp"
#include "augsearch/rng.hpp"

namespace augsearch {

// Full run configuration. Defaults follow the reference training recipe:
// policy Adam lr 0.05 with betas (0.5, 0.999), 8 trajectories, SGD momentum
// 0.9 and weight decay 5e-4.
struct RunConfig {
  // dataset
  std::string dataset = "synthetic";  // synthetic | cifar10
  std::string data_dir;               // cifar10 batch directory
  int synthetic_samples = 512;
  int synthetic_image_size = 12;
  int synthetic_channels = 1;
  std::string synthetic_destructive = "Invert";
  int val_size = 128;

  // model + inner optimizer
  std::string model = "mlp";  // mlp | smallcnn
  int batch_size = 256;
  double base_lr = 0.2;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int warmup_steps = 0;
  double warmup_start = 0.0;

  // loop sizes: inner_steps 0 = one epoch (ceil(train_size / batch_size))
  int inner_steps = 0;
  int outer_steps = 300;

  // policy optimizer
  double policy_lr = 0.05;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int trajectories = 8;
  bool no_baseline = false;
  std::vector<int> ops;  // operation-index whitelist; empty = all 1296

  // basic pre-processing
  double flip_prob = 0.5;
  int pad = 4;
  int crop = 0;  // 0 = input size
  int cutout = 16;
  bool enable_flip = true;
  bool enable_pad_crop = true;
  bool enable_cutout = true;

  // run control
  std::uint64_t seed = 1;
  std::string out_dir = "run_out";
  int workers = 0;  // 0 = one per trajectory
  bool export_snapshots = false;
  int val_subsample = 0;  // 0 = full validation split
};

namespace detail {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = {
      {"dataset", [](RunConfig& c, const std::string& v) { c.dataset = v; }},
      {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
      {"synthetic_samples",
       [](RunConfig& c, const std::string& v) { c.synthetic_samples = std::stoi(v); }},
      {"synthetic_image_size",
       [](RunConfig& c, const std::string& v) { c.synthetic_image_size = std::stoi(v); }},
      {"synthetic_channels",
       [](RunConfig& c, const std::string& v) { c.synthetic_channels = std::stoi(v); }},
      {"synthetic_destructive",
       [](RunConfig& c, const std::string& v) { c.synthetic_destructive = v; }},
      {"val_size", [](RunConfig& c, const std::string& v) { c.val_size = std::stoi(v); }},
      {"model", [](RunConfig& c, const std::string& v) { c.model = v; }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = std::stoi(v); }},
      {"base_lr", [](RunConfig& c, const std::string& v) { c.base_lr = std::stod(v); }},
      {"momentum", [](RunConfig& c, const std::string& v) { c.momentum = std::stod(v); }},
      {"weight_decay",
       [](RunConfig& c, const std::string& v) { c.weight_decay = std::stod(v); }},
      {"warmup_steps",
       [](RunConfig& c, const std::string& v) { c.warmup_steps = std::stoi(v); }},
      {"warmup_start",
       [](RunConfig& c, const std::string& v) { c.warmup_start = std::stod(v); }},
      {"inner_steps",
       [](RunConfig& c, const std::string& v) {
         c.inner_steps = (v == "auto") ? 0 : std::stoi(v);
       }},
      {"outer_steps",
       [](RunConfig& c, const std::string& v) { c.outer_steps = std::stoi(v); }},
      {"policy_lr", [](RunConfig& c, const std::string& v) { c.policy_lr = std::stod(v); }},
      {"adam_beta1", [](RunConfig& c, const std::string& v) { c.adam_beta1 = std::stod(v); }},
      {"adam_beta2", [](RunConfig& c, const std::string& v) { c.adam_beta2 = std::stod(v); }},
      {"adam_eps", [](RunConfig& c, const std::string& v) { c.adam_eps = std::stod(v); }},
      {"trajectories",
       [](RunConfig& c, const std::string& v) { c.trajectories = std::stoi(v); }},
      {"no_baseline",
       [](RunConfig& c, const std::string& v) { c.no_baseline = parse_bool(v); }},
      {"ops", [](RunConfig& c, const std::string& v) { c.ops = parse_int_list(v); }},
      {"flip_prob", [](RunConfig& c, const std::string& v) { c.flip_prob = std::stod(v); }},
      {"pad", [](RunConfig& c, const std::string& v) { c.pad = std::stoi(v); }},
      {"crop", [](RunConfig& c, const std::string& v) { c.crop = std::stoi(v); }},
      {"cutout", [](RunConfig& c, const std::string& v) { c.cutout = std::stoi(v); }},
      {"enable_flip",
       [](RunConfig& c, const std::string& v) { c.enable_flip = parse_bool(v); }},
      {"enable_pad_crop",
       [](RunConfig& c, const std::string& v) { c.enable_pad_crop = parse_bool(v); }},
      {"enable_cutout",
       [](RunConfig& c, const std::string& v) { c.enable_cutout = parse_bool(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"workers", [](RunConfig& c, const std::string& v) { c.workers = std::stoi(v); }},
      {"export_snapshots",
       [](RunConfig& c, const std::string& v) { c.export_snapshots = parse_bool(v); }},
      {"val_subsample",
       [](RunConfig& c, const std::string& v) { c.val_subsample = std::stoi(v); }},
  };
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
  using detail::ConfigError;
  if (c.dataset != "synthetic" && c.dataset != "cifar10")
    throw ConfigError("dataset: must be 'synthetic' or 'cifar10'");
  if (c.dataset == "cifar10" && !std::filesystem::is_directory(c.data_dir))
    throw ConfigError("data_dir: directory does not exist: " + c.data_dir);
  if (c.dataset == "synthetic") {
    try {
      kind_from_name(c.synthetic_destructive);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("synthetic_destructive: ") + e.what());
    }
    if (c.val_size >= c.synthetic_samples)
      throw ConfigError("val_size: must be smaller than synthetic_samples");
  }
  if (c.val_size <= 0) throw ConfigError("val_size: must be positive");
  if (c.model != "mlp" && c.model != "smallcnn")
    throw ConfigError("model: must be 'mlp' or 'smallcnn'");
  if (c.batch_size <= 0) throw ConfigError("batch_size: must be positive");
  if (c.base_lr <= 0.0) throw ConfigError("base_lr: must be positive");
  if (c.momentum < 0.0 || c.momentum >= 1.0)
    throw ConfigError("momentum: must be in [0, 1)");
  if (c.weight_decay < 0.0) throw ConfigError("weight_decay: must be >= 0");
  if (c.warmup_steps < 0) throw ConfigError("warmup_steps: must be >= 0");
  if (c.inner_steps < 0)
    throw ConfigError("inner_steps: must be >= 1, or omitted for one epoch");
  if (c.outer_steps <= 0) throw ConfigError("outer_steps: must be positive");
  if (c.policy_lr < 0.0) throw ConfigError("policy_lr: must be >= 0");
  if (c.adam_beta1 < 0.0 || c.adam_beta1 >= 1.0)
    throw ConfigError("adam_beta1: must be in [0, 1)");
  if (c.adam_beta2 < 0.0 || c.adam_beta2 >= 1.0)
    throw ConfigError("adam_beta2: must be in [0, 1)");
  if (c.adam_eps <= 0.0) throw ConfigError("adam_eps: must be positive");
  if (c.trajectories < 1) throw ConfigError("trajectories: must be >= 1");
  if (c.trajectories == 1 && !c.no_baseline)
    throw ConfigError(
        "trajectories: N = 1 with the zero-mean baseline yields an exactly "
        "zero gradient; set no_baseline = true to run a single trajectory");
  for (int k : c.ops)
    if (k < 0 || k >= kNumOperations)
      throw ConfigError("ops: operation index out of [0, 1296): " +
                        std::to_string(k));
  if (c.workers < 0) throw ConfigError("workers: must be >= 0");
  if (c.val_subsample < 0) throw ConfigError("val_subsample: must be >= 0");
}

// Parses the flat key = value format. Unknown keys are rejected with their
// line number; '#' starts a comment.
inline RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw detail::ConfigError(path + ":" + std::to_string(lineno) +
                                ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& keys = detail::config_keys();
    const auto it = keys.find(key);
    if (it == keys.end())
      throw detail::ConfigError(path + ":" + std::to_string(lineno) +
                                ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const detail::ConfigError& e) {
      throw detail::ConfigError(path + ":" + std::to_string(lineno) + ": " +
                                key + ": " + e.what());
    } catch (const std::exception&) {
      throw detail::ConfigError(path + ":" + std::to_string(lineno) +
                                ": invalid value for '" + key + "': " + value);
    }
    if (key == "inner_steps" && value != "auto" && cfg.inner_steps < 1)
      throw detail::ConfigError(path + ":" + std::to_string(lineno) +
                                ": inner_steps: must be >= 1 or 'auto'");
  }
  validate_config(cfg);
  return cfg;
}

// Serializes every key with its materialized value, plus the derivation rules
// for all random streams flowing from the run seed.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "dataset = " << c.dataset << '\n';
  os << "data_dir = " << c.data_dir << '\n';
  os << "synthetic_samples = " << c.synthetic_samples << '\n';
  os << "synthetic_image_size = " << c.synthetic_image_size << '\n';
  os << "synthetic_channels = " << c.synthetic_channels << '\n';
  os << "synthetic_destructive = " << c.synthetic_destructive << '\n';
  os << "val_size = " << c.val_size << '\n';
  os << "model = " << c.model << '\n';
  os << "batch_size = " << c.batch_size << '\n';
  os << "base_lr = " << fmt(c.base_lr) << '\n';
  os << "momentum = " << fmt(c.momentum) << '\n';
  os << "weight_decay = " << fmt(c.weight_decay) << '\n';
  os << "warmup_steps = " << c.warmup_steps << '\n';
  os << "warmup_start = " << fmt(c.warmup_start) << '\n';
  if (c.inner_steps == 0)
    os << "inner_steps = auto  # one epoch: ceil(train_size / batch_size)\n";
  else
    os << "inner_steps = " << c.inner_steps << '\n';
  os << "outer_steps = " << c.outer_steps << '\n';
  os << "policy_lr = " << fmt(c.policy_lr) << '\n';
  os << "adam_beta1 = " << fmt(c.adam_beta1) << '\n';
  os << "adam_beta2 = " << fmt(c.adam_beta2) << '\n';
  os << "adam_eps = " << fmt(c.adam_eps) << '\n';
  os << "trajectories = " << c.trajectories << '\n';
  os << "no_baseline = " << (c.no_baseline ? "true" : "false") << '\n';
  os << "ops = ";
  for (std::size_t i = 0; i < c.ops.size(); ++i)
    os << (i ? "," : "") << c.ops[i];
  os << '\n';
  os << "flip_prob = " << fmt(c.flip_prob) << '\n';
  os << "pad = " << c.pad << '\n';
  os << "crop = " << c.crop << (c.crop == 0 ? "  # 0 = input size" : "") << '\n';
  os << "cutout = " << c.cutout << '\n';
  os << "enable_flip = " << (c.enable_flip ? "true" : "false") << '\n';
  os << "enable_pad_crop = " << (c.enable_pad_crop ? "true" : "false") << '\n';
  os << "enable_cutout = " << (c.enable_cutout ? "true" : "false") << '\n';
  os << "seed = " << c.seed << '\n';
  os << "out_dir = " << c.out_dir << '\n';
  os << "workers = " << c.workers
     << (c.workers == 0 ? "  # 0 = one per trajectory" : "") << '\n';
  os << "export_snapshots = " << (c.export_snapshots ? "true" : "false") << '\n';
  os << "val_subsample = " << c.val_subsample
     << (c.val_subsample == 0 ? "  # 0 = full validation split" : "") << '\n';
  os << "#\n";
  os << "# Random streams, all derived from `seed` via mix64:\n";
  os << "#   model-init     = derive(seed, 1, layer)\n";
  os << "#   train/val split= derive(seed, 2)\n";
  os << "#   batch schedule = derive(seed, 3, T)\n";
  os << "#   trajectory ops = derive(seed, 4, n, T)\n";
  os << "#   pre-processing = derive(seed, 5, T, i*B + j)\n";
  os << "#   val subsample  = derive(seed, 6)\n";
  os << "#   synthetic data = derive(seed, 7)\n";
  return os.str();
}

// Hash of the semantically relevant configuration: keys that cannot change
// the run's results (output directory, snapshot toggle, worker count) are
// canonicalized away so that equivalent runs stamp identical hashes into
// their metrics logs.
inline std::uint64_t config_hash(const RunConfig& c) {
  RunConfig canon = c;
  canon.out_dir.clear();
  canon.export_snapshots = false;
  canon.workers = 0;
  const std::string s = serialize_config(canon);
  return fnv1a(s.data(), s.size());
}

}  // namespace augsearch
