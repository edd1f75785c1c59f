#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "augsearch/config.hpp"
#include "augsearch/engine.hpp"
#include "augsearch/learner.hpp"
#include "augsearch/policy.hpp"

namespace fs = std::filesystem;
using namespace augsearch;

namespace {

// "7.03e6" style: three significant figures, trailing zeros stripped.
std::string format_sig3(double v) {
  const int exp10 = static_cast<int>(std::floor(std::log10(v)));
  const double mantissa = v / std::pow(10.0, exp10);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", mantissa);
  std::string m(buf);
  while (m.back() == '0') m.pop_back();
  if (m.back() == '.') m.pop_back();
  return m + "e" + std::to_string(exp10);
}

int cmd_cost(bool custom, double samples, double images, double epochs,
             double ref_batch) {
  if (custom) {
    const double iters = cost_iterations(samples, images, epochs, ref_batch);
    std::printf("%s\n", format_sig3(iters).c_str());
    return 0;
  }
  // The four-row comparison: an offline controller search that retrains a
  // child model per sampled policy, versus this online search that trains
  // N trajectories once on the full dataset.
  const double off_cifar = cost_iterations(15000, 4000, 120);
  const double off_imnet = cost_iterations(15000, 6000, 200);
  const double on_cifar = cost_iterations(8, 50000, 300);
  const double on_imnet = cost_iterations(4, 1280000, 150);
  const double ratio_cifar = round_sig3(off_cifar / on_cifar);
  const double ratio_imnet = round_sig3(off_imnet / on_imnet);
  std::printf("dataset   method          iterations  dataset-usage  speedup\n");
  std::printf("CIFAR-10  offline-search  %-10s  8%%             1x\n",
              format_sig3(off_cifar).c_str());
  std::printf("CIFAR-10  online          %-10s  100%%           %llux\n",
              format_sig3(on_cifar).c_str(),
              static_cast<unsigned long long>(std::llround(ratio_cifar)));
  std::printf("ImageNet  offline-search  %-10s  0.5%%           1x\n",
              format_sig3(off_imnet).c_str());
  std::printf("ImageNet  online          %-10s  100%%           %llux (%.1f rounded)\n",
              format_sig3(on_imnet).c_str(),
              static_cast<unsigned long long>(std::llround(ratio_imnet)),
              ratio_imnet);
  return 0;
}

int cmd_search(const std::string& config_path) {
  const RunConfig cfg = parse_config(config_path);
  fs::create_directories(cfg.out_dir);
  const std::string resolved = serialize_config(cfg);
  {
    std::ofstream os(fs::path(cfg.out_dir) / "resolved_config.txt");
    os << resolved;
  }
  const std::uint64_t hash = config_hash(cfg);
  std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.jsonl");
  if (!metrics) throw std::runtime_error("cannot open metrics log");
  if (cfg.export_snapshots)
    fs::create_directories(fs::path(cfg.out_dir) / "snapshots");

  const int progress_every = std::max(1, cfg.outer_steps / 10);
  MetricsSink sink = [&](const MetricsRecord& rec, const OuterState& state,
                         const std::vector<Trajectory>&) {
    metrics << metrics_json_line(rec, hash) << '\n';
    metrics.flush();  // keep the log valid line-by-line if interrupted
    if (cfg.export_snapshots) {
      char name[64];
      std::snprintf(name, sizeof(name), "probs_%05d.csv", rec.T);
      write_probability_csv(fs::path(cfg.out_dir) / "snapshots" / name,
                            probabilities(state.theta));
      if (state.theta.size() == kNumOperations) {
        std::snprintf(name, sizeof(name), "marginal_%05d.csv", rec.T);
        write_marginal_csv(fs::path(cfg.out_dir) / "snapshots" / name,
                           marginal_first_element(state.theta));
      }
    }
    if (rec.T % progress_every == 0 || rec.T == cfg.outer_steps) {
      std::printf("T=%d  best_acc=%.4f  entropy=%.4f  wall_ms=%.1f\n", rec.T,
                  rec.accs[rec.broadcast_source], rec.policy_entropy,
                  rec.wall_ms);
    }
  };

  const SearchResult result = run_search(cfg, sink);
  save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.bin").string(),
                  result.final_weights);
  write_theta_csv((fs::path(cfg.out_dir) / "theta.csv").string(), result.theta);
  std::printf("done: %zu outer steps, artifacts in %s\n",
              result.history.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path) {
  const ModelWeights w = load_checkpoint(checkpoint_path);
  const RunConfig cfg = parse_config(config_path);
  auto [train, val] = [&] {
    if (cfg.dataset == "synthetic") {
      BanditSpec spec;
      spec.image_size = cfg.synthetic_image_size;
      spec.channels = cfg.synthetic_channels;
      spec.samples = cfg.synthetic_samples;
      spec.destructive = kind_from_name(cfg.synthetic_destructive);
      spec.seed = cfg.seed;
      return split_validation(synthetic_bandit_dataset(spec),
                              static_cast<std::size_t>(cfg.val_size), cfg.seed);
    }
    auto [tr, te] = load_cifar10(cfg.data_dir);
    (void)te;
    return split_validation(tr, static_cast<std::size_t>(cfg.val_size),
                            cfg.seed);
  }();
  const ChannelStats stats = compute_channel_stats(train);
  const double acc = evaluate_accuracy(w, val, stats);
  std::printf("val_accuracy = %.6f  (%zu images)\n", acc, val.size());
  return 0;
}

int cmd_export_dist(const std::string& snapshot_path,
                    const std::string& out_dir) {
  const PolicyParams theta = read_theta_csv(snapshot_path);
  const std::vector<double> probs = probabilities(theta);
  const fs::path src(snapshot_path);
  const fs::path dir = out_dir.empty() ? src.parent_path() : fs::path(out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  const std::string stem = src.stem().string();
  const fs::path probs_path = dir / (stem + ".probs.csv");
  write_probability_csv(probs_path.string(), probs);
  std::printf("wrote %s\n", probs_path.string().c_str());
  if (theta.size() == kNumOperations) {
    const fs::path marg_path = dir / (stem + ".marginal.csv");
    write_marginal_csv(marg_path.string(), marginal_first_element(theta));
    std::printf("wrote %s\n", marg_path.string().c_str());
  } else {
    std::printf("note: %zu parameters is not the full operation table; "
                "marginal not written\n",
                theta.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online augmentation-policy search"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, snapshot_path, out_dir;
  double samples = 0, images = 0, epochs = 0, ref_batch = 1024;

  CLI::App* search = app.add_subcommand("search", "Run a policy search");
  search->add_option("config", config_path, "run config file")->required();

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("dataset", config_path, "config file describing the dataset")
      ->required();

  CLI::App* cost = app.add_subcommand(
      "cost", "Search-cost comparison in batch-1024 iterations");
  std::string preset = "paper";
  cost->add_option("--preset", preset, "preset table (default)");
  CLI::Option* opt_samples =
      cost->add_option("--samples", samples, "policy samples or trajectories");
  cost->add_option("--images", images, "training images");
  cost->add_option("--epochs", epochs, "epochs per sample");
  cost->add_option("--ref-batch", ref_batch, "reference batch size");

  CLI::App* exportd =
      app.add_subcommand("export-dist", "Export probability CSVs from a snapshot");
  exportd->add_option("snapshot", snapshot_path, "theta snapshot csv")->required();
  exportd->add_option("--out-dir", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*search) return cmd_search(config_path);
    if (*eval) return cmd_eval(checkpoint_path, config_path);
    if (*cost) return cmd_cost(opt_samples->count() > 0, samples, images,
                               epochs, ref_batch);
    if (*exportd) return cmd_export_dist(snapshot_path, out_dir);
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 1;
}
