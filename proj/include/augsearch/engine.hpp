#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "augsearch/config.hpp"
#include "augsearch/data.hpp"
#include "augsearch/learner.hpp"
#include "augsearch/policy.hpp"
#include "augsearch/policy_optim.hpp"

namespace augsearch {

// One inner-loop worker. Its weights depend on nothing but the shared start
// point, the shared batch schedule and its own sampled operations.
struct Trajectory {
  int id = 0;
  ModelWeights weights;
  std::vector<double> velocity;
  SampleCounts counts;
  double last_acc = 0.0;
  std::uint64_t batch_checksum = 0;
};

struct MetricsRecord {
  int T = 0;
  std::vector<double> accs;
  int broadcast_source = 0;
  double policy_entropy = 0.0;
  double lr_inner = 0.0;
  double wall_ms = 0.0;  // timing only; excluded from the deterministic log
};

struct OuterState {
  int T = 0;
  PolicyParams theta;
  AdamState adam;
  ModelWeights best_weights;
  std::vector<MetricsRecord> history;
};

// I batches of size B of train-set indices, identical for every trajectory in
// the period. Indices come from a seeded shuffle that reshuffles on wrap.
inline std::vector<std::vector<int>> make_schedule(std::size_t train_size,
                                                   int inner_steps,
                                                   int batch_size,
                                                   std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<int> order(train_size);
  std::iota(order.begin(), order.end(), 0);
  auto shuffle = [&] {
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
  };
  shuffle();
  std::size_t pos = 0;
  std::vector<std::vector<int>> schedule(inner_steps);
  for (auto& batch : schedule) {
    batch.resize(batch_size);
    for (int j = 0; j < batch_size; ++j) {
      if (pos == order.size()) {
        shuffle();
        pos = 0;
      }
      batch[j] = order[pos++];
    }
  }
  return schedule;
}

// Everything a trajectory worker needs for one period; all shared state is
// read-only behind const pointers.
struct PeriodContext {
  const Dataset* train = nullptr;
  const ChannelStats* stats = nullptr;
  const PreprocSpec* preproc = nullptr;
  const std::vector<AugOperation>* op_table = nullptr;
  const PolicySampler* sampler = nullptr;
  const TrainHyper* hyper = nullptr;
  const std::vector<std::vector<int>>* schedule = nullptr;
  std::uint64_t run_seed = 0;
  int period = 0;       // T, 1-based
  int step_offset = 0;  // (T-1) * I
};

// Runs I shared-schedule SGD steps for one trajectory. Per image: sample one
// operation from the frozen policy via the trajectory's own stream, apply the
// pipeline, take the SGD step. Basic pre-processing draws are derived from
// (seed, period, slot) so they are identical across trajectories.
inline void run_inner_period(Trajectory& traj, const PeriodContext& ctx) {
  RngStream rng(derive_seed(ctx.run_seed, StreamId::kTrajectory,
                            static_cast<std::uint64_t>(traj.id),
                            static_cast<std::uint64_t>(ctx.period)));
  std::uint64_t checksum = fnv1a(nullptr, 0);
  Batch batch;
  batch.height = traj.weights.input_h;
  batch.width = traj.weights.input_w;
  batch.channels = traj.weights.input_c;
  const std::size_t dim = traj.weights.input_dim();
  const int batch_size = ctx.hyper->batch_size;
  for (std::size_t i = 0; i < ctx.schedule->size(); ++i) {
    const std::vector<int>& indices = (*ctx.schedule)[i];
    const int b = static_cast<int>(indices.size());
    batch.count = b;
    batch.inputs.assign(static_cast<std::size_t>(b) * dim, 0.0);
    batch.labels.resize(b);
    for (int j = 0; j < b; ++j) {
      const int idx = indices[j];
      const int label = ctx.train->labels[idx];
      checksum = fnv1a(&idx, sizeof(idx), checksum);
      checksum = fnv1a(&label, sizeof(label), checksum);
      const std::size_t op = ctx.sampler->sample(rng);
      traj.counts.add(op);
      const int s1 = rng.sign();
      const int s2 = rng.sign();
      RngStream preproc_rng(derive_seed(
          ctx.run_seed, StreamId::kPreproc,
          static_cast<std::uint64_t>(ctx.period),
          static_cast<std::uint64_t>(i) * batch_size + j));
      const ImageBuffer img =
          apply_pipeline(ctx.train->images[idx], *ctx.preproc,
                         (*ctx.op_table)[op], s1, s2, preproc_rng);
      standardize_into(img, *ctx.stats, batch.inputs.data() + j * dim);
      batch.labels[j] = label;
    }
    LossGrad lg;
    try {
      lg = loss_and_grad(traj.weights, batch);
    } catch (const NonFiniteLossError& e) {
      throw NonFiniteLossError(
          "trajectory " + std::to_string(traj.id) + ", period " +
          std::to_string(ctx.period) + ", inner step " + std::to_string(i) +
          ": " + e.what());
    }
    const double lr = cosine_lr(ctx.step_offset + static_cast<int>(i),
                                *ctx.hyper);
    sgd_step(traj.weights, lg.grad, traj.velocity, lr, *ctx.hyper);
  }
  traj.batch_checksum = checksum;
}

// Synchronization barrier: evaluate all trajectories on the (unaugmented)
// validation split, take one REINFORCE/Adam ascent step on theta, broadcast
// the best weights to every trajectory, zero velocities, reset counts.
inline MetricsRecord outer_step(OuterState& state,
                                std::vector<Trajectory>& trajs,
                                const Dataset& val, const ChannelStats& stats,
                                const std::vector<int>* val_subset,
                                bool use_baseline, double lr_inner,
                                double wall_ms = 0.0) {
  if (trajs.empty()) throw std::invalid_argument("no trajectories");
  if (val.size() == 0) throw std::invalid_argument("empty validation set");
  for (const Trajectory& t : trajs)
    if (t.batch_checksum != trajs.front().batch_checksum)
      throw std::logic_error("batch schedules diverged across trajectories");

  std::vector<double> accs(trajs.size());
  std::vector<SampleCounts> counts;
  counts.reserve(trajs.size());
  for (std::size_t n = 0; n < trajs.size(); ++n) {
    accs[n] = evaluate_accuracy(trajs[n].weights, val, stats, val_subset);
    trajs[n].last_acc = accs[n];
    counts.push_back(trajs[n].counts);
  }

  const std::vector<double> grad =
      reinforce_gradient(state.theta, counts, accs, use_baseline);
  adam_ascent_step(state.theta, grad, state.adam);

  int best = 0;
  for (std::size_t n = 1; n < trajs.size(); ++n)
    if (accs[n] > accs[best]) best = static_cast<int>(n);

  state.best_weights = trajs[best].weights;
  for (Trajectory& t : trajs) {
    t.weights = state.best_weights;
    std::fill(t.velocity.begin(), t.velocity.end(), 0.0);
    t.counts.reset();
  }

  state.T += 1;
  MetricsRecord rec;
  rec.T = state.T;
  rec.accs = accs;
  rec.broadcast_source = best;
  rec.policy_entropy = policy_entropy(state.theta);
  rec.lr_inner = lr_inner;
  rec.wall_ms = wall_ms;
  state.history.push_back(rec);
  return rec;
}

// Deterministic metrics-log line. wall_ms is deliberately not serialized so
// that same-seed runs produce byte-identical logs.
inline std::string metrics_json_line(const MetricsRecord& rec,
                                     std::uint64_t config_hash_value) {
  nlohmann::ordered_json j;
  j["T"] = rec.T;
  j["accs"] = rec.accs;
  j["broadcast_source"] = rec.broadcast_source;
  j["policy_entropy"] = rec.policy_entropy;
  j["lr_inner"] = rec.lr_inner;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(config_hash_value));
  j["config_hash"] = hex;
  return j.dump();
}

struct SearchResult {
  ModelWeights final_weights;
  PolicyParams theta;
  std::vector<MetricsRecord> history;
  ChannelStats stats;
  std::vector<AugOperation> op_table;
  int inner_steps = 0;
};

// Called after every outer step with the appended record, the updated state
// and the post-broadcast trajectories.
using MetricsSink = std::function<void(const MetricsRecord&, const OuterState&,
                                       const std::vector<Trajectory>&)>;

namespace detail {

inline std::vector<AugOperation> build_op_table(const std::vector<int>& ops) {
  std::vector<AugOperation> table;
  if (ops.empty()) {
    table.reserve(kNumOperations);
    for (int k = 0; k < kNumOperations; ++k)
      table.push_back(operation_from_index(k));
  } else {
    table.reserve(ops.size());
    for (int k : ops) table.push_back(operation_from_index(k));
  }
  return table;
}

inline std::pair<Dataset, Dataset> build_splits(const RunConfig& cfg) {
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
  auto [train, test] = load_cifar10(cfg.data_dir);
  (void)test;
  return split_validation(train, static_cast<std::size_t>(cfg.val_size),
                          cfg.seed);
}

}  // namespace detail

// Runs the full search: T_max periods of N trajectory workers with a policy
// update and best-weights broadcast at every barrier. Deterministic for a
// fixed seed regardless of worker count.
inline SearchResult run_search(const RunConfig& cfg,
                               const MetricsSink& sink = {}) {
  validate_config(cfg);
  auto [train, val] = detail::build_splits(cfg);
  const ChannelStats stats = compute_channel_stats(train);

  const std::vector<AugOperation> op_table = detail::build_op_table(cfg.ops);
  const std::size_t k = op_table.size();

  const int input_hw = (cfg.enable_pad_crop && cfg.crop > 0)
                           ? cfg.crop
                           : train.images.front().height;
  const int input_c = train.images.front().channels;

  PreprocSpec preproc;
  preproc.flip_prob = cfg.flip_prob;
  preproc.pad = cfg.pad;
  preproc.crop = cfg.crop;
  preproc.cutout = cfg.cutout;
  preproc.enable_flip = cfg.enable_flip;
  preproc.enable_pad_crop = cfg.enable_pad_crop;
  preproc.enable_cutout = cfg.enable_cutout;
  preproc.validate(train.images.front().height, train.images.front().width);

  const int inner_steps =
      cfg.inner_steps > 0
          ? cfg.inner_steps
          : static_cast<int>((train.size() + cfg.batch_size - 1) /
                             cfg.batch_size);
  TrainHyper hyper;
  hyper.base_lr = cfg.base_lr;
  hyper.momentum = cfg.momentum;
  hyper.weight_decay = cfg.weight_decay;
  hyper.warmup_steps = cfg.warmup_steps;
  hyper.warmup_start = cfg.warmup_start;
  hyper.total_steps = cfg.outer_steps * inner_steps;
  hyper.batch_size = cfg.batch_size;
  hyper.validate();

  OuterState state;
  state.theta = PolicyParams::zeros(k);
  state.adam = AdamState(k, cfg.policy_lr, cfg.adam_beta1, cfg.adam_beta2,
                         cfg.adam_eps);

  const ModelWeights w0 =
      init_model(model_kind_from_name(cfg.model), input_hw, input_hw, input_c,
                 train.class_count, cfg.seed);
  std::vector<Trajectory> trajs(static_cast<std::size_t>(cfg.trajectories));
  for (int n = 0; n < cfg.trajectories; ++n) {
    trajs[n].id = n;
    trajs[n].weights = w0;
    trajs[n].velocity.assign(w0.values.size(), 0.0);
    trajs[n].counts = SampleCounts(k);
  }
  state.best_weights = w0;

  std::vector<int> val_subset_storage;
  const std::vector<int>* val_subset = nullptr;
  if (cfg.val_subsample > 0 &&
      static_cast<std::size_t>(cfg.val_subsample) < val.size()) {
    std::vector<int> order(val.size());
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(derive_seed(cfg.seed, StreamId::kValSubsample));
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    order.resize(static_cast<std::size_t>(cfg.val_subsample));
    val_subset_storage = std::move(order);
    val_subset = &val_subset_storage;
  }

  const int workers =
      cfg.workers > 0 ? std::min(cfg.workers, cfg.trajectories)
                      : cfg.trajectories;

  for (int T = 1; T <= cfg.outer_steps; ++T) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::vector<int>> schedule = make_schedule(
        train.size(), inner_steps, cfg.batch_size,
        derive_seed(cfg.seed, StreamId::kSchedule,
                    static_cast<std::uint64_t>(T)));
    const PolicySampler sampler(state.theta);
    PeriodContext ctx;
    ctx.train = &train;
    ctx.stats = &stats;
    ctx.preproc = &preproc;
    ctx.op_table = &op_table;
    ctx.sampler = &sampler;
    ctx.hyper = &hyper;
    ctx.schedule = &schedule;
    ctx.run_seed = cfg.seed;
    ctx.period = T;
    ctx.step_offset = (T - 1) * inner_steps;

    if (workers <= 1) {
      for (Trajectory& traj : trajs) run_inner_period(traj, ctx);
    } else {
      std::vector<std::exception_ptr> errors(trajs.size());
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t n = static_cast<std::size_t>(t); n < trajs.size();
               n += static_cast<std::size_t>(workers)) {
            try {
              run_inner_period(trajs[n], ctx);
            } catch (...) {
              errors[n] = std::current_exception();
            }
          }
        });
      }
      for (std::thread& th : pool) th.join();
      for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    }

    const std::int64_t expected_draws =
        static_cast<std::int64_t>(inner_steps) * cfg.batch_size;
    for (const Trajectory& traj : trajs)
      if (traj.counts.total != expected_draws)
        throw std::logic_error("trajectory " + std::to_string(traj.id) +
                               " drew " + std::to_string(traj.counts.total) +
                               " operations, expected " +
                               std::to_string(expected_draws));

    const double lr_inner =
        cosine_lr((T - 1) * inner_steps + inner_steps - 1, hyper);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
    const MetricsRecord rec =
        outer_step(state, trajs, val, stats, val_subset, !cfg.no_baseline,
                   lr_inner, wall_ms);
    if (sink) sink(rec, state, trajs);
  }

  SearchResult result;
  result.final_weights = state.best_weights;
  result.theta = state.theta;
  result.history = std::move(state.history);
  result.stats = stats;
  result.op_table = op_table;
  result.inner_steps = inner_steps;
  return result;
}

// --- search-cost arithmetic ---------------------------------------------------

inline double round_sig3(double x) {
  const double exp10 = std::floor(std::log10(x));
  const double scale = std::pow(10.0, exp10 - 2.0);
  return std::round(x / scale) * scale;
}

// Total training iterations normalized to a reference batch size, rounded to
// three significant figures: samples x images x epochs / ref_batch.
inline double cost_iterations(double num_samples_or_trajs, double images,
                              double epochs, double ref_batch = 1024.0) {
  if (num_samples_or_trajs <= 0.0 || images <= 0.0 || epochs <= 0.0 ||
      ref_batch <= 0.0)
    throw std::invalid_argument("cost_iterations: all counts must be positive");
  return round_sig3(num_samples_or_trajs * images * epochs / ref_batch);
}

}  // namespace augsearch
