#include "augsearch/engine.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <set>

using namespace augsearch;

namespace {

RunConfig smoke_config() {
  RunConfig cfg;
  cfg.dataset = "synthetic";
  cfg.synthetic_samples = 96;
  cfg.synthetic_image_size = 8;
  cfg.val_size = 32;
  cfg.model = "mlp";
  cfg.batch_size = 8;
  cfg.base_lr = 0.05;
  cfg.inner_steps = 2;
  cfg.outer_steps = 5;
  cfg.trajectories = 3;
  cfg.enable_flip = false;
  cfg.enable_pad_crop = false;
  cfg.enable_cutout = false;
  cfg.seed = 7;
  return cfg;
}

std::string log_of(const RunConfig& cfg) {
  std::string log;
  run_search(cfg, [&](const MetricsRecord& rec, const OuterState&,
                      const std::vector<Trajectory>&) {
    log += metrics_json_line(rec, config_hash(cfg));
    log += '\n';
  });
  return log;
}

}  // namespace

TEST(Schedule, ShapeRangeAndDeterminism) {
  const auto s = make_schedule(100, 7, 16, 42);
  ASSERT_EQ(s.size(), 7u);
  for (const auto& batch : s) {
    ASSERT_EQ(batch.size(), 16u);
    for (int idx : batch) {
      ASSERT_GE(idx, 0);
      ASSERT_LT(idx, 100);
    }
  }
  EXPECT_EQ(make_schedule(100, 7, 16, 42), s);
  EXPECT_NE(make_schedule(100, 7, 16, 43), s);
  // a full epoch visits every record exactly once
  const auto epoch = make_schedule(64, 8, 8, 3);
  std::set<int> seen;
  for (const auto& batch : epoch) seen.insert(batch.begin(), batch.end());
  EXPECT_EQ(seen.size(), 64u);
}

namespace {

struct PeriodFixture {
  Dataset train;
  ChannelStats stats;
  PreprocSpec preproc;
  std::vector<AugOperation> op_table;
  PolicyParams theta;
  TrainHyper hyper;
  std::vector<std::vector<int>> schedule;

  PeriodFixture(int inner_steps, std::vector<int> ops) {
    BanditSpec spec;
    spec.samples = 64;
    spec.image_size = 8;
    spec.seed = 5;
    train = synthetic_bandit_dataset(spec);
    stats = compute_channel_stats(train);
    preproc.enable_flip = false;
    preproc.enable_pad_crop = false;
    preproc.enable_cutout = false;
    for (int k : ops) op_table.push_back(operation_from_index(k));
    theta = PolicyParams::zeros(op_table.size());
    hyper.base_lr = 0.1;
    hyper.total_steps = 64;
    hyper.batch_size = 4;
    schedule = make_schedule(train.size(), inner_steps, 4, 9);
  }

  Trajectory fresh_trajectory(int id) const {
    Trajectory t;
    t.id = id;
    t.weights = init_model(ModelKind::kMlp, 8, 8, 1, 2, 17);
    t.velocity.assign(t.weights.values.size(), 0.0);
    t.counts = SampleCounts(op_table.size());
    return t;
  }

  PeriodContext context(const PolicySampler& sampler) const {
    PeriodContext ctx;
    ctx.train = &train;
    ctx.stats = &stats;
    ctx.preproc = &preproc;
    ctx.op_table = &op_table;
    ctx.sampler = &sampler;
    ctx.hyper = &hyper;
    ctx.schedule = &schedule;
    ctx.run_seed = 123;
    ctx.period = 1;
    ctx.step_offset = 0;
    return ctx;
  }
};

}  // namespace

TEST(InnerPeriod, ZeroStepsIsDegenerateIdentity) {
  PeriodFixture fx(0, {0, 1});
  const PolicySampler sampler(fx.theta);
  Trajectory t = fx.fresh_trajectory(0);
  const std::vector<double> before = t.weights.values;
  run_inner_period(t, fx.context(sampler));
  EXPECT_EQ(t.weights.values, before);
  EXPECT_EQ(t.counts.total, 0);
}

TEST(InnerPeriod, CountsTotalEqualsDrawsAndStreamsAreReproducible) {
  PeriodFixture fx(6, {100, 200, 300});
  const PolicySampler sampler(fx.theta);
  Trajectory a = fx.fresh_trajectory(2);
  Trajectory b = fx.fresh_trajectory(2);  // same id -> same stream
  run_inner_period(a, fx.context(sampler));
  run_inner_period(b, fx.context(sampler));
  EXPECT_EQ(a.counts.total, 6 * 4);
  EXPECT_EQ(a.counts.counts, b.counts.counts);
  EXPECT_EQ(a.weights.values, b.weights.values);
  EXPECT_EQ(a.batch_checksum, b.batch_checksum);

  Trajectory c = fx.fresh_trajectory(3);  // different stream
  run_inner_period(c, fx.context(sampler));
  EXPECT_EQ(c.batch_checksum, a.batch_checksum);  // shared schedule
  EXPECT_NE(c.weights.values, a.weights.values);
}

TEST(InnerPeriod, InvolutionPolicyEqualsNoAugmentation) {
  // a policy massed on (Invert, Invert) must train exactly like a run with
  // augmentation disabled
  PeriodFixture fx(8, {operation_index(35, 35)});
  const PolicySampler sampler(fx.theta);
  Trajectory t = fx.fresh_trajectory(0);
  run_inner_period(t, fx.context(sampler));

  ModelWeights w = init_model(ModelKind::kMlp, 8, 8, 1, 2, 17);
  std::vector<double> vel(w.values.size(), 0.0);
  const std::size_t dim = w.input_dim();
  Batch batch;
  batch.height = batch.width = 8;
  batch.channels = 1;
  for (std::size_t i = 0; i < fx.schedule.size(); ++i) {
    const auto& indices = fx.schedule[i];
    batch.count = static_cast<int>(indices.size());
    batch.inputs.assign(indices.size() * dim, 0.0);
    batch.labels.resize(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      standardize_into(fx.train.images[indices[j]], fx.stats,
                       batch.inputs.data() + j * dim);
      batch.labels[j] = fx.train.labels[indices[j]];
    }
    const LossGrad lg = loss_and_grad(w, batch);
    sgd_step(w, lg.grad, vel, cosine_lr(static_cast<int>(i), fx.hyper),
             fx.hyper);
  }
  EXPECT_EQ(t.weights.values, w.values);
}

namespace {

// Trajectories whose scores are fixed by the fc2 bias: each one always
// predicts its favourite class.
struct CraftedOuter {
  Dataset val;
  ChannelStats stats;
  std::vector<Trajectory> trajs;
  OuterState state;

  explicit CraftedOuter(const std::vector<int>& favourites,
                        const std::vector<int>& val_labels) {
    val.class_count = 3;
    val.split_tag = SplitTag::kVal;
    for (int label : val_labels) {
      val.images.push_back(ImageBuffer::filled(4, 4, 1, 128));
      val.labels.push_back(label);
    }
    stats.channels = 1;
    stats.mean = {0, 0, 0};
    stats.stddev = {64, 64, 64};
    for (std::size_t n = 0; n < favourites.size(); ++n) {
      Trajectory t;
      t.id = static_cast<int>(n);
      t.weights = init_model(ModelKind::kMlp, 4, 4, 1, 3, 1);
      std::fill(t.weights.values.begin(), t.weights.values.end(), 0.0);
      t.weights.values[t.weights.layout[3].offset + favourites[n]] = 1.0;
      t.velocity.assign(t.weights.values.size(), 0.5);
      t.counts = SampleCounts(4);
      t.counts.add(n % 4);
      trajs.push_back(std::move(t));
    }
    state.theta = PolicyParams::zeros(4);
    state.adam = AdamState(4);
  }
};

}  // namespace

TEST(OuterStep, ArgmaxBroadcastWithTieBreak) {
  // labels: 2x class0, 5x class1, 3x class2
  CraftedOuter fx({0, 1, 2}, {0, 0, 1, 1, 1, 1, 1, 2, 2, 2});
  const MetricsRecord rec = outer_step(fx.state, fx.trajs, fx.val, fx.stats,
                                       nullptr, true, 0.1, 2.5);
  EXPECT_EQ(rec.accs, (std::vector<double>{0.2, 0.5, 0.3}));
  EXPECT_EQ(rec.broadcast_source, 1);
  EXPECT_EQ(rec.T, 1);
  EXPECT_DOUBLE_EQ(rec.lr_inner, 0.1);
  EXPECT_DOUBLE_EQ(rec.wall_ms, 2.5);
  // bitwise broadcast, zeroed velocity, reset counts
  for (const Trajectory& t : fx.trajs) {
    ASSERT_EQ(t.weights.values.size(), fx.state.best_weights.values.size());
    EXPECT_EQ(std::memcmp(t.weights.values.data(),
                          fx.state.best_weights.values.data(),
                          t.weights.values.size() * sizeof(double)),
              0);
    for (double v : t.velocity) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(t.counts.total, 0);
  }
  // accuracies differ, so theta moved
  bool moved = false;
  for (double th : fx.state.theta.theta) moved |= th != 0.0;
  EXPECT_TRUE(moved);
}

TEST(OuterStep, TiesGoToTheLowestIndex) {
  CraftedOuter fx({1, 1, 0}, {1, 1, 0, 2});  // trajs 0 and 1 both score 0.5
  const MetricsRecord rec = outer_step(fx.state, fx.trajs, fx.val, fx.stats,
                                       nullptr, true, 0.0);
  EXPECT_EQ(rec.accs[0], rec.accs[1]);
  EXPECT_EQ(rec.broadcast_source, 0);
}

TEST(OuterStep, IdenticalTrajectoriesLeaveThetaUnchanged) {
  CraftedOuter fx({1, 1, 1}, {0, 1, 1, 2});
  const MetricsRecord rec = outer_step(fx.state, fx.trajs, fx.val, fx.stats,
                                       nullptr, true, 0.0);
  (void)rec;
  for (double th : fx.state.theta.theta) EXPECT_DOUBLE_EQ(th, 0.0);
}

TEST(OuterStep, RejectsEmptyValidationAndDivergedSchedules) {
  CraftedOuter fx({0, 1}, {0, 1});
  Dataset empty;
  empty.class_count = 3;
  EXPECT_THROW(outer_step(fx.state, fx.trajs, empty, fx.stats, nullptr, true,
                          0.0),
               std::invalid_argument);
  fx.trajs[1].batch_checksum = 99;
  EXPECT_THROW(outer_step(fx.state, fx.trajs, fx.val, fx.stats, nullptr, true,
                          0.0),
               std::logic_error);
}

TEST(RunSearch, HistoryShapeAndBroadcastInvariants) {
  const RunConfig cfg = smoke_config();
  int calls = 0;
  const SearchResult result = run_search(
      cfg, [&](const MetricsRecord& rec, const OuterState& state,
               const std::vector<Trajectory>& trajs) {
        ++calls;
        EXPECT_EQ(rec.T, calls);
        ASSERT_EQ(rec.accs.size(), 3u);
        // broadcast source is the argmax with lowest-index tie-break
        int best = 0;
        for (std::size_t n = 1; n < rec.accs.size(); ++n)
          if (rec.accs[n] > rec.accs[best]) best = static_cast<int>(n);
        EXPECT_EQ(rec.broadcast_source, best);
        for (const Trajectory& t : trajs) {
          EXPECT_EQ(std::memcmp(t.weights.values.data(),
                                state.best_weights.values.data(),
                                t.weights.values.size() * sizeof(double)),
                    0);
          EXPECT_EQ(t.batch_checksum, trajs.front().batch_checksum);
        }
      });
  EXPECT_EQ(calls, 5);
  EXPECT_EQ(result.history.size(), 5u);
  EXPECT_EQ(result.op_table.size(), static_cast<std::size_t>(kNumOperations));
}

TEST(RunSearch, ZeroPolicyLrFreezesTheDistribution) {
  RunConfig cfg = smoke_config();
  cfg.policy_lr = 0.0;
  const SearchResult result = run_search(cfg);
  for (double th : result.theta.theta) EXPECT_DOUBLE_EQ(th, 0.0);
  const double h0 = result.history.front().policy_entropy;
  for (const MetricsRecord& rec : result.history)
    EXPECT_DOUBLE_EQ(rec.policy_entropy, h0);
  EXPECT_NEAR(h0, std::log(1296.0), 1e-12);
}

TEST(RunSearch, SameSeedGivesByteIdenticalLogs) {
  const RunConfig cfg = smoke_config();
  EXPECT_EQ(log_of(cfg), log_of(cfg));
  RunConfig other = smoke_config();
  other.seed = 8;
  EXPECT_NE(log_of(other), log_of(cfg));
}

TEST(RunSearch, WorkerCountDoesNotChangeResults) {
  RunConfig serial = smoke_config();
  serial.workers = 1;
  RunConfig parallel = smoke_config();
  parallel.workers = 3;
  EXPECT_EQ(log_of(serial), log_of(parallel));

  const SearchResult a = run_search(serial);
  const SearchResult b = run_search(parallel);
  EXPECT_EQ(a.final_weights.values, b.final_weights.values);
  EXPECT_EQ(a.theta.theta, b.theta.theta);
}

TEST(RunSearch, RestrictedOperationTable) {
  RunConfig cfg = smoke_config();
  cfg.ops = {operation_index(35, 35), operation_index(35, 23)};
  const SearchResult result = run_search(cfg);
  EXPECT_EQ(result.op_table.size(), 2u);
  EXPECT_EQ(result.theta.size(), 2u);
}

TEST(MetricsLine, IsValidOrderedJson) {
  MetricsRecord rec;
  rec.T = 3;
  rec.accs = {0.5, 0.25};
  rec.broadcast_source = 0;
  rec.policy_entropy = 7.0;
  rec.lr_inner = 0.125;
  rec.wall_ms = 99.0;  // must not appear in the line
  const std::string line = metrics_json_line(rec, 0xff);
  EXPECT_EQ(line.find("wall_ms"), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["T"], 3);
  EXPECT_EQ(j["accs"].size(), 2u);
  EXPECT_EQ(j["config_hash"], "00000000000000ff");
  EXPECT_TRUE(line.rfind("{\"T\":3,", 0) == 0);
}

TEST(CostIterations, ReferenceArithmetic) {
  EXPECT_DOUBLE_EQ(cost_iterations(15000, 4000, 120), 7.03e6);
  EXPECT_DOUBLE_EQ(cost_iterations(15000, 6000, 200), 1.76e7);
  EXPECT_DOUBLE_EQ(cost_iterations(8, 50000, 300), 1.17e5);
  EXPECT_DOUBLE_EQ(cost_iterations(4, 1280000, 150), 7.5e5);
  EXPECT_THROW(cost_iterations(0, 1, 1), std::invalid_argument);
  EXPECT_THROW(cost_iterations(1, 1, 1, 0), std::invalid_argument);
}
