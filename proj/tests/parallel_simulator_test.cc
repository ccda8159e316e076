// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "llmplan/parallel_simulator.h"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <tuple>

#include "oracles.h"

namespace llmplan {
namespace {

constexpr double kTera = 1e12;
constexpr double kGiga = 1e9;

HardwareSpec hw(double peak, double mem_bw, double comm_bw, double latency) {
  return {"g", peak, std::uint64_t{80} << 30, mem_bw, comm_bw, latency, 1.0};
}

Task task(Phase phase, double load, double data, double moved, std::uint64_t batch = 1) {
  Task t;
  t.phase = phase;
  t.compute_load = load;
  t.data_size = data;
  t.data_transferred = moved;
  t.batch = batch;
  t.token_count = batch;
  return t;
}

std::vector<Task> random_tasks(std::mt19937_64& rng, std::size_t max_tasks) {
  std::uniform_int_distribution<std::size_t> count(1, max_tasks);
  std::uniform_int_distribution<std::uint64_t> batch(1, 16), layers(0, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Task> tasks(count(rng));
  for (Task& t : tasks) {
    t.phase = u(rng) < 0.4 ? Phase::kPrefill : Phase::kDecode;
    t.batch = batch(rng);
    t.token_count = t.batch;
    t.compute_load = u(rng) * 1e13;
    t.weight_bytes = u(rng) * 1e10;
    t.data_size = t.weight_bytes + u(rng) * 1e10;
    t.data_transferred = u(rng) * 1e6;
    t.sync_payload_bytes = u(rng) * 1e8;
    t.sync_layers = layers(rng);
  }
  return tasks;
}

HardwareSpec random_gpu(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 5.0);
  return hw(u(rng) * 1e14, u(rng) * 1e12, u(rng) * 1e10, u(rng) * 1e-5);
}

// --- Per-task time -----------------------------------------------------------

TEST(ComputeTime, Examples) {
  const HardwareSpec g = hw(1 * kTera, 1, 1, 0);
  EXPECT_DOUBLE_EQ(compute_time(task(Phase::kPrefill, 2 * kTera, 0, 0), g, 1), 2.0);
  EXPECT_DOUBLE_EQ(compute_time(task(Phase::kPrefill, 2 * kTera, 0, 0), g, 2), 1.0);
  EXPECT_EQ(compute_time(task(Phase::kPrefill, 0, 0, 0), g, 1), 0.0);
}

TEST(RwTime, Examples) {
  const HardwareSpec g = hw(1, 4 * kGiga, 1, 0);
  EXPECT_DOUBLE_EQ(rw_time(task(Phase::kPrefill, 0, 8 * kGiga, 0), g, 1), 2.0);
  EXPECT_DOUBLE_EQ(rw_time(task(Phase::kPrefill, 0, 8 * kGiga, 0), g, 2), 1.0);
  EXPECT_EQ(rw_time(task(Phase::kPrefill, 0, 0, 0), g, 1), 0.0);
}

TEST(TransferTime, Examples) {
  const HardwareSpec g = hw(1, 1, 1 * kGiga, 0);
  EXPECT_DOUBLE_EQ(transfer_time(task(Phase::kPrefill, 0, 0, 2 * kGiga), g, 1), 2.0);

  Task t = task(Phase::kPrefill, 0, 0, 0);
  t.sync_layers = 1;
  t.sync_payload_bytes = 1.0 * 128 * 4096 * 2;  // B * tokens * H * bytes, one layer
  EXPECT_DOUBLE_EQ(tp_sync_bytes(t, 2), 2'097'152.0);
  EXPECT_EQ(tp_sync_bytes(t, 1), 0.0);
  EXPECT_LT(tp_sync_bytes(t, 2), tp_sync_bytes(t, 4));
  EXPECT_EQ(tp_sync_messages(t, 1), 0u);
  EXPECT_EQ(tp_sync_messages(t, 2), 2u);
  EXPECT_EQ(tp_sync_messages(t, 8), 6u);
}

TEST(TaskTime, ThreeTermSum) {
  const HardwareSpec g = hw(2 * kTera, 4 * kGiga, 1 * kGiga, 0);
  const Task t = task(Phase::kPrefill, 4 * kTera, 8 * kGiga, 2 * kGiga);
  const TaskTiming tt = task_time(t, g, 1);
  EXPECT_DOUBLE_EQ(tt.total, 6.0);
  EXPECT_EQ(tt.bound, Bottleneck::kComputeBound);  // 2 s >= 2 s
  EXPECT_EQ(task_time(task(Phase::kDecode, 0, 0, 0), g, 1).total, 0.0);
  EXPECT_DOUBLE_EQ(task_time(t, g, 1, TimeModel::kOverlap).total, 4.0);
}

TEST(TaskTime, RooflineBoundsAndClassification) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const HardwareSpec g = random_gpu(rng);
    for (const Task& t : random_tasks(rng, 5)) {
      for (std::uint64_t tp : {1u, 2u, 4u, 8u}) {
        const TaskTiming tt = task_time(t, g, tp);
        EXPECT_GE(tt.total, std::max(tt.compute, tt.read_write));
        EXPECT_GE(tt.total, tt.transfer);
        EXPECT_EQ(tt.bound == Bottleneck::kComputeBound, tt.compute >= tt.read_write);
        EXPECT_LE(task_time(t, g, tp, TimeModel::kOverlap).total, tt.total);
      }
    }
  }
}

TEST(TaskTime, DoublingCapabilityNeverSlower) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 300; ++i) {
    const HardwareSpec g = random_gpu(rng);
    for (const Task& t : random_tasks(rng, 4)) {
      const double base = task_time(t, g, 2).total;
      HardwareSpec f = g;
      f.peak_compute *= 2;
      EXPECT_LE(task_time(t, f, 2).total, base);
      f = g;
      f.memory_bandwidth *= 2;
      EXPECT_LE(task_time(t, f, 2).total, base);
      f = g;
      f.comm_bandwidth *= 2;
      EXPECT_LE(task_time(t, f, 2).total, base);
    }
  }
}

TEST(TransferTime, TpCommunicationStrictlyGrows) {
  const HardwareSpec g = hw(1e14, 1e12, 1e10, 5e-6);
  Task t = task(Phase::kPrefill, 1e12, 1e9, 0);
  t.sync_payload_bytes = 1e6;
  t.sync_layers = 32;
  double prev = transfer_time(t, g, 1);
  for (std::uint64_t tp = 2; tp <= 64; tp *= 2) {
    const double now = transfer_time(t, g, tp);
    EXPECT_GT(now, prev) << tp;
    prev = now;
  }
}

// --- Configurations ------------------------------------------------------------

TEST(GetConfigurations, Examples) {
  using PC = ParallelConfig;
  EXPECT_EQ(get_configurations(1), (std::vector<PC>{{1, 1}}));
  EXPECT_EQ(get_configurations(2), (std::vector<PC>{{1, 1}, {1, 2}, {2, 1}}));
  EXPECT_EQ(get_configurations(4),
            (std::vector<PC>{{1, 1}, {1, 2}, {1, 4}, {2, 1}, {2, 2}, {3, 1}, {4, 1}}));
  EXPECT_TRUE(get_configurations(0).empty());
}

TEST(GetConfigurations, MatchesConstraintScan) {
  for (std::uint64_t n = 1; n <= 16; ++n) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> got;
    const auto configs = get_configurations(n);
    for (const auto& c : configs) got.insert({c.dp, c.tp});
    EXPECT_EQ(got, oracle::scan_configs(n)) << n;
    EXPECT_EQ(got.size(), configs.size());
    EXPECT_TRUE(std::is_sorted(configs.begin(), configs.end()));
  }
}

TEST(ParallelConfig, RejectsNonPowerOfTwoTp) {
  EXPECT_THROW((ParallelConfig{1, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((ParallelConfig{0, 1}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((ParallelConfig{3, 8}.validate()));
}

// --- Hybrid simulation -----------------------------------------------------------

TEST(SimulateHybrid, DegenerateConfigIsSequentialSum) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    const HardwareSpec g = random_gpu(rng);
    const auto tasks = random_tasks(rng, 20);
    double prefill = 0.0, decode = 0.0;
    for (const Task& t : tasks) {
      (t.phase == Phase::kPrefill ? prefill : decode) += task_time(t, g, 1).total;
    }
    const SimResult r = simulate_hybrid(tasks, {1, 1}, g);
    EXPECT_EQ(r.prefill_time, prefill);
    EXPECT_EQ(r.decode_time, decode);
    EXPECT_EQ(r.total_time, r.prefill_time + r.decode_time);
  }
}

TEST(SimulateHybrid, SingleTaskEqualsTaskTime) {
  const HardwareSpec g = hw(1e14, 1e12, 1e10, 1e-5);
  const Task t = task(Phase::kDecode, 3e12, 5e9, 1e3, 4);
  EXPECT_EQ(simulate_hybrid(std::vector<Task>{t}, {1, 1}, g).total_time,
            task_time(t, g, 1).total);
}

TEST(SimulateHybrid, EvenDpShardsRunConcurrently) {
  const HardwareSpec g = hw(1e14, 1e12, 1e10, 0.0);
  Task t = task(Phase::kPrefill, 4e12, 6e9, 0, 4);
  t.weight_bytes = 0;
  const SimResult r = simulate_hybrid(std::vector<Task>{t}, {2, 1}, g);
  EXPECT_DOUBLE_EQ(r.total_time, task_time(shard_task(t, 2), g, 1).total);
  EXPECT_DOUBLE_EQ(r.total_time, task_time(task(Phase::kPrefill, 2e12, 3e9, 0, 2), g, 1).total);
}

TEST(SimulateHybrid, UnevenBatchFollowsLargerShard) {
  const HardwareSpec g = hw(1e12, 1e12, 1e10, 1e-4);
  Task t = task(Phase::kDecode, 3e12, 3e9 + 1e9, 300, 3);
  t.weight_bytes = 1e9;
  // Shards of 2 and 1: load 2e12 / 1e12, data 1e9 + 2e9 / 1e9 + 1e9.
  const double big = 2.0 + 3e9 / 1e12 + 200 / 1e10;
  const double small = 1.0 + 2e9 / 1e12 + 100 / 1e10;
  const SimResult r = simulate_hybrid(std::vector<Task>{t}, {2, 1}, g);
  EXPECT_DOUBLE_EQ(r.decode_time, std::max(big, small) + 1e-4);
  EXPECT_EQ(r.prefill_time, 0.0);
}

TEST(SimulateHybrid, Errors) {
  const HardwareSpec g = hw(1, 1, 1, 1);
  const std::vector<Task> tasks{task(Phase::kPrefill, 1, 1, 1)};
  EXPECT_THROW(simulate_hybrid({}, {1, 1}, g), std::invalid_argument);
  SimOptions opts;
  opts.fleet_size = 4;
  EXPECT_THROW(simulate_hybrid(tasks, {3, 2}, g, opts), std::invalid_argument);
  EXPECT_NO_THROW(simulate_hybrid(tasks, {2, 2}, g, opts));
  EXPECT_THROW(simulate_hybrid(tasks, {1, 3}, g), std::invalid_argument);
}

TEST(SimulateHybrid, MatchesStraightLineOracle) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 200; ++i) {
    const HardwareSpec g = random_gpu(rng);
    const auto tasks = random_tasks(rng, 20);
    for (const auto& c : get_configurations(8)) {
      const double want = oracle::simulate_straight_line(tasks, c.dp, c.tp, g);
      EXPECT_NEAR(simulate_hybrid(tasks, c, g).total_time, want, 1e-12 * want);
    }
  }
}

TEST(SimulateHybrid, MonotoneInHardware) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 100; ++i) {
    const HardwareSpec g = random_gpu(rng);
    const auto tasks = random_tasks(rng, 12);
    for (const auto& c : get_configurations(8)) {
      const double base = simulate_hybrid(tasks, c, g).total_time;
      for (int which = 0; which < 3; ++which) {
        HardwareSpec f = g;
        (which == 0 ? f.peak_compute : which == 1 ? f.memory_bandwidth : f.comm_bandwidth) *= 1.5;
        EXPECT_LE(simulate_hybrid(tasks, c, f).total_time, base);
      }
    }
  }
}

TEST(SimulateReplicas, ExplicitReplicaLists) {
  const HardwareSpec g = hw(1e12, 1e12, 1e10, 1e-3);
  const std::vector<std::vector<Task>> replicas{
      {task(Phase::kPrefill, 2e12, 0, 0), task(Phase::kDecode, 1e12, 0, 0)},
      {task(Phase::kPrefill, 1e12, 0, 0), task(Phase::kDecode, 3e12, 0, 0)}};
  const SimResult r = simulate_replicas(replicas, 1, g);
  EXPECT_DOUBLE_EQ(r.prefill_time, 2.0 + 1e-3);
  EXPECT_DOUBLE_EQ(r.decode_time, 3.0 + 1e-3);
  EXPECT_EQ(r.config, (ParallelConfig{2, 1}));
  EXPECT_THROW(simulate_replicas(std::vector<std::vector<Task>>(2), 1, g),
               std::invalid_argument);
}

TEST(NearEqualShards, LargerFirstAndExact) {
  EXPECT_EQ(near_equal_shards(3, 2), (std::vector<std::uint64_t>{2, 1}));
  EXPECT_EQ(near_equal_shards(2, 4), (std::vector<std::uint64_t>{1, 1, 0, 0}));
  for (std::uint64_t n = 0; n < 50; ++n) {
    for (std::uint64_t p = 1; p < 9; ++p) {
      const auto s = near_equal_shards(n, p);
      EXPECT_EQ(std::accumulate(s.begin(), s.end(), std::uint64_t{0}), n);
      EXPECT_LE(s.front() - s.back(), 1u);
    }
  }
}

// --- Ranking ---------------------------------------------------------------------

SimResult result(double time, std::uint64_t dp, std::uint64_t tp) {
  SimResult r;
  r.config = {dp, tp};
  r.total_time = time;
  return r;
}

TEST(RankConfigs, SortsAndBreaksTies) {
  auto ranked = rank_configs({result(3, 1, 1), result(1, 1, 2), result(2, 2, 1)});
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].total_time, 1.0);
  EXPECT_EQ(ranked[1].total_time, 2.0);
  EXPECT_EQ(ranked[2].total_time, 3.0);

  ranked = rank_configs({result(1, 2, 2), result(1, 2, 1)});
  EXPECT_EQ(ranked[0].config.gpus_used(), 2u);

  ranked = rank_configs({result(1, 1, 2), result(1, 2, 1)});
  EXPECT_EQ(ranked[0].config, (ParallelConfig{2, 1}));  // same count, lower tp

  EXPECT_EQ(rank_configs({result(2, 1, 1), result(1, 1, 1)}, 10).size(), 2u);
  EXPECT_EQ(rank_configs({result(4, 1, 1), result(3, 1, 1), result(2, 1, 1), result(1, 1, 1)})
                .size(),
            3u);
}

TEST(SimulateAll, WinnerIsOracleArgmin) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::uint64_t> gpus(1, 8);
  for (int i = 0; i < 200; ++i) {
    const HardwareSpec g = random_gpu(rng);
    const auto tasks = random_tasks(rng, 20);
    const std::uint64_t n = gpus(rng);
    const auto ranked = simulate_all(tasks, n, g);
    ASSERT_FALSE(ranked.empty());

    ParallelConfig best{};
    double best_time = std::numeric_limits<double>::infinity();
    for (const auto& [dp, tp] : oracle::scan_configs(n)) {
      const double t = oracle::simulate_straight_line(tasks, dp, tp, g);
      const bool better = t < best_time ||
                          (t == best_time && std::make_tuple(dp * tp, tp, dp) <
                                                 std::make_tuple(best.gpus_used(), best.tp, best.dp));
      if (better) {
        best_time = t;
        best = {dp, tp};
      }
    }
    EXPECT_EQ(ranked.front().config, best) << "scenario " << i;
  }
}

}  // namespace
}  // namespace llmplan
