#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "pma/errors.hpp"
#include "pma/report_io.hpp"
#include "pma/simulator.hpp"
#include "support/oracles.hpp"

namespace pma {
namespace {

RunConfig small_config(int m = 8, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.adversary.controlled_ids = AdversaryConfig::first_devices(m);
  cfg.master_seed = seed;
  return cfg;
}

TEST(HitRatio, Definition) {
  std::vector<AttackRecord> records(6);
  for (int k = 0; k < 4; ++k) records[static_cast<std::size_t>(k)].launched = true;
  for (int k = 0; k < 3; ++k) records[static_cast<std::size_t>(k)].flipped = true;
  EXPECT_DOUBLE_EQ(*hit_ratio(records), 0.75);
  EXPECT_FALSE(hit_ratio(std::span(records).subspan(4)).has_value());
  EXPECT_FALSE(hit_ratio({}).has_value());
}

TEST(Run, NoControlledDevicesMeansNoAttack) {
  const RunReport report = run(small_config(0), true);
  EXPECT_EQ(report.metrics.attacks_launched, 0);
  EXPECT_FALSE(report.metrics.hit_ratio.has_value());
  EXPECT_FALSE(report.metrics.surrogate_agreement.has_value());
  ASSERT_EQ(report.records.size(), 8000u);
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    EXPECT_EQ(report.records[k].attacked_decision, report.records[k].clean_decision);
    EXPECT_TRUE((report.reports[k].clean.array() == report.reports[k].attacked.array()).all());
  }
}

TEST(Run, ReportInvariantsAndReplay) {
  const RunConfig cfg = small_config(8, 2);
  const RunReport report = run(cfg, true);
  const auto& ids = cfg.adversary.controlled_ids;
  int launched = 0, flipped = 0;
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    const auto& rec = report.records[k];
    const auto& rep = report.reports[k];
    launched += rec.launched;
    flipped += rec.flipped;
    EXPECT_EQ(rec.flipped, rec.clean_decision != rec.attacked_decision);
    for (int i = 0; i < cfg.scenario.n_devices; ++i) {
      const bool controlled = std::find(ids.begin(), ids.end(), i) != ids.end();
      if (!controlled || !rec.launched) ASSERT_EQ(rep.clean[i], rep.attacked[i]) << "round " << rec.round_id;
    }
    if (rec.launched) EXPECT_GE(rec.confidence, cfg.adversary.confidence_threshold);
  }
  EXPECT_EQ(launched, report.metrics.attacks_launched);
  EXPECT_EQ(flipped, report.metrics.attacks_flipped);
  EXPECT_DOUBLE_EQ(report.metrics.attack_rate, launched / 8000.0);

  // Round-trip through the dump format and re-fuse with an independent rule.
  std::stringstream csv, model;
  write_round_csv(csv, report, true);
  write_fusion_model(model, report.fusion);
  const auto replayed = oracle::replay(read_fusion_model(model), read_round_csv(csv));
  EXPECT_EQ(replayed.decision_mismatches, 0);
  EXPECT_EQ(replayed.launched, report.metrics.attacks_launched);
  EXPECT_EQ(replayed.flipped, report.metrics.attacks_flipped);
  EXPECT_EQ(replayed.hit_ratio, report.metrics.hit_ratio);
}

TEST(Run, DeterministicGivenSeed) {
  const auto a = run(small_config(6, 9));
  const auto b = run(small_config(6, 9));
  ASSERT_EQ(a.records.size(), b.records.size());
  std::stringstream sa, sb;
  write_round_csv(sa, a, false);
  write_round_csv(sb, b, false);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.fusion, b.fusion);
  const auto c = run(small_config(6, 10));
  EXPECT_NE(a.metrics.attacks_launched * 1000003 + a.metrics.attacks_flipped,
            c.metrics.attacks_launched * 1000003 + c.metrics.attacks_flipped);
}

TEST(Run, TauOneOnlyLaunchesSaturatedRounds) {
  RunConfig cfg = small_config(8, 3);
  cfg.adversary.confidence_threshold = 1.0;
  const auto report = run(cfg);
  for (const auto& r : report.records) EXPECT_EQ(r.launched, r.confidence == 1.0);
}

TEST(Run, SurrogateTracksFusionOnHeldOutRounds) {
  const auto report = run(small_config(8, 4));
  ASSERT_TRUE(report.metrics.surrogate_agreement.has_value());
  EXPECT_GE(*report.metrics.surrogate_agreement, 0.8);
  EXPECT_GE(report.metrics.fusion_clean_accuracy, 0.95);
}

TEST(Run, CraftedVectorsFlipTheSurrogate) {
  const auto report = run(small_config(8, 5));
  ASSERT_GT(report.metrics.attacks_launched, 0);
  const double rate = static_cast<double>(report.metrics.surrogate_flips) / report.metrics.attacks_launched;
  EXPECT_GE(rate, 0.9);
}

TEST(Run, ConfigErrors) {
  RunConfig cfg = small_config();
  cfg.attack_rounds = 100;
  EXPECT_THROW(run(cfg), ConfigError);

  cfg = small_config();
  cfg.scenario.class_prior = 1.0;
  try {
    run(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "scenario.class_prior");
  }

  cfg = small_config(21);
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Experiment, EvaluateMatchesRunAndIsMonotone) {
  const RunConfig cfg = small_config(8, 6);
  const Experiment exp(cfg);
  RunConfig at70 = cfg;
  at70.adversary.confidence_threshold = 0.70;
  const auto direct = run(at70);
  const auto filtered = exp.evaluate(0.70);
  EXPECT_EQ(direct.metrics.attacks_launched, filtered.metrics.attacks_launched);
  EXPECT_EQ(direct.metrics.attacks_flipped, filtered.metrics.attacks_flipped);

  int previous = std::numeric_limits<int>::max();
  for (int k = 0; k <= 9; ++k) {
    const int launched = exp.evaluate(0.55 + 0.05 * k).metrics.attacks_launched;
    EXPECT_LE(launched, previous);
    previous = launched;
  }
  EXPECT_THROW(exp.evaluate(0.5), ConfigError);
}

TEST(Sweep, RowsSortedAndAggregatedIndependently) {
  RunConfig base = small_config();
  base.scenario.n_rounds = 3000;
  base.observation_rounds = 1000;
  base.attack_rounds = 2000;
  const std::vector<int> ms{6, 0, 8};
  const std::vector<double> taus{0.9, 0.6};
  const std::vector<std::uint64_t> seeds{2, 1};
  const auto rows = sweep(base, ms, taus, seeds, 3);
  ASSERT_EQ(rows.size(), 12u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto key = [](const SweepRow& r) { return std::tuple(r.m, r.tau, r.seed); };
    EXPECT_LT(key(rows[k - 1]), key(rows[k]));
  }
  EXPECT_EQ(rows, sweep(base, ms, taus, seeds, 1)) << "thread count changed results";

  // Matches an independent single run.
  RunConfig single = base;
  single.adversary.controlled_ids = AdversaryConfig::first_devices(8);
  single.adversary.confidence_threshold = 0.6;
  single.master_seed = 2;
  const auto ref = run(single).metrics;
  const auto& row60 = rows[rows.size() - 3];
  ASSERT_EQ(std::tuple(row60.m, row60.tau, row60.seed), std::tuple(8, 0.6, std::uint64_t{2}));
  EXPECT_EQ(row60.metrics.attacks_launched, ref.attacks_launched);
  EXPECT_EQ(row60.metrics.attacks_flipped, ref.attacks_flipped);

  const auto cells = aggregate(rows);
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& cell : cells) {
    std::vector<double> hits;
    for (const auto& r : rows) {
      if (r.m == cell.m && r.tau == cell.tau && r.metrics.hit_ratio) hits.push_back(*r.metrics.hit_ratio);
    }
    EXPECT_EQ(cell.defined_runs, static_cast<int>(hits.size()));
    EXPECT_EQ(cell.runs, 2);
    if (hits.empty()) {
      EXPECT_FALSE(cell.mean_hit_ratio.has_value());
      continue;
    }
    const double mean = std::accumulate(hits.begin(), hits.end(), 0.0) / static_cast<double>(hits.size());
    EXPECT_NEAR(*cell.mean_hit_ratio, mean, 1e-12);
  }
}

TEST(Sweep, Validation) {
  const RunConfig base = small_config();
  const std::vector<int> ms{21};
  const std::vector<double> taus{0.75};
  const std::vector<std::uint64_t> seeds{1};
  EXPECT_THROW(sweep(base, ms, taus, seeds), ConfigError);
  const std::vector<int> ok{2};
  const std::vector<double> bad_tau{0.45};
  EXPECT_THROW(sweep(base, ok, bad_tau, seeds), ConfigError);
  EXPECT_THROW(sweep(base, ok, taus, {}), ConfigError);
}

}  // namespace
}  // namespace pma
