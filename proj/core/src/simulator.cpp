#include "pma/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>

#include "pma/errors.hpp"
#include "pma/random.hpp"

namespace pma {

void validate(const RunConfig& cfg) {
  validate(cfg.scenario);
  validate(cfg.fusion_train);
  validate(cfg.surrogate.sgd);
  for (int h : cfg.surrogate.hidden_layers) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive", "surrogate.hidden_layers");
  }
  validate(cfg.adversary, cfg.scenario.n_devices);
  if (cfg.fusion_training_rounds < 1) throw ConfigError("must be >= 1", "fusion.training_rounds");
  if (cfg.observation_rounds < 1) throw ConfigError("must be >= 1", "observation_rounds");
  if (cfg.attack_rounds < 1) throw ConfigError("must be >= 1", "attack_rounds");
  if (cfg.observation_rounds + cfg.attack_rounds != cfg.scenario.n_rounds) {
    throw ConfigError("observation_rounds (" + std::to_string(cfg.observation_rounds) + ") + attack_rounds (" +
                          std::to_string(cfg.attack_rounds) + ") must equal scenario.n_rounds (" +
                          std::to_string(cfg.scenario.n_rounds) + ")",
                      "attack_rounds");
  }
}

std::optional<double> hit_ratio(std::span<const AttackRecord> records) {
  int launched = 0, flipped = 0;
  for (const auto& r : records) {
    launched += r.launched ? 1 : 0;
    flipped += r.flipped ? 1 : 0;
  }
  if (launched == 0) return std::nullopt;
  return static_cast<double>(flipped) / static_cast<double>(launched);
}

namespace {

struct Setup {
  std::vector<DeviceProfile> profiles;
  FusionModel fusion;
  std::vector<Round> timeline;
};

Setup prepare(const RunConfig& cfg) {
  validate(cfg);
  const RandomStream root(cfg.master_seed);
  ScenarioConfig scenario = cfg.scenario;
  scenario.rng_seed = root.derive("scenario").seed();
  const RandomStream world(scenario.rng_seed);

  std::vector<DeviceProfile> profiles = generate_profiles(scenario, world);
  const std::vector<Round> fusion_set =
      generate_rounds(profiles, scenario, world.derive("fusion-train"), cfg.fusion_training_rounds);

  bool seen[2] = {false, false};
  for (const auto& r : fusion_set) seen[r.true_label] = true;
  if (!seen[0] || !seen[1]) {
    throw ConfigError("fusion training data holds a single class; the fusion rule is undefined",
                      "scenario.class_prior");
  }
  FusionTrainConfig ft = cfg.fusion_train;
  ft.rng_seed = root.derive("fusion-sgd").seed();
  FusionModel fusion = train_fusion(fusion_set, ft).model;

  std::vector<Round> timeline = generate_rounds(profiles, scenario, world.derive("timeline"));
  return {std::move(profiles), std::move(fusion), std::move(timeline)};
}

}  // namespace

Experiment::Experiment(const RunConfig& cfg) : cfg_(cfg), fusion_(FusionModel::linear(Eigen::VectorXd::Zero(1), 0)) {
  Setup setup = prepare(cfg_);
  profiles_ = std::move(setup.profiles);
  fusion_ = std::move(setup.fusion);
  auto& timeline = setup.timeline;

  const auto& ids = cfg_.adversary.controlled_ids;
  const int m = cfg_.adversary.m();
  const auto obs = static_cast<std::size_t>(cfg_.observation_rounds);

  if (m > 0) {
    ObservationLog log(m);
    for (std::size_t k = 0; k < obs; ++k) {
      log.observe(controlled_view(timeline[k].readings, ids), fuse(fusion_, timeline[k].readings));
    }
    MlpSpec spec = MlpSpec::with_input(m, cfg_.surrogate.hidden_layers, 2);
    spec.activation = cfg_.surrogate.activation;
    spec.rng_seed = RandomStream(cfg_.master_seed).derive("surrogate").seed();
    surrogate_ = fit_surrogate(log, spec, cfg_.surrogate.sgd);
  }

  const std::size_t attack = timeline.size() - obs;
  attack_phase_.resize(attack);
  for (std::size_t k = 0; k < attack; ++k) {
    Pending& p = attack_phase_[k];
    p.round = std::move(timeline[obs + k]);
    p.clean_decision = fuse(fusion_, p.round.readings);
    p.attacked = p.round.readings;
    p.attacked_decision = p.clean_decision;
  }
  if (!surrogate_) return;

  Eigen::MatrixXd controlled(m, static_cast<Eigen::Index>(attack));
  for (std::size_t k = 0; k < attack; ++k) {
    controlled.col(static_cast<Eigen::Index>(k)) = controlled_view(attack_phase_[k].round.readings, ids);
  }
  const Eigen::MatrixXd probs = forward_batch(surrogate_->net, controlled);
  std::vector<int> inferred(attack);
  for (std::size_t k = 0; k < attack; ++k) {
    Eigen::Index arg = 0;
    attack_phase_[k].confidence = probs.col(static_cast<Eigen::Index>(k)).maxCoeff(&arg);
    attack_phase_[k].inferred_label = inferred[k] = static_cast<int>(arg);
  }
  const std::vector<CraftResult> crafted = craft_batch(*surrogate_, controlled, inferred, cfg_.adversary);
  for (std::size_t k = 0; k < attack; ++k) {
    Pending& p = attack_phase_[k];
    for (int c = 0; c < m; ++c) p.attacked[ids[static_cast<std::size_t>(c)]] = crafted[k].readings[c];
    p.attacked_decision = fuse(fusion_, p.attacked);
    p.surrogate_flipped = crafted[k].surrogate_flipped;
  }
}

RunReport Experiment::evaluate(double tau, bool keep_reports) const {
  validate_threshold(tau);
  RunReport report{cfg_, {}, fusion_, {}, {}};
  report.config.adversary.confidence_threshold = tau;
  report.records.reserve(attack_phase_.size());
  if (keep_reports) report.reports.reserve(attack_phase_.size());

  RunMetrics& mx = report.metrics;
  std::size_t correct = 0, agree = 0;
  for (const Pending& p : attack_phase_) {
    AttackRecord rec;
    rec.round_id = p.round.round_id;
    rec.true_label = p.round.true_label;
    rec.clean_decision = p.clean_decision;
    rec.inferred_label = p.inferred_label;
    rec.confidence = p.confidence;
    if (surrogate_) {
      rec.launched = cfg_.adversary.gate_direction == GateDirection::AtLeast ? p.confidence >= tau : p.confidence < tau;
    }
    rec.attacked_decision = rec.launched ? p.attacked_decision : p.clean_decision;
    rec.flipped = rec.launched && rec.attacked_decision != rec.clean_decision;

    correct += p.clean_decision == p.round.true_label ? 1 : 0;
    agree += p.inferred_label == p.clean_decision ? 1 : 0;
    if (rec.launched) {
      ++mx.attacks_launched;
      mx.attacks_flipped += rec.flipped ? 1 : 0;
      mx.surrogate_flips += p.surrogate_flipped ? 1 : 0;
    }
    if (keep_reports) report.reports.push_back({p.round.readings, rec.launched ? p.attacked : p.round.readings});
    report.records.push_back(rec);
  }

  const auto total = static_cast<double>(attack_phase_.size());
  mx.hit_ratio = hit_ratio(report.records);
  mx.attack_rate = static_cast<double>(mx.attacks_launched) / total;
  mx.fusion_clean_accuracy = static_cast<double>(correct) / total;
  if (surrogate_) mx.surrogate_agreement = static_cast<double>(agree) / total;
  return report;
}

RunReport run(const RunConfig& cfg, bool keep_reports) {
  return Experiment(cfg).evaluate(cfg.adversary.confidence_threshold, keep_reports);
}

std::vector<SweepRow> sweep(const RunConfig& base, std::span<const int> m_values, std::span<const double> tau_values,
                            std::span<const std::uint64_t> seeds, int jobs) {
  for (int m : m_values) {
    if (m < 0 || m > base.scenario.n_devices) {
      throw ConfigError("m = " + std::to_string(m) + " outside [0, " + std::to_string(base.scenario.n_devices) + "]",
                        "sweep.m_values");
    }
  }
  for (double tau : tau_values) validate_threshold(tau);
  if (m_values.empty()) throw ConfigError("empty list", "sweep.m_values");
  if (tau_values.empty()) throw ConfigError("empty list", "sweep.tau_values");
  if (seeds.empty()) throw ConfigError("empty list", "sweep.seeds");

  struct Task {
    int m;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int m : m_values)
    for (std::uint64_t s : seeds) tasks.push_back({m, s});

  std::vector<SweepRow> rows;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        RunConfig cfg = base;
        cfg.adversary.controlled_ids = AdversaryConfig::first_devices(tasks[i].m);
        cfg.master_seed = tasks[i].seed;
        const Experiment exp(cfg);
        std::vector<SweepRow> local;
        for (double tau : tau_values) local.push_back({tasks[i].m, tau, tasks[i].seed, exp.evaluate(tau).metrics});
        std::lock_guard lock(mutex);
        rows.insert(rows.end(), local.begin(), local.end());
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };

  const int threads = std::clamp(jobs, 1, static_cast<int>(tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.m, a.tau, a.seed) < std::tie(b.m, b.tau, b.seed);
  });
  return rows;
}

std::vector<SweepCell> aggregate(std::span<const SweepRow> rows) {
  std::map<std::pair<int, double>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.m, r.tau}].push_back(&r);

  std::vector<SweepCell> cells;
  for (const auto& [key, members] : groups) {
    SweepCell c;
    c.m = key.first;
    c.tau = key.second;
    c.runs = static_cast<int>(members.size());
    double hit_sum = 0.0, rate_sum = 0.0;
    for (const SweepRow* r : members) {
      rate_sum += r->metrics.attack_rate;
      if (r->metrics.hit_ratio) {
        hit_sum += *r->metrics.hit_ratio;
        ++c.defined_runs;
      }
    }
    c.mean_attack_rate = rate_sum / c.runs;
    if (c.defined_runs > 0) {
      const double mean = hit_sum / c.defined_runs;
      c.mean_hit_ratio = mean;
      if (c.defined_runs > 1) {
        double ss = 0.0;
        for (const SweepRow* r : members)
          if (r->metrics.hit_ratio) ss += (*r->metrics.hit_ratio - mean) * (*r->metrics.hit_ratio - mean);
        c.std_hit_ratio = std::sqrt(ss / (c.defined_runs - 1));
      }
    }
    cells.push_back(c);
  }
  return cells;
}

std::vector<SweepCell> sweep_m(const RunConfig& base, std::span<const int> m_values,
                               std::span<const std::uint64_t> seeds, int jobs) {
  const double tau[1] = {base.adversary.confidence_threshold};
  const auto rows = sweep(base, m_values, tau, seeds, jobs);
  return aggregate(rows);
}

std::vector<SweepCell> sweep_threshold(const RunConfig& base, std::span<const double> tau_values,
                                       std::span<const int> m_values, std::span<const std::uint64_t> seeds,
                                       int jobs) {
  const auto rows = sweep(base, m_values, tau_values, seeds, jobs);
  return aggregate(rows);
}

}  // namespace pma
