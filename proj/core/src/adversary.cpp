#include "pma/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pma/errors.hpp"

namespace pma {

std::vector<int> AdversaryConfig::first_devices(int m) {
  std::vector<int> ids(static_cast<std::size_t>(std::max(m, 0)));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

void validate_threshold(double tau) {
  if (!(tau > 0.5 && tau <= 1.0)) {
    throw ConfigError("confidence threshold " + std::to_string(tau) + " outside (0.5, 1]",
                      "adversary.confidence_threshold");
  }
}

void validate(const AdversaryConfig& cfg, int n_devices) {
  if (cfg.m() > n_devices) {
    throw ConfigError("controls " + std::to_string(cfg.m()) + " of only " + std::to_string(n_devices) + " devices",
                      "adversary.controlled_ids");
  }
  std::vector<int> ids = cfg.controlled_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("device indices must be distinct", "adversary.controlled_ids");
  }
  for (int id : ids) {
    if (id < 0 || id >= n_devices) {
      throw ConfigError("device index " + std::to_string(id) + " outside [0, " + std::to_string(n_devices) + ")",
                        "adversary.controlled_ids");
    }
  }
  validate_threshold(cfg.confidence_threshold);
  if (!(cfg.craft_step > 0.0) || !std::isfinite(cfg.craft_step)) throw ConfigError("must be > 0", "adversary.craft_step");
  if (cfg.craft_iters < 0) throw ConfigError("must be >= 0", "adversary.craft_iters");
  if (cfg.margin_steps < 0) throw ConfigError("must be >= 0", "adversary.margin_steps");
}

Eigen::VectorXd controlled_view(const Eigen::VectorXd& readings, std::span<const int> controlled_ids) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(controlled_ids.size()));
  for (std::size_t k = 0; k < controlled_ids.size(); ++k) {
    const int id = controlled_ids[k];
    if (id < 0 || id >= readings.size()) throw InputError("controlled device index out of range");
    out[static_cast<Eigen::Index>(k)] = readings[id];
  }
  return out;
}

ObservationLog::ObservationLog(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw InputError("observation log needs at least one controlled device");
}

void ObservationLog::observe(Eigen::VectorXd controlled_readings, int fusion_decision) {
  if (controlled_readings.size() != dimension_) {
    throw InputError("expected " + std::to_string(dimension_) + " controlled readings, got " +
                     std::to_string(controlled_readings.size()));
  }
  if (fusion_decision != 0 && fusion_decision != 1) throw InputError("fusion decision must be 0 or 1");
  entries_.push_back({std::move(controlled_readings), fusion_decision});
}

Eigen::VectorXd ObservationLog::observed_min() const {
  if (entries_.empty()) throw InputError("observation log is empty");
  Eigen::VectorXd lo = entries_.front().controlled_readings;
  for (const auto& e : entries_) lo = lo.cwiseMin(e.controlled_readings);
  return lo;
}

Eigen::VectorXd ObservationLog::observed_max() const {
  if (entries_.empty()) throw InputError("observation log is empty");
  Eigen::VectorXd hi = entries_.front().controlled_readings;
  for (const auto& e : entries_) hi = hi.cwiseMax(e.controlled_readings);
  return hi;
}

SurrogateModel fit_surrogate(const ObservationLog& log, const MlpSpec& spec, const SgdConfig& sgd) {
  if (log.empty()) throw TrainingError("observation log is empty");
  if (spec.input_dim() != log.dimension()) {
    throw ConfigError("surrogate input layer " + std::to_string(spec.input_dim()) + " does not match m = " +
                          std::to_string(log.dimension()),
                      "surrogate.layer_sizes");
  }
  if (spec.num_classes() != 2) throw ConfigError("surrogate must have two outputs", "surrogate.layer_sizes");

  const auto entries = log.entries();
  Eigen::MatrixXd inputs(log.dimension(), static_cast<Eigen::Index>(entries.size()));
  std::vector<int> labels(entries.size());
  bool seen[2] = {false, false};
  for (std::size_t k = 0; k < entries.size(); ++k) {
    inputs.col(static_cast<Eigen::Index>(k)) = entries[k].controlled_readings;
    labels[k] = entries[k].fusion_decision;
    seen[labels[k]] = true;
  }
  if (!seen[0] || !seen[1]) throw TrainingError("observed fusion decisions contain a single class");

  SurrogateModel s{Mlp(spec), log.observed_min(), log.observed_max(), 0.0, {}};
  s.loss_curve = train(s.net, inputs, labels, sgd).loss_curve;

  const Eigen::MatrixXd probs = forward_batch(s.net, inputs);
  std::size_t agree = 0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    Eigen::Index arg = 0;
    probs.col(j).maxCoeff(&arg);
    agree += static_cast<int>(arg) == labels[static_cast<std::size_t>(j)] ? 1 : 0;
  }
  s.log_agreement = static_cast<double>(agree) / static_cast<double>(entries.size());
  return s;
}

AttackDecision gate(const SurrogateModel& surrogate, const Eigen::VectorXd& controlled_readings, double tau,
                    GateDirection direction) {
  const ConfidenceVector cv = forward(surrogate.net, controlled_readings);
  AttackDecision d;
  d.inferred_label = cv.argmax();
  d.confidence = cv.max();
  d.launched = direction == GateDirection::AtLeast ? d.confidence >= tau : d.confidence < tau;
  return d;
}

namespace {

double sign(double v) { return static_cast<double>((0.0 < v) - (v < 0.0)); }

int argmax_col(const Eigen::MatrixXd& m, Eigen::Index col) {
  Eigen::Index arg = 0;
  m.col(col).maxCoeff(&arg);
  return static_cast<int>(arg);
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = x.col(cols[k]);
  return sub;
}

// One clipped sign-gradient step on the listed columns toward `targets`.
void step_columns(const SurrogateModel& s, Eigen::MatrixXd& x, const std::vector<Eigen::Index>& cols,
                  const std::vector<int>& targets, const AdversaryConfig& cfg) {
  if (cols.empty()) return;
  std::vector<int> sub_targets(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) sub_targets[k] = targets[static_cast<std::size_t>(cols[k])];
  const Eigen::MatrixXd grad = input_gradients(s.net, gather(x, cols), sub_targets);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    auto col = x.col(cols[k]);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      col[i] -= cfg.craft_step * sign(grad(i, static_cast<Eigen::Index>(k)));
      if (cfg.clip_to_observed_range) col[i] = std::clamp(col[i], s.observed_min[i], s.observed_max[i]);
    }
  }
}

// Crafts one block of columns; out[j] receives column j.
void craft_block(const SurrogateModel& surrogate, const Eigen::MatrixXd& readings, std::span<const int> inferred_labels,
                 const AdversaryConfig& cfg, std::span<CraftResult> out) {
  Eigen::MatrixXd x = readings;
  const Eigen::Index count = x.cols();
  std::vector<int> targets(static_cast<std::size_t>(count));
  for (std::size_t k = 0; k < targets.size(); ++k) targets[k] = 1 - inferred_labels[k];

  std::vector<Eigen::Index> active(static_cast<std::size_t>(count));
  std::iota(active.begin(), active.end(), Eigen::Index{0});
  std::vector<Eigen::Index> stopped;

  for (int it = 0; it < cfg.craft_iters && !active.empty(); ++it) {
    step_columns(surrogate, x, active, targets, cfg);
    for (Eigen::Index j : active) ++out[static_cast<std::size_t>(j)].steps;
    if (!cfg.stop_on_surrogate_flip) continue;
    const Eigen::MatrixXd logits = surrogate.net.logits(gather(x, active));
    std::vector<Eigen::Index> still;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const bool crossed = argmax_col(logits, static_cast<Eigen::Index>(k)) == targets[static_cast<std::size_t>(active[k])];
      (crossed ? stopped : still).push_back(active[k]);
    }
    active = std::move(still);
  }

  for (int s = 0; s < cfg.margin_steps && !stopped.empty(); ++s) {
    step_columns(surrogate, x, stopped, targets, cfg);
    for (Eigen::Index j : stopped) ++out[static_cast<std::size_t>(j)].steps;
  }

  const Eigen::MatrixXd final_logits = surrogate.net.logits(x);
  for (Eigen::Index j = 0; j < count; ++j) {
    auto& r = out[static_cast<std::size_t>(j)];
    r.readings = x.col(j);
    r.surrogate_flipped = argmax_col(final_logits, j) == targets[static_cast<std::size_t>(j)];
  }
}

}  // namespace

std::vector<CraftResult> craft_batch(const SurrogateModel& surrogate, const Eigen::MatrixXd& controlled_readings,
                                     std::span<const int> inferred_labels, const AdversaryConfig& cfg) {
  const Eigen::Index count = controlled_readings.cols();
  if (controlled_readings.rows() != surrogate.net.input_dim()) {
    throw InputError("expected " + std::to_string(surrogate.net.input_dim()) + " controlled readings, got " +
                     std::to_string(controlled_readings.rows()));
  }
  if (static_cast<Eigen::Index>(inferred_labels.size()) != count) throw InputError("one inferred label per column");
  for (int y : inferred_labels) {
    if (y != 0 && y != 1) throw InputError("inferred label must be 0 or 1");
  }

  // Blocks keep the per-layer activations cache-resident.
  constexpr Eigen::Index kBlock = 256;
  std::vector<CraftResult> out(static_cast<std::size_t>(count));
  for (Eigen::Index first = 0; first < count; first += kBlock) {
    const Eigen::Index width = std::min(kBlock, count - first);
    craft_block(surrogate, controlled_readings.middleCols(first, width),
                inferred_labels.subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(width)), cfg,
                std::span(out).subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(width)));
  }
  return out;
}

CraftResult craft(const SurrogateModel& surrogate, const Eigen::VectorXd& controlled_readings, int inferred_label,
                  const AdversaryConfig& cfg) {
  const int labels[1] = {inferred_label};
  return std::move(craft_batch(surrogate, Eigen::MatrixXd(controlled_readings), labels, cfg).front());
}

}  // namespace pma
