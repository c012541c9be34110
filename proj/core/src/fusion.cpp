#include "pma/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "pma/errors.hpp"

namespace pma {

FusionModel FusionModel::linear(Eigen::VectorXd weights, double bias) {
  if (weights.size() == 0) throw InputError("fusion model needs at least one weight");
  return FusionModel(FusionKind::LinearSVM, std::move(weights), bias);
}

FusionModel FusionModel::majority_vote(Eigen::VectorXd thresholds) {
  if (thresholds.size() == 0) throw InputError("fusion model needs at least one threshold");
  return FusionModel(FusionKind::MajorityVote, std::move(thresholds), 0.0);
}

const Eigen::VectorXd& FusionModel::weights() const {
  if (kind_ != FusionKind::LinearSVM) throw UnsupportedError("majority-vote model has no weights");
  return params_;
}

double FusionModel::bias() const {
  if (kind_ != FusionKind::LinearSVM) throw UnsupportedError("majority-vote model has no bias");
  return bias_;
}

const Eigen::VectorXd& FusionModel::thresholds() const {
  if (kind_ != FusionKind::MajorityVote) throw UnsupportedError("linear model has no vote thresholds");
  return params_;
}

double FusionModel::decision_value(const Eigen::VectorXd& readings) const {
  const auto& w = weights();
  if (readings.size() != w.size()) {
    throw InputError("expected " + std::to_string(w.size()) + " readings, got " + std::to_string(readings.size()));
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i] * readings[i];
  return s + bias_;
}

bool FusionModel::operator==(const FusionModel& other) const {
  return kind_ == other.kind_ && params_.size() == other.params_.size() && params_ == other.params_ &&
         bias_ == other.bias_;
}

void validate(const FusionTrainConfig& cfg) {
  if (!(cfg.regularization > 0.0)) throw ConfigError("must be > 0", "fusion.regularization");
  if (cfg.epochs < 1) throw ConfigError("must be >= 1", "fusion.epochs");
  if (!(cfg.learning_rate_scale > 0.0)) throw ConfigError("must be > 0", "fusion.learning_rate_scale");
}

FusionTrainResult train_fusion(const std::vector<Round>& data, const FusionTrainConfig& cfg) {
  validate(cfg);
  if (data.empty()) throw TrainingError("fusion training set is empty");
  const Eigen::Index n = data.front().readings.size();
  bool seen[2] = {false, false};
  for (const auto& r : data) {
    if (r.readings.size() != n) throw InputError("fusion training rounds have inconsistent dimensions");
    if (r.true_label != 0 && r.true_label != 1) throw InputError("fusion labels must be 0 or 1");
    seen[r.true_label] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw TrainingError("fusion training data contains a single class; decision rule undefined");
  }

  const double lambda = cfg.regularization;
  const double radius = 1.0 / std::sqrt(lambda);
  // Augmented weight vector: [w; b] against [x; 1].
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd x(n + 1);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng = RandomStream(cfg.rng_seed).derive("fusion-shuffle");

  long long t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t idx : order) {
      ++t;
      const Round& r = data[idx];
      x.head(n) = r.readings;
      x[n] = 1.0;
      const double y = r.true_label == 1 ? 1.0 : -1.0;
      const double eta = cfg.learning_rate_scale / (lambda * static_cast<double>(t));
      const double margin = y * w.dot(x);
      w *= std::max(0.0, 1.0 - eta * lambda);
      if (margin < 1.0) w += (eta * y) * x;
      const double norm = w.norm();
      if (norm > radius) w *= radius / norm;
    }
  }

  FusionTrainResult result{FusionModel::linear(w.head(n), w[n]), 0.0};
  result.training_accuracy = accuracy(result.model, data);
  return result;
}

FusionModel train_majority_vote(const std::vector<Round>& data) {
  if (data.empty()) throw TrainingError("majority-vote training set is empty");
  const Eigen::Index n = data.front().readings.size();
  Eigen::VectorXd sum0 = Eigen::VectorXd::Zero(n), sum1 = Eigen::VectorXd::Zero(n);
  int c0 = 0, c1 = 0;
  for (const auto& r : data) {
    if (r.readings.size() != n) throw InputError("training rounds have inconsistent dimensions");
    if (r.true_label == 1) {
      sum1 += r.readings;
      ++c1;
    } else {
      sum0 += r.readings;
      ++c0;
    }
  }
  if (c0 == 0 || c1 == 0) throw TrainingError("majority-vote training data contains a single class");
  return FusionModel::majority_vote(0.5 * (sum0 / c0 + sum1 / c1));
}

int fuse(const FusionModel& model, const Eigen::VectorXd& readings) {
  if (readings.size() != model.dimension()) {
    throw InputError("expected " + std::to_string(model.dimension()) + " readings, got " +
                     std::to_string(readings.size()));
  }
  if (model.kind() == FusionKind::LinearSVM) return model.decision_value(readings) > 0.0 ? 1 : 0;
  const auto& th = model.thresholds();
  int above = 0;
  for (Eigen::Index i = 0; i < th.size(); ++i) above += readings[i] > th[i] ? 1 : 0;
  return 2 * above > th.size() ? 1 : 0;
}

double decision_margin(const FusionModel& model, const Eigen::VectorXd& readings) {
  if (model.kind() != FusionKind::LinearSVM) throw UnsupportedError("decision margin needs a linear model");
  const double norm = model.weights().norm();
  if (norm == 0.0) throw NumericError("decision margin undefined for zero weights");
  return model.decision_value(readings) / norm;
}

double accuracy(const FusionModel& model, const std::vector<Round>& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : data) hits += fuse(model, r.readings) == r.true_label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void write_vector(std::ostream& os, const char* tag, const Eigen::VectorXd& v) {
  os << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << v[i];
  os << '\n';
}

Eigen::VectorXd read_vector(std::istream& is, const char* tag, Eigen::Index n) {
  std::string word;
  if (!(is >> word) || word != tag) throw InputError(std::string("fusion record: expected '") + tag + "'");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(is >> v[i])) throw InputError(std::string("fusion record: truncated '") + tag + "' line");
  }
  return v;
}

}  // namespace

void write_fusion_model(std::ostream& os, const FusionModel& model) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  if (model.kind() == FusionKind::LinearSVM) {
    os << "fusion LinearSVM " << model.dimension() << '\n';
    write_vector(os, "weights", model.weights());
    os << "bias " << model.bias() << '\n';
  } else {
    os << "fusion MajorityVote " << model.dimension() << '\n';
    write_vector(os, "thresholds", model.thresholds());
  }
  os.precision(old_precision);
}

FusionModel read_fusion_model(std::istream& is) {
  std::string magic, kind;
  long long n = 0;
  if (!(is >> magic >> kind >> n) || magic != "fusion" || n < 1) throw InputError("fusion record: bad header");
  if (kind == "LinearSVM") {
    Eigen::VectorXd w = read_vector(is, "weights", n);
    std::string word;
    double b = 0.0;
    if (!(is >> word >> b) || word != "bias") throw InputError("fusion record: expected 'bias'");
    return FusionModel::linear(std::move(w), b);
  }
  if (kind == "MajorityVote") return FusionModel::majority_vote(read_vector(is, "thresholds", n));
  throw InputError("fusion record: unknown kind '" + kind + "'");
}

}  // namespace pma
