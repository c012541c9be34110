#include "pma/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pma/errors.hpp"

namespace pma {
namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Typed view over one JSON object that remembers which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  std::string key(const std::string& k) const { return join(path_, k); }

  Section child(const std::string& k) {
    seen_.insert(k);
    static const json empty = json::object();
    if (!j_.contains(k) || j_.at(k).is_null()) return Section(empty, key(k));
    return Section(j_.at(k), key(k));
  }

  void get(const std::string& k, double& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError("expected a number", key(k));
    out = v.get<double>();
  }

  void get(const std::string& k, int& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError("expected an integer", key(k));
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      throw ConfigError("integer out of range", key(k));
    }
    out = static_cast<int>(x);
  }

  void get(const std::string& k, std::uint64_t& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("expected a non-negative integer", key(k));
    }
    out = v.get<std::uint64_t>();
  }

  void get(const std::string& k, bool& out) {
    if (!has(k)) return;
    if (!j_.at(k).is_boolean()) throw ConfigError("expected true or false", key(k));
    out = j_.at(k).get<bool>();
  }

  void get(const std::string& k, std::string& out) {
    if (!has(k)) return;
    if (!j_.at(k).is_string()) throw ConfigError("expected a string", key(k));
    out = j_.at(k).get<std::string>();
  }

  void get(const std::string& k, Interval& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("expected [lower, upper]", key(k));
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  template <class T>
  void get_list(const std::string& k, std::vector<T>& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError("expected a list", key(k));
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& e = v[i];
      const std::string where = key(k) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_same_v<T, double>) {
        if (!e.is_number()) throw ConfigError("expected a number", where);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
          throw ConfigError("expected a non-negative integer", where);
        }
      } else {
        if (!e.is_number_integer()) throw ConfigError("expected an integer", where);
      }
      out.push_back(e.get<T>());
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key", key(k));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Activation parse_activation(const std::string& s, const std::string& key) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("expected \"relu\" or \"tanh\", got \"" + s + "\"", key);
}

GateDirection parse_direction(const std::string& s, const std::string& key) {
  if (s == "at_least") return GateDirection::AtLeast;
  if (s == "below") return GateDirection::Below;
  throw ConfigError("expected \"at_least\" or \"below\", got \"" + s + "\"", key);
}

ConfigDocument from_json(const json& root) {
  ConfigDocument doc;
  RunConfig& run = doc.run;
  Section top(root, "");

  top.get("master_seed", run.master_seed);

  Section sc = top.child("scenario");
  sc.get("n_devices", run.scenario.n_devices);
  sc.get("class_prior", run.scenario.class_prior);
  sc.get("mean_range_class0", run.scenario.mean_range_class0);
  sc.get("mean_range_class1", run.scenario.mean_range_class1);
  sc.get("std_range", run.scenario.std_range);
  const bool has_rounds = sc.has("n_rounds");
  sc.get("n_rounds", run.scenario.n_rounds);
  sc.reject_unknown();

  top.get("observation_rounds", run.observation_rounds);
  const bool has_attack = top.has("attack_rounds");
  top.get("attack_rounds", run.attack_rounds);
  if (has_attack && !has_rounds) {
    run.scenario.n_rounds = run.observation_rounds + run.attack_rounds;
  } else if (!has_attack) {
    run.attack_rounds = run.scenario.n_rounds - run.observation_rounds;
  }

  Section fu = top.child("fusion");
  fu.get("regularization", run.fusion_train.regularization);
  fu.get("epochs", run.fusion_train.epochs);
  fu.get("learning_rate_scale", run.fusion_train.learning_rate_scale);
  fu.get("training_rounds", run.fusion_training_rounds);
  fu.reject_unknown();

  Section su = top.child("surrogate");
  su.get_list("hidden_layers", run.surrogate.hidden_layers);
  std::string activation = "relu";
  su.get("activation", activation);
  run.surrogate.activation = parse_activation(activation, su.key("activation"));
  su.get("epochs", run.surrogate.sgd.epochs);
  su.get("learning_rate", run.surrogate.sgd.learning_rate);
  su.get("batch_size", run.surrogate.sgd.batch_size);
  su.reject_unknown();

  Section ad = top.child("adversary");
  AdversaryConfig& adv = run.adversary;
  const bool has_ids = ad.has("controlled_ids");
  ad.get_list("controlled_ids", adv.controlled_ids);
  if (ad.has("m")) {
    int m = 0;
    ad.get("m", m);
    if (m < 0) throw ConfigError("must be >= 0", ad.key("m"));
    if (has_ids && m != adv.m()) {
      throw ConfigError("m = " + std::to_string(m) + " disagrees with " + std::to_string(adv.m()) + " controlled_ids",
                        ad.key("m"));
    }
    if (!has_ids) adv.controlled_ids = AdversaryConfig::first_devices(m);
  }
  ad.get("confidence_threshold", adv.confidence_threshold);
  ad.get("craft_step", adv.craft_step);
  ad.get("craft_iters", adv.craft_iters);
  ad.get("stop_on_surrogate_flip", adv.stop_on_surrogate_flip);
  ad.get("margin_steps", adv.margin_steps);
  ad.get("clip_to_observed_range", adv.clip_to_observed_range);
  std::string direction = "at_least";
  ad.get("gate_direction", direction);
  adv.gate_direction = parse_direction(direction, ad.key("gate_direction"));
  ad.reject_unknown();

  Section sw = top.child("sweep");
  sw.get_list("m_values", doc.sweep.m_values);
  sw.get_list("tau_values", doc.sweep.tau_values);
  sw.get_list("seeds", doc.sweep.seeds);
  sw.reject_unknown();
  if (doc.sweep.m_values.empty()) doc.sweep.m_values = {adv.m()};
  if (doc.sweep.tau_values.empty()) doc.sweep.tau_values = {adv.confidence_threshold};
  if (doc.sweep.seeds.empty()) doc.sweep.seeds = {run.master_seed};

  Section out = top.child("output");
  out.get("csv", doc.output.csv);
  out.get("summary", doc.output.summary);
  out.get("dump_rounds", doc.output.dump_rounds);
  out.reject_unknown();

  top.reject_unknown();

  validate(run);
  for (std::size_t i = 0; i < doc.sweep.m_values.size(); ++i) {
    const int m = doc.sweep.m_values[i];
    if (m < 0 || m > run.scenario.n_devices) {
      throw ConfigError("m = " + std::to_string(m) + " outside [0, " + std::to_string(run.scenario.n_devices) + "]",
                        "sweep.m_values[" + std::to_string(i) + "]");
    }
  }
  for (std::size_t i = 0; i < doc.sweep.tau_values.size(); ++i) {
    const double tau = doc.sweep.tau_values[i];
    if (!(tau > 0.5 && tau <= 1.0)) {
      throw ConfigError("threshold " + std::to_string(tau) + " outside (0.5, 1]",
                        "sweep.tau_values[" + std::to_string(i) + "]");
    }
  }
  return doc;
}

}  // namespace

ConfigDocument parse_config(std::string_view text) {
  json root;
  try {
    // Whitespace-only documents mean "all defaults".
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
      root = json::object();
    } else {
      root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    }
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<document>");
  }
  return from_json(root);
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'", "<file>");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_canonical(const ConfigDocument& doc) {
  const RunConfig& run = doc.run;
  const auto interval = [](const Interval& r) { return json::array({r.lo, r.hi}); };
  json j;
  j["master_seed"] = run.master_seed;
  j["observation_rounds"] = run.observation_rounds;
  j["attack_rounds"] = run.attack_rounds;
  j["scenario"] = {
      {"n_devices", run.scenario.n_devices},
      {"class_prior", run.scenario.class_prior},
      {"mean_range_class0", interval(run.scenario.mean_range_class0)},
      {"mean_range_class1", interval(run.scenario.mean_range_class1)},
      {"std_range", interval(run.scenario.std_range)},
      {"n_rounds", run.scenario.n_rounds},
  };
  j["fusion"] = {
      {"regularization", run.fusion_train.regularization},
      {"epochs", run.fusion_train.epochs},
      {"learning_rate_scale", run.fusion_train.learning_rate_scale},
      {"training_rounds", run.fusion_training_rounds},
  };
  j["surrogate"] = {
      {"hidden_layers", run.surrogate.hidden_layers},
      {"activation", run.surrogate.activation == Activation::ReLU ? "relu" : "tanh"},
      {"epochs", run.surrogate.sgd.epochs},
      {"learning_rate", run.surrogate.sgd.learning_rate},
      {"batch_size", run.surrogate.sgd.batch_size},
  };
  const AdversaryConfig& adv = run.adversary;
  j["adversary"] = {
      {"controlled_ids", adv.controlled_ids},
      {"confidence_threshold", adv.confidence_threshold},
      {"craft_step", adv.craft_step},
      {"craft_iters", adv.craft_iters},
      {"stop_on_surrogate_flip", adv.stop_on_surrogate_flip},
      {"margin_steps", adv.margin_steps},
      {"clip_to_observed_range", adv.clip_to_observed_range},
      {"gate_direction", adv.gate_direction == GateDirection::AtLeast ? "at_least" : "below"},
  };
  j["sweep"] = {
      {"m_values", doc.sweep.m_values},
      {"tau_values", doc.sweep.tau_values},
      {"seeds", doc.sweep.seeds},
  };
  j["output"] = {
      {"csv", doc.output.csv},
      {"summary", doc.output.summary},
      {"dump_rounds", doc.output.dump_rounds},
  };
  return j.dump(2) + "\n";
}

}  // namespace pma
