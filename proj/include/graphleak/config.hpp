#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "graphleak/common.hpp"
#include "graphleak/defense.hpp"
#include "graphleak/gra.hpp"
#include "graphleak/mia.hpp"
#include "graphleak/stats.hpp"
#include "graphleak/surrogate.hpp"

namespace graphleak {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline nlohmann::json default_config_json() {
  return nlohmann::json::parse(R"({
    "seed": 0,
    "jobs": 0,
    "data": {
      "input": "",
      "format": "jsonl",
      "graphs": 50,
      "n_min": 20,
      "n_max": 20,
      "density_min": 0.3,
      "density_max": 0.3,
      "classes": 1
    },
    "surrogate": {
      "mode": "memorize",
      "flip_probability": 0.1,
      "permute_outputs": false,
      "generate": 500
    },
    "regal": {
      "hops": 2,
      "delta": 0.5,
      "gamma_struct": 0.03,
      "gamma_attr": 1.0,
      "landmarks": 0,
      "dim": 0,
      "alpha": 5,
      "default_attributes": true
    },
    "gra": {
      "top_fraction": 0.1,
      "refine_below": 0.5,
      "use_union": false,
      "distinct": true,
      "eval_refine": true,
      "r2_threshold": 0.75
    },
    "pia": {
      "properties": ["density", "avg_degree", "triangles_per_node", "arboricity"],
      "buckets": 5
    },
    "awe": {
      "walk_length": 5,
      "walks": 1000
    },
    "mia": {
      "setting": "non_transfer",
      "variant": "v2",
      "generations": 100,
      "classifier": "mlp",
      "hidden": 64,
      "epochs": 300,
      "rate": 0.01,
      "fpr": 0.1,
      "permute_labels": false,
      "target_input": ""
    },
    "defense": {
      "mode": "post",
      "ratio": 0.1,
      "flip_probability": 0.1,
      "epochs_per_iter": 10,
      "hidden": 16,
      "rate": 0.01,
      "cold_start": false
    },
    "tradeoff": {
      "ratios": [0.0, 0.1, 0.3, 0.5],
      "probabilities": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
      "attacks": ["gra", "mia"]
    },
    "pipeline": {
      "attacks": ["gra", "pia", "mia"],
      "defend": true,
      "tradeoff": true
    }
  })");
}

namespace detail {

inline bool same_kind(const nlohmann::json& slot, const nlohmann::json& v) {
  if (slot.is_number() && v.is_number()) {
    if (slot.is_number_float()) return true;
    if (v.is_number_unsigned()) return true;
    return v.is_number_integer() && v.get<long long>() >= 0;
  }
  return slot.type() == v.type();
}

inline void merge_checked(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
      continue;
    }
    if (!same_kind(slot, it.value()))
      throw ConfigError("config key '" + key + "' expects " + std::string(slot.type_name()) + ", got " +
                        it.value().type_name());
    if (slot.is_number_float()) slot = it.value().get<double>();
    else slot = it.value();
  }
}

}  // namespace detail

class Config {
 public:
  Config() : j_(default_config_json()) {}

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json patch;
    try {
      patch = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config '" + path.string() + "' is not valid json: " + e.what());
    }
    Config c;
    detail::merge_checked(c.j_, patch, "");
    c.validate();
    return c;
  }

  // Applies one dotted `key=value` override. The value is read as json and
  // falls back to a plain string.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      value = text;
    }
    nlohmann::json patch = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
      parts.push_back(rest.substr(0, pos));
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = nlohmann::json{{*it, patch}};
    detail::merge_checked(j_, patch, "");
    validate();
  }

  const nlohmann::json& json() const { return j_; }

  std::uint64_t seed() const { return j_["seed"].get<std::uint64_t>(); }
  void set_seed(std::uint64_t s) { j_["seed"] = s; }
  std::size_t jobs() const { return j_["jobs"].get<std::size_t>(); }
  void set_jobs(std::size_t n) { j_["jobs"] = n; }

  // Canonical text without the parallelism knob, which never changes results.
  std::string canonical() const {
    nlohmann::json c = j_;
    c.erase("jobs");
    return c.dump();
  }

  std::string hash() const { return hex64(fnv1a(canonical())); }

  template <typename T>
  T get(const std::string& section, const std::string& key) const {
    return j_.at(section).at(key).get<T>();
  }

  SurrogateModel::Options surrogate() const {
    SurrogateModel::Options o;
    o.mode = parse_surrogate_mode(get<std::string>("surrogate", "mode"));
    o.flip_probability = get<double>("surrogate", "flip_probability");
    o.permute_outputs = get<bool>("surrogate", "permute_outputs");
    return o;
  }

  RegalParams regal() const {
    RegalParams p;
    p.hops = get<std::size_t>("regal", "hops");
    p.delta = get<double>("regal", "delta");
    p.gamma_struct = get<double>("regal", "gamma_struct");
    p.gamma_attr = get<double>("regal", "gamma_attr");
    p.landmarks = get<std::size_t>("regal", "landmarks");
    p.dim = get<std::size_t>("regal", "dim");
    p.alpha = get<std::size_t>("regal", "alpha");
    p.default_attributes = get<bool>("regal", "default_attributes");
    return p;
  }

  GraParams gra() const {
    GraParams p;
    p.top_fraction = get<double>("gra", "top_fraction");
    p.regal = regal();
    p.refine_below = get<double>("gra", "refine_below");
    p.use_union = get<bool>("gra", "use_union");
    p.distinct = get<bool>("gra", "distinct");
    return p;
  }

  EvalParams eval() const {
    EvalParams p;
    p.regal = regal();
    p.refine = get<bool>("gra", "eval_refine");
    p.r2_threshold = get<double>("gra", "r2_threshold");
    return p;
  }

  std::vector<Property> properties() const {
    std::vector<Property> out;
    for (const auto& s : j_["pia"]["properties"]) out.push_back(parse_property(s.get<std::string>()));
    return out;
  }

  AweParams awe() const { return {get<std::size_t>("awe", "walk_length"), get<std::size_t>("awe", "walks")}; }

  MiaConfig mia() const {
    MiaConfig c;
    c.query.variant = parse_feature_variant(get<std::string>("mia", "variant"));
    c.query.generations = get<std::size_t>("mia", "generations");
    c.query.awe = awe();
    c.classifier.kind = parse_classifier_kind(get<std::string>("mia", "classifier"));
    c.classifier.hidden = get<std::size_t>("mia", "hidden");
    c.classifier.epochs = get<std::size_t>("mia", "epochs");
    c.classifier.rate = get<double>("mia", "rate");
    c.fpr = get<double>("mia", "fpr");
    c.permute_labels = get<bool>("mia", "permute_labels");
    return c;
  }

  MiaSetting mia_setting() const { return parse_mia_setting(get<std::string>("mia", "setting")); }

  DefenseConfig defense() const {
    DefenseConfig d;
    d.mode = parse_defense_mode(get<std::string>("defense", "mode"));
    d.ratio = get<double>("defense", "ratio");
    d.flip_probability = get<double>("defense", "flip_probability");
    d.epochs_per_iter = get<std::size_t>("defense", "epochs_per_iter");
    d.gcn.hidden = get<std::size_t>("defense", "hidden");
    d.gcn.rate = get<double>("defense", "rate");
    d.cold_start = get<bool>("defense", "cold_start");
    return d;
  }

  std::vector<double> list(const std::string& section, const std::string& key) const {
    return j_.at(section).at(key).get<std::vector<double>>();
  }

  std::vector<std::string> names(const std::string& section, const std::string& key) const {
    return j_.at(section).at(key).get<std::vector<std::string>>();
  }

  // Parses every typed view once so bad values fail before any work starts.
  void validate() const {
    try {
      (void)surrogate();
      (void)gra();
      (void)eval();
      (void)properties();
      (void)mia();
      (void)mia_setting();
      defense().validate();
      (void)parse_graph_format(get<std::string>("data", "format"));
      (void)list("tradeoff", "ratios");
      (void)list("tradeoff", "probabilities");
      for (const auto& a : names("tradeoff", "attacks"))
        if (a != "gra" && a != "mia") throw InvalidArgument("unknown tradeoff attack '" + a + "'");
      for (const auto& a : names("pipeline", "attacks"))
        if (a != "gra" && a != "pia" && a != "mia") throw InvalidArgument("unknown pipeline attack '" + a + "'");
      if (get<std::size_t>("data", "n_min") < 1 || get<std::size_t>("data", "n_max") < get<std::size_t>("data", "n_min"))
        throw InvalidArgument("data.n_min must be >= 1 and <= data.n_max");
      if (get<std::size_t>("data", "classes") < 1) throw InvalidArgument("data.classes must be >= 1");
      const std::size_t k = get<std::size_t>("pia", "buckets");
      if (k < 2) throw InvalidArgument("pia.buckets must be >= 2");
    } catch (const ConfigError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("invalid config value: ") + e.what());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }

 private:
  nlohmann::json j_;
};

}  // namespace graphleak
