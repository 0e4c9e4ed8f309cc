#include "goesched/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "goesched/errors.hpp"
#include "json.hpp"

namespace goesched {

using Json = nlohmann::ordered_json;

namespace {

constexpr double kPmfTolerance = 1e-12;
constexpr int kDefaultCardinality = 8;
constexpr int kDefaultLevels = 4;
constexpr double kDefaultObserveProb = 0.8;
constexpr double kDefaultEraseProb = 0.2;

// Table I usefulness shapes for attributes 1 and 2.
constexpr double kDefaultAlpha[] = {0.5, 2.0};
constexpr double kDefaultBeta[] = {0.5, 5.0};

std::vector<double> canonical_levels(int count) {
  std::vector<double> levels(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    levels[static_cast<std::size_t>(j - 1)] =
        static_cast<double>(j) / static_cast<double>(count);
  }
  return levels;
}

// Reads typed fields out of a JSON object and rejects unknown keys.
class Section {
 public:
  Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
        throw ConfigError(field(it.key()), "unknown field");
      }
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  const Json& at(const std::string& key) const { return node_.at(key); }
  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    out = convert<T>(node_.at(key), field(key));
  }

  template <typename T>
  static T convert(const Json& value, const std::string& field) {
    if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw ConfigError(field, "expected a number");
      return value.get<double>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!value.is_number_integer()) throw ConfigError(field, "expected an integer");
      const auto v = value.get<std::int64_t>();
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(field, "integer out of range");
      }
      return static_cast<int>(v);
    } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!value.is_number_unsigned()) {
        throw ConfigError(field, "expected a non-negative integer");
      }
      return value.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw ConfigError(field, "expected a string");
      return value.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!value.is_array()) throw ConfigError(field, "expected an array of numbers");
      std::vector<double> out;
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(convert<double>(value[i], field + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!value.is_array()) throw ConfigError(field, "expected an array of integers");
      std::vector<int> out;
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(convert<int>(value[i], field + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

 private:
  const Json& node_;
  std::string path_;
};

Weighting parse_weighting(const std::string& name, const std::string& field) {
  if (name == "identity") return Weighting::kIdentity;
  if (name == "inverse-s" || name == "inverse_s") return Weighting::kInverseS;
  throw ConfigError(field, "expected \"identity\" or \"inverse-s\"");
}

const char* weighting_name(Weighting w) {
  return w == Weighting::kIdentity ? "identity" : "inverse-s";
}

GoeComposite parse_composite(const std::string& name, const std::string& field) {
  if (name == "product") return GoeComposite::kProduct;
  if (name == "min") return GoeComposite::kMin;
  throw ConfigError(field, "expected \"product\" or \"min\"");
}

const char* composite_name(GoeComposite c) {
  return c == GoeComposite::kProduct ? "product" : "min";
}

struct AttributeDraft {
  int cardinality = kDefaultCardinality;
  double alpha = 0.5;
  double beta = 0.5;
  std::vector<double> pmf;
};

struct AgentDraft {
  std::vector<double> observe;
  double erase = kDefaultEraseProb;
};

void fill_derived(SystemConfig& config) {
  config.usefulness.per_attribute_pmf.clear();
  for (const auto& attr : config.attributes) {
    config.usefulness.per_attribute_pmf.push_back(
        usefulness_pmf(attr, config.usefulness.levels));
  }
}

SystemConfig build(const Json& root) {
  SystemConfig config;
  Section top(root, "");
  top.allow({"system", "attributes", "agents", "goals", "cpt", "cost", "solver",
             "goe", "scheduler"});

  int num_levels = kDefaultLevels;
  bool k_given = false;
  if (top.has("system")) {
    Section s(top.at("system"), "system");
    s.allow({"N", "M", "K", "query_limit", "horizon", "seed", "max_aoi", "num_levels"});
    s.read("N", config.num_agents);
    s.read("M", config.num_attributes);
    k_given = s.has("K");
    s.read("K", config.num_actuators);
    s.read("query_limit", config.query_limit);
    s.read("horizon", config.horizon);
    s.read("seed", config.seed);
    s.read("max_aoi", config.max_aoi);
    s.read("num_levels", num_levels);
  }
  if (config.num_attributes < 1) throw ValidationError("system.M must be >= 1");
  if (config.num_agents < 1) throw ValidationError("system.N must be >= 1");
  if (num_levels < 1) throw ValidationError("system.num_levels must be >= 1");
  const auto m_count = static_cast<std::size_t>(config.num_attributes);

  // Attributes: later entries reuse the last provided entry.
  std::vector<AttributeDraft> drafts;
  if (top.has("attributes")) {
    const Json& arr = top.at("attributes");
    if (!arr.is_array()) throw ConfigError("attributes", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section a(arr[i], "attributes[" + std::to_string(i) + "]");
      a.allow({"cardinality", "alpha", "beta", "pmf"});
      AttributeDraft d;
      if (i < 2) {
        d.alpha = kDefaultAlpha[i];
        d.beta = kDefaultBeta[i];
      } else if (!drafts.empty()) {
        d = drafts.back();
        d.pmf.clear();
      }
      a.read("cardinality", d.cardinality);
      a.read("alpha", d.alpha);
      a.read("beta", d.beta);
      a.read("pmf", d.pmf);
      drafts.push_back(std::move(d));
    }
  } else {
    for (std::size_t i = 0; i < std::min<std::size_t>(2, m_count); ++i) {
      drafts.push_back({kDefaultCardinality, kDefaultAlpha[i], kDefaultBeta[i], {}});
    }
  }
  if (drafts.empty()) drafts.push_back({});
  if (drafts.size() > m_count) {
    throw ValidationError("attributes has " + std::to_string(drafts.size()) +
                          " entries but system.M is " + std::to_string(m_count));
  }
  while (drafts.size() < m_count) drafts.push_back(drafts.back());
  for (std::size_t i = 0; i < m_count; ++i) {
    const auto& d = drafts[i];
    if (d.cardinality < 2) {
      throw ValidationError("attributes[" + std::to_string(i) + "].cardinality must be >= 2");
    }
    config.attributes.push_back(
        make_attribute(static_cast<int>(i + 1), d.cardinality, d.alpha, d.beta, d.pmf));
  }

  // Agents.
  std::vector<AgentDraft> agent_drafts;
  if (top.has("agents")) {
    const Json& arr = top.at("agents");
    if (!arr.is_array()) throw ConfigError("agents", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "agents[" + std::to_string(i) + "]";
      Section a(arr[i], path);
      a.allow({"p_observe", "p_erase"});
      AgentDraft d;
      if (a.has("p_observe")) {
        const Json& po = a.at("p_observe");
        if (po.is_number()) {
          d.observe = {Section::convert<double>(po, a.field("p_observe"))};
        } else {
          d.observe = Section::convert<std::vector<double>>(po, a.field("p_observe"));
        }
      }
      a.read("p_erase", d.erase);
      agent_drafts.push_back(std::move(d));
    }
  }
  if (agent_drafts.size() > static_cast<std::size_t>(config.num_agents)) {
    throw ValidationError("agents has more entries than system.N");
  }
  if (agent_drafts.empty()) agent_drafts.push_back({});
  while (agent_drafts.size() < static_cast<std::size_t>(config.num_agents)) {
    agent_drafts.push_back(agent_drafts.back());
  }
  for (std::size_t n = 0; n < agent_drafts.size(); ++n) {
    AgentSpec agent;
    agent.id = static_cast<int>(n + 1);
    agent.erase_prob = agent_drafts[n].erase;
    agent.observe_prob = agent_drafts[n].observe;
    if (agent.observe_prob.empty()) agent.observe_prob.push_back(kDefaultObserveProb);
    if (agent.observe_prob.size() > m_count) {
      throw ValidationError("agents[" + std::to_string(n) +
                            "].p_observe has more entries than system.M");
    }
    while (agent.observe_prob.size() < m_count) {
      agent.observe_prob.push_back(agent.observe_prob.back());
    }
    config.agents.push_back(std::move(agent));
  }

  // Goals.
  if (top.has("goals")) {
    Section g(top.at("goals"), "goals");
    g.allow({"required_sets"});
    if (g.has("required_sets")) {
      const Json& arr = g.at("required_sets");
      if (!arr.is_array()) throw ConfigError("goals.required_sets", "expected an array");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        config.required_sets.push_back(Section::convert<std::vector<int>>(
            arr[k], "goals.required_sets[" + std::to_string(k) + "]"));
      }
      if (!k_given) config.num_actuators = static_cast<int>(config.required_sets.size());
    }
  }
  if (config.required_sets.empty()) {
    std::vector<int> all(m_count);
    for (std::size_t m = 0; m < m_count; ++m) all[m] = static_cast<int>(m + 1);
    config.required_sets.assign(static_cast<std::size_t>(std::max(config.num_actuators, 0)), all);
  }

  if (top.has("cpt")) {
    Section c(top.at("cpt"), "cpt");
    c.allow({"alpha", "beta", "lambda", "goe_ref", "weighting", "weighting_gamma"});
    c.read("alpha", config.cpt.alpha_gain);
    c.read("beta", config.cpt.beta_loss);
    c.read("lambda", config.cpt.lambda_loss);
    c.read("goe_ref", config.cpt.goe_ref);
    std::string w;
    c.read("weighting", w);
    if (!w.empty()) config.cpt.weighting = parse_weighting(w, "cpt.weighting");
    c.read("weighting_gamma", config.cpt.weighting_gamma);
  }

  if (top.has("cost")) {
    Section c(top.at("cost"), "cost");
    c.allow({"per_query", "flex"});
    c.read("per_query", config.cost_per_query);
    c.read("flex", config.cost_flex);
  }

  if (top.has("solver")) {
    Section s(top.at("solver"), "solver");
    s.allow({"gamma", "span_tol", "mu_tol", "eta", "eta_mode", "mu_hi_init", "eval_tol",
             "max_states"});
    s.read("gamma", config.discount);
    s.read("span_tol", config.span_tolerance);
    s.read("mu_tol", config.mu_tolerance);
    s.read("eval_tol", config.eval_tolerance);
    s.read("mu_hi_init", config.mu_hi_init);
    s.read("max_states", config.max_states);
    if (s.has("eta")) {
      const Json& e = s.at("eta");
      if (e.is_string()) {
        if (e.get<std::string>() != "computed") {
          throw ConfigError("solver.eta", "expected a number or \"computed\"");
        }
        config.eta_mode = EtaMode::kComputed;
      } else {
        config.eta = Section::convert<double>(e, "solver.eta");
        config.eta_mode = EtaMode::kFixed;
      }
    }
    std::string mode;
    s.read("eta_mode", mode);
    if (mode == "computed") {
      config.eta_mode = EtaMode::kComputed;
    } else if (mode == "fixed") {
      config.eta_mode = EtaMode::kFixed;
    } else if (!mode.empty()) {
      throw ConfigError("solver.eta_mode", "expected \"computed\" or \"fixed\"");
    }
  }

  if (top.has("goe")) {
    Section g(top.at("goe"), "goe");
    g.allow({"composite"});
    std::string c;
    g.read("composite", c);
    if (!c.empty()) config.composite = parse_composite(c, "goe.composite");
  }

  if (top.has("scheduler")) {
    Section s(top.at("scheduler"), "scheduler");
    s.allow({"kind", "rho", "weights", "target_rate"});
    s.read("kind", config.scheduler.kind);
    s.read("rho", config.scheduler.rho);
    s.read("weights", config.scheduler.weights);
    s.read("target_rate", config.scheduler.target_rate);
  }

  config.usefulness.levels = canonical_levels(num_levels);
  fill_derived(config);
  validate(config);
  return config;
}

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

void check_pmf(const std::vector<double>& pmf, const std::string& name) {
  double sum = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw ValidationError(name + " has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kPmfTolerance) {
    throw ValidationError(name + " must sum to 1");
  }
}

}  // namespace

AttributeSpec make_attribute(int id, int cardinality, double alpha_shape,
                             double beta_shape, std::vector<double> pmf) {
  AttributeSpec attr;
  attr.id = id;
  attr.cardinality = cardinality;
  attr.alpha_shape = alpha_shape;
  attr.beta_shape = beta_shape;
  if (pmf.empty() && cardinality > 0) {
    pmf.assign(static_cast<std::size_t>(cardinality), 1.0 / cardinality);
  }
  attr.source_pmf = std::move(pmf);
  for (int i = 1; i <= cardinality; ++i) {
    attr.value_grid.push_back(static_cast<double>(i) / (cardinality + 1));
  }
  return attr;
}

std::vector<int> SystemConfig::relevant_attributes() const {
  std::set<int> all;
  for (const auto& set : required_sets) all.insert(set.begin(), set.end());
  return {all.begin(), all.end()};
}

SystemConfig default_config() { return build(Json::object()); }

SystemConfig load_config(std::string_view document) {
  const bool blank = std::all_of(document.begin(), document.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) return default_config();
  Json root;
  try {
    root = Json::parse(document.begin(), document.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  return build(root);
}

SystemConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

void validate(const SystemConfig& config) {
  const int m = config.num_attributes;
  if (m < 1) throw ValidationError("system.M must be >= 1");
  if (config.num_agents < 1) throw ValidationError("system.N must be >= 1");
  if (config.num_actuators < 1) throw ValidationError("system.K must be >= 1");
  if (config.required_sets.size() != static_cast<std::size_t>(config.num_actuators)) {
    throw ValidationError("goals.required_sets must have K entries");
  }
  for (const auto& set : config.required_sets) {
    for (int a : set) {
      if (a < 1 || a > m) {
        throw ValidationError("required set entry " + std::to_string(a) +
                              " outside 1..M");
      }
    }
  }
  const auto relevant = config.relevant_attributes();
  if (relevant.empty()) throw ValidationError("union of required sets is empty");

  if (config.attributes.size() != static_cast<std::size_t>(m)) {
    throw ValidationError("attributes must have M entries");
  }
  for (std::size_t i = 0; i < config.attributes.size(); ++i) {
    const auto& a = config.attributes[i];
    const std::string name = "attributes[" + std::to_string(i) + "]";
    if (a.cardinality < 2) throw ValidationError(name + ".cardinality must be >= 2");
    if (!(a.alpha_shape > 0.0)) throw ValidationError(name + ".alpha must be > 0");
    if (!(a.beta_shape > 0.0)) throw ValidationError(name + ".beta must be > 0");
    if (a.source_pmf.size() != static_cast<std::size_t>(a.cardinality)) {
      throw ValidationError(name + ".pmf must have cardinality entries");
    }
    check_pmf(a.source_pmf, name + ".pmf");
    if (a.value_grid.size() != static_cast<std::size_t>(a.cardinality) ||
        !strictly_increasing(a.value_grid) || !(a.value_grid.front() > 0.0) ||
        !(a.value_grid.back() < 1.0)) {
      throw ValidationError(name + " value grid must be increasing inside (0, 1)");
    }
  }

  const auto& levels = config.usefulness.levels;
  if (levels.empty() || !strictly_increasing(levels) || !(levels.front() > 0.0) ||
      !(levels.back() <= 1.0)) {
    throw ValidationError("usefulness levels must be increasing inside (0, 1]");
  }
  if (config.usefulness.per_attribute_pmf.size() != config.attributes.size()) {
    throw ValidationError("usefulness pmf missing for some attribute");
  }
  for (std::size_t i = 0; i < config.usefulness.per_attribute_pmf.size(); ++i) {
    const auto& p = config.usefulness.per_attribute_pmf[i];
    if (p.size() != levels.size()) {
      throw ValidationError("usefulness pmf size must equal |U|");
    }
    check_pmf(p, "usefulness pmf of attribute " + std::to_string(i + 1));
  }

  if (config.agents.size() != static_cast<std::size_t>(config.num_agents)) {
    throw ValidationError("agents must have N entries");
  }
  for (std::size_t n = 0; n < config.agents.size(); ++n) {
    const auto& agent = config.agents[n];
    const std::string name = "agents[" + std::to_string(n) + "]";
    if (agent.observe_prob.size() != static_cast<std::size_t>(m)) {
      throw ValidationError(name + ".p_observe must have M entries");
    }
    for (double p : agent.observe_prob) {
      if (!(p >= 0.0 && p < 1.0)) throw ValidationError(name + ".p_observe must be in [0, 1)");
    }
    if (!(agent.erase_prob > 0.0 && agent.erase_prob <= 1.0)) {
      throw ValidationError(name + ".p_erase must be in (0, 1]");
    }
  }

  if (config.max_aoi < 1) throw ValidationError("system.max_aoi must be >= 1");
  if (!(config.discount >= 0.0)) throw ValidationError("discount must be >= 0");
  if (!(config.discount < 1.0)) throw ValidationError("discount must be < 1");
  if (config.query_limit < 1) throw ValidationError("system.query_limit must be >= 1");
  if (static_cast<std::size_t>(config.query_limit) > relevant.size()) {
    throw ValidationError("system.query_limit exceeds the number of required attributes");
  }
  if (config.horizon < 1) throw ValidationError("system.horizon must be >= 1");
  if (!(config.cost_per_query > 0.0)) throw ValidationError("cost.per_query must be > 0");
  if (!(config.cost_flex > 0.0 && config.cost_flex <= 1.0)) {
    throw ValidationError("cost.flex must be in (0, 1]");
  }
  if (!(config.span_tolerance > 0.0)) throw ValidationError("solver.span_tol must be > 0");
  if (!(config.mu_tolerance > 0.0)) throw ValidationError("solver.mu_tol must be > 0");
  if (!(config.eval_tolerance > 0.0)) throw ValidationError("solver.eval_tol must be > 0");
  if (!(config.mu_hi_init > 0.0)) throw ValidationError("solver.mu_hi_init must be > 0");
  if (!(config.eta >= 0.0 && config.eta <= 1.0)) throw ValidationError("solver.eta must be in [0, 1]");
  if (config.max_states < 1) throw ValidationError("solver.max_states must be >= 1");
  validate(config.cpt);

  const auto& sched = config.scheduler;
  if (!(sched.rho >= 0.0 && sched.rho < 1.0)) throw ValidationError("scheduler.rho must be in [0, 1)");
  if (sched.target_rate > 1.0) throw ValidationError("scheduler.target_rate must be <= 1");
  if (!sched.weights.empty()) {
    if (sched.weights.size() != static_cast<std::size_t>(m)) {
      throw ValidationError("scheduler.weights must have M entries");
    }
    for (double w : sched.weights) {
      if (!(w > 0.0)) throw ValidationError("scheduler.weights must be positive");
    }
  }
}

std::string to_json(const SystemConfig& config) {
  Json root;
  root["system"] = {{"N", config.num_agents},
                    {"M", config.num_attributes},
                    {"K", config.num_actuators},
                    {"query_limit", config.query_limit},
                    {"horizon", config.horizon},
                    {"seed", config.seed},
                    {"max_aoi", config.max_aoi},
                    {"num_levels", config.num_levels()}};
  Json attrs = Json::array();
  for (const auto& a : config.attributes) {
    attrs.push_back({{"cardinality", a.cardinality},
                     {"alpha", a.alpha_shape},
                     {"beta", a.beta_shape},
                     {"pmf", a.source_pmf}});
  }
  root["attributes"] = attrs;
  Json agents = Json::array();
  for (const auto& a : config.agents) {
    agents.push_back({{"p_observe", a.observe_prob}, {"p_erase", a.erase_prob}});
  }
  root["agents"] = agents;
  root["goals"] = {{"required_sets", config.required_sets}};
  root["cpt"] = {{"alpha", config.cpt.alpha_gain},
                 {"beta", config.cpt.beta_loss},
                 {"lambda", config.cpt.lambda_loss},
                 {"goe_ref", config.cpt.goe_ref},
                 {"weighting", weighting_name(config.cpt.weighting)},
                 {"weighting_gamma", config.cpt.weighting_gamma}};
  root["cost"] = {{"per_query", config.cost_per_query}, {"flex", config.cost_flex}};
  root["solver"] = {{"gamma", config.discount},
                    {"span_tol", config.span_tolerance},
                    {"mu_tol", config.mu_tolerance},
                    {"eval_tol", config.eval_tolerance},
                    {"eta", config.eta},
                    {"eta_mode", config.eta_mode == EtaMode::kComputed ? "computed" : "fixed"},
                    {"mu_hi_init", config.mu_hi_init},
                    {"max_states", config.max_states}};
  root["goe"] = {{"composite", composite_name(config.composite)}};
  root["scheduler"] = {{"kind", config.scheduler.kind},
                       {"rho", config.scheduler.rho},
                       {"weights", config.scheduler.weights},
                       {"target_rate", config.scheduler.target_rate}};
  return root.dump(2);
}

std::string config_hash(const SystemConfig& config) {
  const std::string text = to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int usefulness_map(const AttributeSpec& attr, const std::vector<double>& levels,
                   int realization_index) {
  if (realization_index < 1 || realization_index > attr.cardinality ||
      static_cast<std::size_t>(realization_index) > attr.value_grid.size()) {
    throw DomainError("realization index " + std::to_string(realization_index) +
                      " outside 1.." + std::to_string(attr.cardinality));
  }
  const int num_levels = static_cast<int>(levels.size());
  const double y = attr.value_grid[static_cast<std::size_t>(realization_index - 1)];
  const double a = attr.alpha_shape;
  const double b = attr.beta_shape;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double density =
      std::exp((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - log_beta);
  const double capped = std::min(1.0, density);
  const int level = static_cast<int>(std::ceil(capped * num_levels));
  return std::clamp(level, 1, num_levels);
}

std::vector<double> usefulness_pmf(const AttributeSpec& attr,
                                   const std::vector<double>& levels) {
  std::vector<double> pmf(levels.size(), 0.0);
  for (int i = 1; i <= attr.cardinality; ++i) {
    const int j = usefulness_map(attr, levels, i);
    pmf[static_cast<std::size_t>(j - 1)] += attr.source_pmf[static_cast<std::size_t>(i - 1)];
  }
  return pmf;
}

int select_agent(const SystemConfig& config, int attribute) {
  int best = 1;
  double best_score = -1.0;
  for (const auto& agent : config.agents) {
    const double score = (1.0 - agent.erase_prob) *
                         agent.observe_prob[static_cast<std::size_t>(attribute - 1)];
    if (score > best_score) {
      best_score = score;
      best = agent.id;
    }
  }
  return best;
}

double query_cost(bool is_query, const SystemConfig& config) {
  return is_query ? config.cost_per_query : 0.0;
}

double query_cost(int num_queries, const SystemConfig& config) {
  return num_queries * config.cost_per_query;
}

double cpt_query_cost(int num_queries, const SystemConfig& config) {
  return value_gain_only(query_cost(num_queries, config), 0.0, config.cpt);
}

double max_budget(const SystemConfig& config) {
  return config.cost_flex * cpt_query_cost(1, config) / (1.0 - config.discount);
}

double goe_component(int aoi, double usefulness, GoeComposite composite) {
  const double freshness = 1.0 / static_cast<double>(aoi);
  switch (composite) {
    case GoeComposite::kProduct:
      return usefulness * freshness;
    case GoeComposite::kMin:
      return std::min(usefulness, freshness);
  }
  return 0.0;
}

}  // namespace goesched
