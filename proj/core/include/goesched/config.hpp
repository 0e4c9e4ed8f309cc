#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "goesched/cpt.hpp"

namespace goesched {

// One attribute of the monitored source.
struct AttributeSpec {
  int id = 1;  // 1-based
  int cardinality = 8;
  std::vector<double> source_pmf;
  double alpha_shape = 0.5;
  double beta_shape = 0.5;
  // value_grid[i - 1] is the argument of the usefulness mapping for
  // realization i. Strictly increasing, inside (0, 1).
  std::vector<double> value_grid;
};

// Builds an attribute with a uniform pmf (if `pmf` is empty) and the grid
// y_i = i / (cardinality + 1).
AttributeSpec make_attribute(int id, int cardinality, double alpha_shape,
                             double beta_shape, std::vector<double> pmf = {});

struct UsefulnessModel {
  std::vector<double> levels;  // strictly increasing, in (0, 1]
  std::vector<std::vector<double>> per_attribute_pmf;
};

struct AgentSpec {
  int id = 1;  // 1-based
  std::vector<double> observe_prob;  // one entry per attribute, in [0, 1)
  double erase_prob = 0.2;           // in (0, 1]
};

enum class GoeComposite { kProduct, kMin };
enum class EtaMode { kComputed, kFixed };

struct SchedulerSettings {
  std::string kind = "policy";
  double rho = 0.5;
  // Negative means "use cost.flex".
  double target_rate = -1.0;
  std::vector<double> weights;  // empty means importance weights
};

struct SystemConfig {
  int num_agents = 4;
  int num_attributes = 2;
  int num_actuators = 4;
  std::vector<std::vector<int>> required_sets;  // K subsets of {1..M}
  std::vector<AttributeSpec> attributes;
  std::vector<AgentSpec> agents;
  UsefulnessModel usefulness;
  int max_aoi = 4;
  double discount = 0.9;
  CptParams cpt;
  double cost_per_query = 0.5;
  double cost_flex = 0.75;
  int query_limit = 1;
  int horizon = 1000;
  std::uint64_t seed = 1;
  GoeComposite composite = GoeComposite::kProduct;
  double eval_tolerance = 1e-9;
  double span_tolerance = 1e-6;
  double mu_tolerance = 1e-6;
  double eta = 0.5;
  EtaMode eta_mode = EtaMode::kComputed;
  double mu_hi_init = 16.0;
  std::size_t max_states = std::size_t{1} << 18;
  SchedulerSettings scheduler;

  int num_levels() const { return static_cast<int>(usefulness.levels.size()); }
  // Level value nu_j for a 1-based level index.
  double level_value(int level_index) const {
    return usefulness.levels[static_cast<std::size_t>(level_index - 1)];
  }
  // Sorted union of the required sets (1-based attribute ids).
  std::vector<int> relevant_attributes() const;
};

// Table I defaults with the usefulness model filled in.
SystemConfig default_config();

// Parses a JSON document. Absent fields take defaults. Throws ConfigError on
// schema violations and ValidationError on invariant violations.
SystemConfig load_config(std::string_view document);
SystemConfig load_config_file(const std::filesystem::path& path);

// Checks every invariant; throws ValidationError naming the first violation.
void validate(const SystemConfig& config);

// Canonical JSON form; load_config(to_json(c)) reproduces c.
std::string to_json(const SystemConfig& config);
// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const SystemConfig& config);

// Capped Beta-density usefulness of one realization quantized onto |levels|
// canonical levels. Returns a 1-based level index.
int usefulness_map(const AttributeSpec& attr, const std::vector<double>& levels,
                   int realization_index);

// Usefulness level pmf induced by the source pmf.
std::vector<double> usefulness_pmf(const AttributeSpec& attr,
                                   const std::vector<double>& levels);

// Agent maximizing (1 - p_e) p_o for `attribute`; lowest index on ties.
int select_agent(const SystemConfig& config, int attribute);

// f_c(k) = k * cost_per_query for k queries in one slot.
double query_cost(bool is_query, const SystemConfig& config);
double query_cost(int num_queries, const SystemConfig& config);

// CPT-valued per-slot cost v+(f_c(k)).
double cpt_query_cost(int num_queries, const SystemConfig& config);

// C_max = C_flex v+(f_c(1)) / (1 - gamma).
double max_budget(const SystemConfig& config);

// Per-attribute GoE for a given AoI and usefulness.
double goe_component(int aoi, double usefulness, GoeComposite composite);

}  // namespace goesched
