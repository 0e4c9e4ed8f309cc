#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "goesched/config.hpp"
#include "goesched/rng.hpp"

namespace goesched {

// Ground-truth simulator state. Vectors are indexed by attribute - 1 and
// cover all M attributes, relevant or not.
struct EnvState {
  std::uint64_t t = 0;
  std::vector<int> truth;      // x_m(t), 1-based realization index
  std::vector<int> knowledge;  // y_m(t), 0 until the first delivered update
  std::vector<int> aoi;        // in [1, max_aoi]
  std::vector<int> level;      // usefulness level of the last correct delivered update
  Rng rng;
  double discounted_cost = 0.0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct QueryOutcome {
  int attribute = 0;
  int agent = 0;
  bool delivered = false;  // not erased
  bool correct = false;    // observation equals the truth
  int observation = 0;
};

// One simulated slot. `t` is the slot index of the resulting state.
struct TraceRecord {
  std::uint64_t t = 0;
  std::vector<QueryOutcome> queries;
  double goe = 0.0;
  double cpt_goe = 0.0;
  double cost = 0.0;  // v+(f_c(#queries))
  std::vector<int> aoi;
  std::vector<double> usefulness;
  // GoE with u_m = 0 whenever the knowledge base disagrees with the truth.
  double goe_strict = 0.0;

  int num_queries() const { return static_cast<int>(queries.size()); }
  bool delivered_and_correct(int attribute) const;
};

// Immutable simulator bound to one configuration. Per-attribute lookups
// (selected agent, usefulness of each realization) are precomputed.
class Environment {
 public:
  explicit Environment(SystemConfig config);

  const SystemConfig& config() const { return config_; }
  const std::vector<int>& relevant() const { return relevant_; }

  EnvState reset(std::uint64_t seed) const;

  // Advances one slot in place. `action` lists attribute ids to query; it must
  // be a duplicate-free subset of the required attributes of size at most
  // query_limit, otherwise ContractError.
  TraceRecord step(EnvState& state, std::span<const int> action) const;

  // step() without the trace bookkeeping; `record` (may be null) receives
  // only the query outcomes and the slot cost.
  void advance(EnvState& state, std::span<const int> action, TraceRecord* record) const;

  double goe_total(const EnvState& state) const;
  double goe_strict(const EnvState& state) const;
  double slot_reward(const EnvState& prev, std::span<const int> action,
                     const EnvState& next, double mu) const;

  int selected_agent(int attribute) const {
    return agent_of_[static_cast<std::size_t>(attribute - 1)];
  }
  int level_of(int attribute, int realization) const {
    return level_of_[static_cast<std::size_t>(attribute - 1)]
                    [static_cast<std::size_t>(realization - 1)];
  }

 private:
  void check_action(std::span<const int> action) const;

  SystemConfig config_;
  std::vector<int> relevant_;
  std::vector<bool> is_relevant_;
  std::vector<int> agent_of_;
  std::vector<std::vector<int>> level_of_;
};

// Free-function forms; each builds a temporary Environment.
EnvState reset(const SystemConfig& config, std::uint64_t seed);
TraceRecord step(EnvState& state, std::span<const int> action, const SystemConfig& config);
double goe_total(const EnvState& state, const SystemConfig& config);
double slot_reward(const EnvState& prev, std::span<const int> action, const EnvState& next,
                   double mu, const SystemConfig& config);

}  // namespace goesched
