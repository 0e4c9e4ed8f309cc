#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/env.hpp"
#include "goesched/rng.hpp"
#include "goesched/solver.hpp"

namespace goesched {

// What a scheduler sees at the start of a slot. Vectors follow the order of
// the relevant attributes.
struct Observation {
  std::vector<int> attributes;      // attribute ids
  std::vector<int> aoi;
  std::vector<int> level;           // 1-based usefulness levels
  std::vector<double> goe;          // per-attribute GoE of the previous slot
  StateIndex state_index = 0;       // CMDP encoding, when a state space exists
};

// `space` may be null when the CMDP state space is not enumerated.
Observation observe(const Environment& env, const EnvState& state, const StateSpace* space);

// Tabular action values and visit counts, row-major over (state, action).
struct QTable {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> values;
  std::vector<std::uint64_t> visits;

  QTable() = default;
  QTable(std::size_t states, std::size_t actions)
      : num_states(states), num_actions(actions), values(states * actions, 0.0),
        visits(states * actions, 0) {}

  double& q(std::size_t s, int a) { return values[s * num_actions + static_cast<std::size_t>(a)]; }
  double q(std::size_t s, int a) const {
    return values[s * num_actions + static_cast<std::size_t>(a)];
  }
  // Greedy policy, lowest action index on ties.
  Policy greedy() const;
};

// CSV rows state,action,value,visits.
void write_qtable_csv(const QTable& table, std::ostream& out);

namespace sched {
struct PolicyRule { Policy policy; };
struct Wrr { std::vector<double> weights; };   // indexed by attribute id - 1
struct Lwgf { std::vector<double> weights; };  // indexed by attribute id - 1
struct Uniform {};
struct Markovian { double rho = 0.5; double target_rate = 0.75; };
struct TabularQ { QTable table; };
}  // namespace sched

using SchedulerKind = std::variant<sched::PolicyRule, sched::Wrr, sched::Lwgf, sched::Uniform,
                                   sched::Markovian, sched::TabularQ>;

std::string kind_name(const SchedulerKind& kind);

// Stateful decision rule for one simulation run.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  // Attribute ids to query in slot t; never more than query_limit.
  virtual std::vector<int> decide(const Observation& obs, std::uint64_t t, Rng& rng) = 0;
};

// Throws ValidationError on bad weights or chain parameters and
// ContractError when a table-driven rule is combined with query_limit > 1.
std::unique_ptr<Scheduler> make_scheduler(const SchedulerKind& kind, const SystemConfig& config);

// w_m = number of actuation agents whose required set contains m, for every
// attribute (zero for attributes nobody requires).
std::vector<double> importance_weights(const SystemConfig& config);

// scheduler.weights when given, otherwise importance weights.
std::vector<double> scheduler_weights(const SystemConfig& config);

// Builds a non-policy kind from its name: wrr, lwgf, uniform, markovian.
SchedulerKind benchmark_kind(const std::string& name, const SystemConfig& config);

struct LearningRate {
  enum class Mode { kConstant, kLinear, kVisitPower };
  Mode mode = Mode::kVisitPower;
  double initial = 1.0;
  double final_value = 0.0;  // kLinear end point
  double power = 0.6;        // kVisitPower: initial / (1 + visits)^power

  double at(double progress, std::uint64_t visits) const;
};

struct TabularQOptions {
  int episodes = 20;
  int steps_per_episode = 2500;
  LearningRate learning_rate;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
};

struct TabularQResult {
  QTable table;
  Policy policy;
};

// One-step Q-learning against the simulator with net reward
// v_cpt(GoE) - mu v+(f_c). Requires query_limit = 1.
TabularQResult train_tabular_q(const SystemConfig& config, double mu,
                               const TabularQOptions& options, Rng& rng);

struct RolloutOptions {
  int episodes = 20;
  int horizon = 200;
  std::uint64_t seed = 0;
};

// Monte-Carlo discounted CPT cost of a policy from the reset state.
double rollout_discounted_cost(const Environment& env, const StateSpace& space,
                               const Policy& policy, const RolloutOptions& options);

struct TabularQSolve {
  BisectionOutcome bisection;
  QTable table;  // from the last training run
};

// Bisection on mu around train_tabular_q with rollout cost estimates.
TabularQSolve tabular_q_solve(const SystemConfig& config, const TabularQOptions& options,
                              const RolloutOptions& rollouts, std::uint64_t seed);

}  // namespace goesched
