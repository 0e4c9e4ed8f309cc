#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/rng.hpp"

namespace goesched {

// Stationary scheduling policy over CMDP state indices: either one action
// table, or a per-slot Bernoulli(eta) choice between `table` (the
// budget-violating side) and `plus_table` (the budget-respecting side).
struct Policy {
  enum class Kind { kDeterministic, kMixture };

  Kind kind = Kind::kDeterministic;
  std::vector<int> table;
  std::vector<int> plus_table;
  double eta = 1.0;

  static Policy deterministic(std::vector<int> table);
  static Policy mixture(std::vector<int> minus, std::vector<int> plus, double eta);

  bool is_mixture() const { return kind == Kind::kMixture; }
  std::size_t num_states() const { return table.size(); }

  friend bool operator==(const Policy&, const Policy&) = default;
};

// Throws ValidationError when a table entry is not a valid action or eta is
// outside [0, 1].
void validate_policy(const Policy& policy, std::size_t num_states, std::size_t num_actions);

// max(v) - min(v).
double span(std::span<const double> v);

struct ValueIterationResult {
  std::vector<double> values;
  Policy policy;  // greedy, lowest action index on ties
  int iterations = 0;
  double final_span = 0.0;
};

// Value iteration on the net reward r - mu * cost from V = 0, stopped when
// the span of successive differences drops below span_tolerance. With
// identity weighting the returned values are those of the greedy table,
// evaluated to eval_tolerance. Throws ConvergenceError after 10^6 sweeps.
ValueIterationResult value_iteration(const TransitionTable& table, double mu,
                                     const SystemConfig& config);

// Q(s, a) for the net reward under `values`.
double q_value(const TransitionTable& table, StateIndex state, int action, double mu,
               std::span<const double> values, double discount);

// Discounted CPT cost of following `policy`, for every start state.
// Mixtures combine their two components linearly in eta.
std::vector<double> cost_function(const Policy& policy, const TransitionTable& table,
                                  const SystemConfig& config);
// Discounted CPT objective (reward without the multiplier term).
std::vector<double> objective_function(const Policy& policy, const TransitionTable& table,
                                       const SystemConfig& config);

// Values at the all-initial state (index 0).
double evaluate_discounted_cost(const Policy& policy, const TransitionTable& table,
                                const SystemConfig& config);
double evaluate_objective(const Policy& policy, const TransitionTable& table,
                          const SystemConfig& config);

// Exact cost of a mixture randomized independently in every slot.
double evaluate_per_slot_cost(const Policy& policy, const TransitionTable& table,
                              const SystemConfig& config);

// Outer multiplier search shared by the model-based solver and the
// tabular learner. `derive` maps a multiplier to a deterministic policy and
// `cost` estimates a policy's discounted CPT cost.
struct BisectionHooks {
  std::function<Policy(double mu)> derive;
  std::function<double(const Policy&)> cost;
};

struct BisectionOutcome {
  double mu_star = 0.0;
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  Policy policy;
  Policy minus;
  Policy plus;
  double cost = 0.0;
  double cost_minus = 0.0;
  double cost_plus = 0.0;
  int outer_steps = 0;
  int doubling_steps = 0;
  bool early_exit = false;
  bool feasible = false;
};

// Returns the mu = 0 policy if it meets `budget`; otherwise expands an upper
// bracket from solver.mu_hi_init by doubling, bisects to mu_tol, and mixes the
// bracketing policies. Throws InfeasibleError once the bracket exceeds 2^20.
BisectionOutcome lagrangian_bisection(const SystemConfig& config, double budget,
                                      const BisectionHooks& hooks);

// eta = clamp((budget - C+) / (C- - C+), 0, 1).
double mixing_probability(double budget, double cost_minus, double cost_plus);

struct SolveReport {
  double mu_star = 0.0;
  Policy policy;
  std::vector<double> value_function;  // from the last inner solve
  double cost_value = 0.0;             // discounted CPT cost from the initial state
  double objective_value = 0.0;        // discounted CPT total GoE from the initial state
  double budget = 0.0;
  bool feasible = false;
  std::vector<int> inner_iterations;   // one entry per inner solve
  std::vector<double> span_history;    // final span of each inner solve
  int outer_steps = 0;
  int doubling_steps = 0;
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  double cost_minus = 0.0;
  double cost_plus = 0.0;
  // Cost of the mixture when randomized every slot rather than per run.
  double per_slot_cost = 0.0;
  // max_s |C(s) - C(s0)| for the returned policy.
  double cost_state_spread = 0.0;
};

SolveReport bisection_solve(const TransitionTable& table, const SystemConfig& config);

// Deterministic lookup, or Bernoulli(eta) between the mixture components.
int sample_action(const Policy& policy, StateIndex state, Rng& rng);

// Policy file: '#'-prefixed key=value header lines, then CSV rows
// state_index,action (deterministic) or state_index,action,action_plus
// (mixture; `action` is the eta side).
struct PolicyFile {
  Policy policy;
  double mu_star = 0.0;
  std::string config_hash;
};

void write_policy_csv(std::ostream& out, const Policy& policy, double mu_star,
                      const std::string& config_hash);
PolicyFile read_policy_csv(std::istream& in);
PolicyFile read_policy_file(const std::string& path);

std::string solve_report_json(const SolveReport& report, const std::string& config_hash);

}  // namespace goesched
