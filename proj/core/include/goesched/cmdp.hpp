#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "goesched/config.hpp"

namespace goesched {

struct EnvState;

using StateIndex = std::uint32_t;

// (AoI, usefulness level) per required attribute, ordered by attribute id.
struct CmdpState {
  std::vector<int> aoi;
  std::vector<int> level;  // 1-based

  friend bool operator==(const CmdpState&, const CmdpState&) = default;
};

// Mixed-radix enumeration of the CMDP state space. Each required attribute
// contributes a digit (aoi - 1) * |U| + (level - 1) in base max_aoi * |U|; the
// first required attribute is the least significant digit.
//
// Action 0 is "no query"; action k >= 1 queries attributes()[k - 1].
class StateSpace {
 public:
  StateSpace(std::vector<int> attributes, int max_aoi, int num_levels);

  std::size_t size() const { return size_; }
  std::size_t num_actions() const { return attributes_.size() + 1; }
  const std::vector<int>& attributes() const { return attributes_; }
  int max_aoi() const { return max_aoi_; }
  int num_levels() const { return num_levels_; }

  StateIndex encode(const CmdpState& state) const;
  CmdpState decode(StateIndex index) const;
  // Projects a simulator state onto the CMDP state.
  StateIndex encode(const EnvState& state) const;

  int attribute_for_action(int action) const;
  // Returns 0 for attributes outside the required set.
  int action_for_attribute(int attribute) const;

 private:
  std::vector<int> attributes_;
  int max_aoi_;
  int num_levels_;
  std::size_t radix_;
  std::size_t size_;
};

// Throws CapacityError when the space does not fit the 32-bit index type.
StateSpace build_state_space(const SystemConfig& config);

struct Transition {
  StateIndex next = 0;
  double probability = 0.0;
  double weight = 0.0;  // CPT-weighted probability
};

// Sparse kernel in compressed-row form, plus per-state rewards and
// per-action costs. Immutable once built.
class TransitionTable {
 public:
  TransitionTable(StateSpace space, std::vector<std::size_t> offsets,
                  std::vector<Transition> entries, std::vector<double> state_reward,
                  std::vector<double> action_cost);

  const StateSpace& space() const { return space_; }
  std::size_t num_states() const { return space_.size(); }
  std::size_t num_actions() const { return space_.num_actions(); }

  std::span<const Transition> row(StateIndex state, int action) const {
    const std::size_t r = static_cast<std::size_t>(state) * num_actions() +
                          static_cast<std::size_t>(action);
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  // v_cpt(GoE) of arriving in `next`.
  double state_reward(StateIndex next) const { return state_reward_[next]; }
  // v+(f_c(.)) of taking `action`.
  double action_cost(int action) const {
    return action_cost_[static_cast<std::size_t>(action)];
  }
  std::size_t num_entries() const { return entries_.size(); }

 private:
  StateSpace space_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> entries_;
  std::vector<double> state_reward_;
  std::vector<double> action_cost_;
};

// Throws CapacityError when the space exceeds solver.max_states.
TransitionTable build_transitions(const SystemConfig& config);

double goe_total_of(const CmdpState& state, const SystemConfig& config);

// Net reward v_cpt(GoE(next)) - mu v+(f_c(action)).
double reward(const CmdpState& next, int action, double mu, const SystemConfig& config);
double reward(const TransitionTable& table, StateIndex next, int action, double mu);

struct AccessibilityResult {
  bool accessible = false;
  // An ordered pair (from, to) with `to` unreachable from `from`.
  std::optional<std::pair<StateIndex, StateIndex>> witness;
  std::size_t closed_classes = 0;  // closed communicating classes of the union graph
  std::size_t class_size = 0;      // states in the closed class when unique
  // States outside the closed class that some stationary policy can keep
  // forever; nonzero means the strict transient/communicating split fails.
  std::size_t holdable_outside = 0;
};

// Accessible iff the union digraph of all actions' positive-mass edges has
// exactly one closed communicating class.
AccessibilityResult check_weak_accessibility(const TransitionTable& table);

// CSV rows state,action,successor,probability.
void write_kernel_csv(const TransitionTable& table, std::ostream& out);

}  // namespace goesched
