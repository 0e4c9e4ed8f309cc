#include "goesched/cmdp.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "goesched/env.hpp"
#include "goesched/errors.hpp"

namespace goesched {

StateSpace::StateSpace(std::vector<int> attributes, int max_aoi, int num_levels)
    : attributes_(std::move(attributes)), max_aoi_(max_aoi), num_levels_(num_levels) {
  if (attributes_.empty()) throw ValidationError("state space needs a required attribute");
  if (max_aoi_ < 1 || num_levels_ < 1) {
    throw ValidationError("state space needs max_aoi >= 1 and |U| >= 1");
  }
  radix_ = static_cast<std::size_t>(max_aoi_) * static_cast<std::size_t>(num_levels_);
  constexpr std::size_t kLimit = std::numeric_limits<StateIndex>::max();
  size_ = 1;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (size_ > kLimit / radix_) {
      throw CapacityError("state space (" + std::to_string(radix_) + "^" +
                          std::to_string(attributes_.size()) +
                          " states) overflows the state index type; use a model-free "
                          "scheduler");
    }
    size_ *= radix_;
  }
}

StateIndex StateSpace::encode(const CmdpState& state) const {
  std::size_t index = 0;
  for (std::size_t p = attributes_.size(); p-- > 0;) {
    const int aoi = state.aoi[p];
    const int level = state.level[p];
    if (aoi < 1 || aoi > max_aoi_ || level < 1 || level > num_levels_) {
      throw ContractError("CMDP state component out of range");
    }
    index = index * radix_ + static_cast<std::size_t>((aoi - 1) * num_levels_ + (level - 1));
  }
  return static_cast<StateIndex>(index);
}

CmdpState StateSpace::decode(StateIndex index) const {
  if (index >= size_) throw ContractError("state index " + std::to_string(index) + " out of range");
  CmdpState state;
  state.aoi.resize(attributes_.size());
  state.level.resize(attributes_.size());
  std::size_t rest = index;
  for (std::size_t p = 0; p < attributes_.size(); ++p) {
    const auto digit = static_cast<int>(rest % radix_);
    rest /= radix_;
    state.aoi[p] = digit / num_levels_ + 1;
    state.level[p] = digit % num_levels_ + 1;
  }
  return state;
}

StateIndex StateSpace::encode(const EnvState& env) const {
  std::size_t index = 0;
  for (std::size_t p = attributes_.size(); p-- > 0;) {
    const auto m = static_cast<std::size_t>(attributes_[p] - 1);
    const int aoi = env.aoi[m];
    const int level = env.level[m];
    if (aoi < 1 || aoi > max_aoi_ || level < 1 || level > num_levels_) {
      throw ContractError("simulator state outside the CMDP state space");
    }
    index = index * radix_ + static_cast<std::size_t>((aoi - 1) * num_levels_ + (level - 1));
  }
  return static_cast<StateIndex>(index);
}

int StateSpace::attribute_for_action(int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= num_actions()) {
    throw ContractError("action " + std::to_string(action) + " out of range");
  }
  return action == 0 ? 0 : attributes_[static_cast<std::size_t>(action - 1)];
}

int StateSpace::action_for_attribute(int attribute) const {
  const auto it = std::find(attributes_.begin(), attributes_.end(), attribute);
  return it == attributes_.end() ? 0 : static_cast<int>(it - attributes_.begin()) + 1;
}

StateSpace build_state_space(const SystemConfig& config) {
  return StateSpace(config.relevant_attributes(), config.max_aoi, config.num_levels());
}

TransitionTable::TransitionTable(StateSpace space, std::vector<std::size_t> offsets,
                                 std::vector<Transition> entries,
                                 std::vector<double> state_reward,
                                 std::vector<double> action_cost)
    : space_(std::move(space)),
      offsets_(std::move(offsets)),
      entries_(std::move(entries)),
      state_reward_(std::move(state_reward)),
      action_cost_(std::move(action_cost)) {}

double goe_total_of(const CmdpState& state, const SystemConfig& config) {
  double total = 0.0;
  for (std::size_t p = 0; p < state.aoi.size(); ++p) {
    total += goe_component(state.aoi[p], config.level_value(state.level[p]), config.composite);
  }
  return total;
}

double reward(const CmdpState& next, int action, double mu, const SystemConfig& config) {
  return value(goe_total_of(next, config), config.cpt.goe_ref, config.cpt) -
         mu * cpt_query_cost(action == 0 ? 0 : 1, config);
}

double reward(const TransitionTable& table, StateIndex next, int action, double mu) {
  return table.state_reward(next) - mu * table.action_cost(action);
}

TransitionTable build_transitions(const SystemConfig& config) {
  validate(config);
  StateSpace space = build_state_space(config);
  if (space.size() > config.max_states) {
    throw CapacityError("CMDP has " + std::to_string(space.size()) +
                        " states, above solver.max_states = " +
                        std::to_string(config.max_states) +
                        "; use a model-free scheduler");
  }
  const std::size_t n_states = space.size();
  const std::size_t n_actions = space.num_actions();
  const auto& attrs = space.attributes();
  const int max_aoi = config.max_aoi;

  struct QueryModel {
    double success;  // (1 - p_e) p_o of the selected agent
    double failure;  // (1 - p_o) + p_e p_o
    const std::vector<double>* level_pmf;
  };
  std::vector<QueryModel> query;
  for (int a : attrs) {
    const auto m = static_cast<std::size_t>(a - 1);
    const AgentSpec& agent =
        config.agents[static_cast<std::size_t>(select_agent(config, a) - 1)];
    const double po = agent.observe_prob[m];
    const double pe = agent.erase_prob;
    query.push_back({(1.0 - pe) * po, (1.0 - po) + pe * po,
                     &config.usefulness.per_attribute_pmf[m]});
  }

  std::vector<std::size_t> offsets;
  offsets.reserve(n_states * n_actions + 1);
  offsets.push_back(0);
  std::vector<Transition> entries;
  entries.reserve(n_states * (1 + attrs.size() * (config.num_levels() + 1)));
  std::vector<double> state_reward(n_states);
  std::vector<Transition> row;

  for (std::size_t s = 0; s < n_states; ++s) {
    const CmdpState state = space.decode(static_cast<StateIndex>(s));
    state_reward[s] = value(goe_total_of(state, config), config.cpt.goe_ref, config.cpt);

    CmdpState aged = state;
    for (int& d : aged.aoi) d = std::min(d + 1, max_aoi);
    const StateIndex aged_index = space.encode(aged);

    for (std::size_t a = 0; a < n_actions; ++a) {
      row.clear();
      if (a == 0) {
        row.push_back({aged_index, 1.0, 0.0});
      } else {
        const std::size_t p = a - 1;
        const QueryModel& q = query[p];
        const auto& pmf = *q.level_pmf;
        CmdpState fresh = aged;
        fresh.aoi[p] = 1;
        for (std::size_t j = 0; j < pmf.size(); ++j) {
          const double mass = pmf[j] * q.success;
          if (mass <= 0.0) continue;
          fresh.level[p] = static_cast<int>(j) + 1;
          row.push_back({space.encode(fresh), mass, 0.0});
        }
        if (q.failure > 0.0) row.push_back({aged_index, q.failure, 0.0});
        // Successors that coincide after clamping are merged.
        std::sort(row.begin(), row.end(),
                  [](const Transition& x, const Transition& y) { return x.next < y.next; });
        std::size_t out = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (out > 0 && row[out - 1].next == row[i].next) {
            row[out - 1].probability += row[i].probability;
          } else {
            row[out++] = row[i];
          }
        }
        row.resize(out);
      }
      for (Transition& t : row) {
        t.weight = weight(std::min(t.probability, 1.0), config.cpt);
        entries.push_back(t);
      }
      offsets.push_back(entries.size());
    }
  }

  std::vector<double> action_cost(n_actions);
  for (std::size_t a = 0; a < n_actions; ++a) {
    action_cost[a] = cpt_query_cost(a == 0 ? 0 : 1, config);
  }
  return TransitionTable(std::move(space), std::move(offsets), std::move(entries),
                         std::move(state_reward), std::move(action_cost));
}

namespace {

// Strongly connected components of a digraph given as adjacency lists
// (Kosaraju with explicit stacks). Returns the component id of each node.
std::vector<std::size_t> strongly_connected(const std::vector<std::vector<StateIndex>>& fwd,
                                            std::size_t& num_components) {
  const std::size_t n = fwd.size();
  std::vector<std::vector<StateIndex>> rev(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (StateIndex t : fwd[s]) rev[t].push_back(static_cast<StateIndex>(s));
  }

  std::vector<StateIndex> order;
  order.reserve(n);
  std::vector<bool> seen(n, false);
  std::vector<std::pair<StateIndex, std::size_t>> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    stack.push_back({static_cast<StateIndex>(root), 0});
    while (!stack.empty()) {
      auto& [node, next_edge] = stack.back();
      if (next_edge < fwd[node].size()) {
        const StateIndex t = fwd[node][next_edge++];
        if (!seen[t]) {
          seen[t] = true;
          stack.push_back({t, 0});
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> component(n, kUnassigned);
  num_components = 0;
  std::vector<StateIndex> work;
  for (std::size_t i = n; i-- > 0;) {
    const StateIndex root = order[i];
    if (component[root] != kUnassigned) continue;
    component[root] = num_components;
    work.push_back(root);
    while (!work.empty()) {
      const StateIndex node = work.back();
      work.pop_back();
      for (StateIndex t : rev[node]) {
        if (component[t] == kUnassigned) {
          component[t] = num_components;
          work.push_back(t);
        }
      }
    }
    ++num_components;
  }
  return component;
}

}  // namespace

AccessibilityResult check_weak_accessibility(const TransitionTable& table) {
  const std::size_t n = table.num_states();
  const std::size_t n_actions = table.num_actions();
  std::vector<std::vector<StateIndex>> fwd(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      for (const Transition& t : table.row(static_cast<StateIndex>(s), static_cast<int>(a))) {
        if (t.probability > 0.0) fwd[s].push_back(t.next);
      }
    }
    std::sort(fwd[s].begin(), fwd[s].end());
    fwd[s].erase(std::unique(fwd[s].begin(), fwd[s].end()), fwd[s].end());
  }

  std::size_t num_components = 0;
  const auto component = strongly_connected(fwd, num_components);

  // Closed classes: components with no edge leaving them.
  std::vector<bool> closed(num_components, true);
  std::vector<StateIndex> representative(num_components, 0);
  std::vector<bool> has_rep(num_components, false);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t c = component[s];
    if (!has_rep[c]) {
      has_rep[c] = true;
      representative[c] = static_cast<StateIndex>(s);
    }
    for (StateIndex t : fwd[s]) {
      if (component[t] != c) closed[c] = false;
    }
  }

  AccessibilityResult result;
  std::vector<std::size_t> closed_ids;
  for (std::size_t c = 0; c < num_components; ++c) {
    if (closed[c]) closed_ids.push_back(c);
  }
  result.closed_classes = closed_ids.size();
  std::sort(closed_ids.begin(), closed_ids.end(),
            [&](std::size_t x, std::size_t y) { return representative[x] < representative[y]; });
  if (closed_ids.size() != 1) {
    result.accessible = false;
    result.witness = std::make_pair(representative[closed_ids[0]], representative[closed_ids[1]]);
    return result;
  }
  const std::size_t target = closed_ids[0];
  result.accessible = true;
  result.class_size = static_cast<std::size_t>(
      std::count(component.begin(), component.end(), target));

  // Largest set outside the closed class that some policy can keep forever.
  std::vector<bool> holdable(n, false);
  for (std::size_t s = 0; s < n; ++s) holdable[s] = component[s] != target;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (!holdable[s]) continue;
      bool keep = false;
      for (std::size_t a = 0; a < n_actions && !keep; ++a) {
        const auto row = table.row(static_cast<StateIndex>(s), static_cast<int>(a));
        keep = std::all_of(row.begin(), row.end(), [&](const Transition& t) {
          return t.probability <= 0.0 || holdable[t.next];
        });
      }
      if (!keep) {
        holdable[s] = false;
        changed = true;
      }
    }
  }
  result.holdable_outside = static_cast<std::size_t>(
      std::count(holdable.begin(), holdable.end(), true));
  return result;
}

void write_kernel_csv(const TransitionTable& table, std::ostream& out) {
  out << "state,action,successor,probability\n";
  char buf[64];
  for (std::size_t s = 0; s < table.num_states(); ++s) {
    for (std::size_t a = 0; a < table.num_actions(); ++a) {
      for (const Transition& t : table.row(static_cast<StateIndex>(s), static_cast<int>(a))) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.probability);
        out << s << ',' << a << ',' << t.next << ',' << buf << '\n';
      }
    }
  }
}

}  // namespace goesched
