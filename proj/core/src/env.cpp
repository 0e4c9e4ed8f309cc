#include "goesched/env.hpp"

#include <algorithm>
#include <cmath>

#include "goesched/errors.hpp"

namespace goesched {

bool TraceRecord::delivered_and_correct(int attribute) const {
  return std::any_of(queries.begin(), queries.end(), [&](const QueryOutcome& q) {
    return q.attribute == attribute && q.delivered && q.correct;
  });
}

Environment::Environment(SystemConfig config) : config_(std::move(config)) {
  validate(config_);
  relevant_ = config_.relevant_attributes();
  const auto m_count = static_cast<std::size_t>(config_.num_attributes);
  is_relevant_.assign(m_count, false);
  for (int a : relevant_) is_relevant_[static_cast<std::size_t>(a - 1)] = true;
  for (const auto& attr : config_.attributes) {
    agent_of_.push_back(select_agent(config_, attr.id));
    std::vector<int> levels;
    for (int i = 1; i <= attr.cardinality; ++i) {
      levels.push_back(usefulness_map(attr, config_.usefulness.levels, i));
    }
    level_of_.push_back(std::move(levels));
  }
}

EnvState Environment::reset(std::uint64_t seed) const {
  EnvState state;
  const auto m_count = static_cast<std::size_t>(config_.num_attributes);
  state.rng.seed(seed);
  state.t = 0;
  state.knowledge.assign(m_count, 0);
  state.aoi.assign(m_count, 1);
  state.level.assign(m_count, 1);
  state.truth.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    state.truth[m] =
        static_cast<int>(sample_categorical(config_.attributes[m].source_pmf, state.rng)) + 1;
  }
  state.discounted_cost = 0.0;
  return state;
}

void Environment::check_action(std::span<const int> action) const {
  if (action.size() > static_cast<std::size_t>(config_.query_limit)) {
    throw ContractError("action queries " + std::to_string(action.size()) +
                        " attributes but the query limit is " +
                        std::to_string(config_.query_limit));
  }
  for (std::size_t i = 0; i < action.size(); ++i) {
    const int a = action[i];
    if (a < 1 || a > config_.num_attributes || !is_relevant_[static_cast<std::size_t>(a - 1)]) {
      throw ContractError("attribute " + std::to_string(a) + " is not a required attribute");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (action[j] == a) throw ContractError("attribute queried twice in one slot");
    }
  }
}

TraceRecord Environment::step(EnvState& state, std::span<const int> action) const {
  TraceRecord record;
  advance(state, action, &record);
  record.t = state.t;
  record.goe = goe_total(state);
  record.cpt_goe = value(record.goe, config_.cpt.goe_ref, config_.cpt);
  record.goe_strict = goe_strict(state);
  record.aoi = state.aoi;
  record.usefulness.resize(state.level.size());
  for (std::size_t m = 0; m < state.level.size(); ++m) {
    record.usefulness[m] = config_.level_value(state.level[m]);
  }
  return record;
}

void Environment::advance(EnvState& state, std::span<const int> action,
                          TraceRecord* record) const {
  check_action(action);
  const auto m_count = static_cast<std::size_t>(config_.num_attributes);

  // (1) the source moves on.
  for (std::size_t m = 0; m < m_count; ++m) {
    state.truth[m] =
        static_cast<int>(sample_categorical(config_.attributes[m].source_pmf, state.rng)) + 1;
  }

  // (2) queried agents observe and transmit, in attribute order. A refreshed
  // attribute is marked with AoI 0 until the aging pass.
  std::vector<int> sorted;
  if (action.size() > 1) {
    sorted.assign(action.begin(), action.end());
    std::sort(sorted.begin(), sorted.end());
    action = sorted;
  }
  for (int attribute : action) {
    const auto m = static_cast<std::size_t>(attribute - 1);
    const AttributeSpec& attr = config_.attributes[m];
    const int agent = agent_of_[m];
    const AgentSpec& sa = config_.agents[static_cast<std::size_t>(agent - 1)];
    QueryOutcome q;
    q.attribute = attribute;
    q.agent = agent;
    const bool observed_correctly = bernoulli(state.rng, sa.observe_prob[m]);
    if (observed_correctly) {
      q.observation = state.truth[m];
    } else {
      // Uniform over the realizations other than the truth.
      int wrong = static_cast<int>(
                      uniform_index(state.rng, static_cast<std::size_t>(attr.cardinality - 1))) + 1;
      if (wrong >= state.truth[m]) ++wrong;
      q.observation = wrong;
    }
    q.correct = q.observation == state.truth[m];
    q.delivered = !bernoulli(state.rng, sa.erase_prob);

    // (3) knowledge base, (5) usefulness.
    if (q.delivered) {
      state.knowledge[m] = q.observation;
      if (q.correct) {
        state.aoi[m] = 0;
        state.level[m] = level_of_[m][static_cast<std::size_t>(q.observation - 1)];
      }
    }
    if (record != nullptr) record->queries.push_back(q);
  }

  // (4) age of information.
  for (std::size_t m = 0; m < m_count; ++m) {
    state.aoi[m] = state.aoi[m] == 0 ? 1 : std::min(state.aoi[m] + 1, config_.max_aoi);
  }

  // (6) cost.
  const double cost = cpt_query_cost(static_cast<int>(action.size()), config_);
  if (cost != 0.0) {
    state.discounted_cost += std::pow(config_.discount, static_cast<double>(state.t)) * cost;
  }
  state.t += 1;
  if (record != nullptr) record->cost = cost;
}

double Environment::goe_total(const EnvState& state) const {
  double total = 0.0;
  for (int a : relevant_) {
    const auto m = static_cast<std::size_t>(a - 1);
    total += goe_component(state.aoi[m], config_.level_value(state.level[m]), config_.composite);
  }
  return total;
}

double Environment::goe_strict(const EnvState& state) const {
  double total = 0.0;
  for (int a : relevant_) {
    const auto m = static_cast<std::size_t>(a - 1);
    const double u =
        state.knowledge[m] == state.truth[m] ? config_.level_value(state.level[m]) : 0.0;
    total += goe_component(state.aoi[m], u, config_.composite);
  }
  return total;
}

double Environment::slot_reward(const EnvState& /*prev*/, std::span<const int> action,
                                const EnvState& next, double mu) const {
  return value(goe_total(next), config_.cpt.goe_ref, config_.cpt) -
         mu * cpt_query_cost(static_cast<int>(action.size()), config_);
}

EnvState reset(const SystemConfig& config, std::uint64_t seed) {
  return Environment(config).reset(seed);
}

TraceRecord step(EnvState& state, std::span<const int> action, const SystemConfig& config) {
  return Environment(config).step(state, action);
}

double goe_total(const EnvState& state, const SystemConfig& config) {
  return Environment(config).goe_total(state);
}

double slot_reward(const EnvState& prev, std::span<const int> action, const EnvState& next,
                   double mu, const SystemConfig& config) {
  return Environment(config).slot_reward(prev, action, next, mu);
}

}  // namespace goesched
