#include "goesched/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "goesched/errors.hpp"

namespace goesched {

namespace {

// Indices 0..n-1 ordered by `key` ascending, ties by index.
template <typename Key>
std::vector<std::size_t> ranking(std::size_t n, Key key) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return order;
}

std::vector<double> relevant_weights(const std::vector<double>& by_attribute,
                                     const std::vector<int>& relevant) {
  std::vector<double> w;
  for (int a : relevant) {
    const double x = by_attribute.at(static_cast<std::size_t>(a - 1));
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw ValidationError("scheduler weight for attribute " + std::to_string(a) +
                            " must be positive");
    }
    w.push_back(x);
  }
  return w;
}

class PolicyScheduler final : public Scheduler {
 public:
  PolicyScheduler(Policy policy, std::vector<int> relevant)
      : policy_(std::move(policy)), relevant_(std::move(relevant)) {
    validate_policy(policy_, policy_.table.size(), relevant_.size() + 1);
  }

  std::vector<int> decide(const Observation& obs, std::uint64_t, Rng& rng) override {
    const int a = sample_action(policy_, obs.state_index, rng);
    if (a == 0) return {};
    return {relevant_[static_cast<std::size_t>(a - 1)]};
  }

 private:
  Policy policy_;
  std::vector<int> relevant_;
};

// Smooth weighted round robin: every slot each attribute gains its weight,
// the leaders are served and pay back the total.
class WrrScheduler final : public Scheduler {
 public:
  WrrScheduler(std::vector<double> weights, std::vector<int> relevant, int limit)
      : weights_(relevant_weights(weights, relevant)), relevant_(std::move(relevant)),
        current_(relevant_.size(), 0.0), limit_(limit) {
    total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  }

  std::vector<int> decide(const Observation&, std::uint64_t, Rng&) override {
    for (std::size_t i = 0; i < current_.size(); ++i) current_[i] += weights_[i];
    const auto order = ranking(current_.size(), [&](std::size_t i) { return -current_[i]; });
    const std::size_t take = std::min(order.size(), static_cast<std::size_t>(limit_));
    std::vector<int> out;
    for (std::size_t k = 0; k < take; ++k) {
      current_[order[k]] -= total_;
      out.push_back(relevant_[order[k]]);
    }
    return out;
  }

 private:
  std::vector<double> weights_;
  std::vector<int> relevant_;
  std::vector<double> current_;
  double total_ = 0.0;
  int limit_;
};

class LwgfScheduler final : public Scheduler {
 public:
  LwgfScheduler(std::vector<double> weights, std::vector<int> relevant, int limit)
      : weights_(relevant_weights(weights, relevant)), relevant_(std::move(relevant)),
        limit_(limit) {}

  std::vector<int> decide(const Observation& obs, std::uint64_t, Rng&) override {
    const auto order =
        ranking(relevant_.size(), [&](std::size_t i) { return weights_[i] * obs.goe[i]; });
    const std::size_t take = std::min(order.size(), static_cast<std::size_t>(limit_));
    std::vector<int> out;
    for (std::size_t k = 0; k < take; ++k) out.push_back(relevant_[order[k]]);
    return out;
  }

 private:
  std::vector<double> weights_;
  std::vector<int> relevant_;
  int limit_;
};

class UniformScheduler final : public Scheduler {
 public:
  UniformScheduler(std::vector<int> relevant, int limit)
      : relevant_(std::move(relevant)), limit_(limit) {}

  std::vector<int> decide(const Observation&, std::uint64_t, Rng& rng) override {
    std::vector<int> pool = relevant_;
    const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(limit_));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t j = k + uniform_index(rng, pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    pool.resize(take);
    return pool;
  }

 private:
  std::vector<int> relevant_;
  int limit_;
};

// Two-state query/idle chain with stationary query probability target_rate.
class MarkovianScheduler final : public Scheduler {
 public:
  MarkovianScheduler(double rho, double target, std::vector<int> relevant, int limit)
      : rho_(rho), target_(target), relevant_(std::move(relevant)), limit_(limit) {}

  std::vector<int> decide(const Observation&, std::uint64_t, Rng& rng) override {
    if (!started_) {
      querying_ = bernoulli(rng, target_);
      started_ = true;
    } else {
      const double p = querying_ ? rho_ + (1.0 - rho_) * target_ : (1.0 - rho_) * target_;
      querying_ = bernoulli(rng, p);
    }
    if (!querying_) return {};
    const std::size_t take = std::min(relevant_.size(), static_cast<std::size_t>(limit_));
    std::vector<int> out;
    for (std::size_t k = 0; k < take; ++k) {
      out.push_back(relevant_[cursor_]);
      cursor_ = (cursor_ + 1) % relevant_.size();
    }
    return out;
  }

 private:
  double rho_;
  double target_;
  std::vector<int> relevant_;
  int limit_;
  bool started_ = false;
  bool querying_ = false;
  std::size_t cursor_ = 0;
};

void require_single_query(const SystemConfig& config, const char* what) {
  if (config.query_limit != 1) {
    throw ContractError(std::string(what) + " scheduling requires query_limit = 1");
  }
}

}  // namespace

Observation observe(const Environment& env, const EnvState& state, const StateSpace* space) {
  const SystemConfig& config = env.config();
  Observation obs;
  obs.attributes = env.relevant();
  for (int a : obs.attributes) {
    const auto m = static_cast<std::size_t>(a - 1);
    obs.aoi.push_back(state.aoi[m]);
    obs.level.push_back(state.level[m]);
    obs.goe.push_back(
        goe_component(state.aoi[m], config.level_value(state.level[m]), config.composite));
  }
  if (space != nullptr) obs.state_index = space->encode(state);
  return obs;
}

Policy QTable::greedy() const {
  std::vector<int> table(num_states, 0);
  for (std::size_t s = 0; s < num_states; ++s) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(num_actions); ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    table[s] = best;
  }
  return Policy::deterministic(std::move(table));
}

void write_qtable_csv(const QTable& table, std::ostream& out) {
  out << "state,action,value,visits\n";
  char buf[40];
  for (std::size_t s = 0; s < table.num_states; ++s) {
    for (int a = 0; a < static_cast<int>(table.num_actions); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", table.q(s, a));
      out << s << ',' << a << ',' << buf << ','
          << table.visits[s * table.num_actions + static_cast<std::size_t>(a)] << '\n';
    }
  }
}

std::string kind_name(const SchedulerKind& kind) {
  static const char* const names[] = {"policy", "wrr", "lwgf", "uniform", "markovian",
                                      "tabular_q"};
  return names[kind.index()];
}

std::vector<double> importance_weights(const SystemConfig& config) {
  std::vector<double> w(static_cast<std::size_t>(config.num_attributes), 0.0);
  for (const auto& set : config.required_sets) {
    for (int a : set) w[static_cast<std::size_t>(a - 1)] += 1.0;
  }
  return w;
}

std::vector<double> scheduler_weights(const SystemConfig& config) {
  return config.scheduler.weights.empty() ? importance_weights(config) : config.scheduler.weights;
}

SchedulerKind benchmark_kind(const std::string& name, const SystemConfig& config) {
  if (name == "wrr") return sched::Wrr{scheduler_weights(config)};
  if (name == "lwgf") return sched::Lwgf{scheduler_weights(config)};
  if (name == "uniform") return sched::Uniform{};
  if (name == "markovian") {
    const double q = config.scheduler.target_rate < 0.0 ? config.cost_flex
                                                        : config.scheduler.target_rate;
    return sched::Markovian{config.scheduler.rho, q};
  }
  throw ValidationError("unknown benchmark scheduler '" + name + "'");
}

std::unique_ptr<Scheduler> make_scheduler(const SchedulerKind& kind, const SystemConfig& config) {
  const std::vector<int> relevant = config.relevant_attributes();
  const int limit = config.query_limit;
  if (const auto* p = std::get_if<sched::PolicyRule>(&kind)) {
    require_single_query(config, "policy");
    return std::make_unique<PolicyScheduler>(p->policy, relevant);
  }
  if (const auto* p = std::get_if<sched::TabularQ>(&kind)) {
    require_single_query(config, "tabular_q");
    if (p->table.num_actions != relevant.size() + 1) {
      throw ValidationError("Q-table action count does not match the configuration");
    }
    return std::make_unique<PolicyScheduler>(p->table.greedy(), relevant);
  }
  if (const auto* p = std::get_if<sched::Wrr>(&kind)) {
    return std::make_unique<WrrScheduler>(p->weights, relevant, limit);
  }
  if (const auto* p = std::get_if<sched::Lwgf>(&kind)) {
    return std::make_unique<LwgfScheduler>(p->weights, relevant, limit);
  }
  if (std::holds_alternative<sched::Uniform>(kind)) {
    return std::make_unique<UniformScheduler>(relevant, limit);
  }
  const auto& m = std::get<sched::Markovian>(kind);
  if (!(m.rho >= 0.0 && m.rho < 1.0)) throw ValidationError("markovian rho must be in [0, 1)");
  if (!(m.target_rate >= 0.0 && m.target_rate <= 1.0)) {
    throw ValidationError("markovian target rate must be in [0, 1]");
  }
  return std::make_unique<MarkovianScheduler>(m.rho, m.target_rate, relevant, limit);
}

double LearningRate::at(double progress, std::uint64_t visits) const {
  switch (mode) {
    case Mode::kConstant:
      return initial;
    case Mode::kLinear:
      return initial + (final_value - initial) * std::clamp(progress, 0.0, 1.0);
    case Mode::kVisitPower:
      return initial / std::pow(1.0 + static_cast<double>(visits), power);
  }
  return initial;
}

TabularQResult train_tabular_q(const SystemConfig& config, double mu,
                               const TabularQOptions& options, Rng& rng) {
  require_single_query(config, "tabular_q");
  if (!(mu >= 0.0)) throw DomainError("multiplier must be >= 0");
  const Environment env(config);
  const StateSpace space = build_state_space(config);
  QTable table(space.size(), space.num_actions());
  const int na = static_cast<int>(space.num_actions());
  const double gamma = config.discount;
  const double total_steps = static_cast<double>(options.episodes) *
                             static_cast<double>(options.steps_per_episode);

  std::uint64_t step_count = 0;
  for (int ep = 0; ep < options.episodes; ++ep) {
    EnvState state = env.reset(rng());
    StateIndex s = space.encode(state);
    for (int k = 0; k < options.steps_per_episode; ++k, ++step_count) {
      const double progress = total_steps > 1.0 ? static_cast<double>(step_count) / (total_steps - 1.0)
                                                : 1.0;
      const double eps = options.epsilon_start +
                         (options.epsilon_end - options.epsilon_start) * progress;
      int a = 0;
      if (bernoulli(rng, eps)) {
        a = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(na)));
      } else {
        for (int b = 1; b < na; ++b) {
          if (table.q(s, b) > table.q(s, a)) a = b;
        }
      }
      std::vector<int> action;
      if (a > 0) action.push_back(space.attribute_for_action(a));
      const TraceRecord rec = env.step(state, action);
      const StateIndex next = space.encode(state);
      const double r = rec.cpt_goe - mu * rec.cost;
      double best_next = table.q(next, 0);
      for (int b = 1; b < na; ++b) best_next = std::max(best_next, table.q(next, b));

      auto& visits = table.visits[s * table.num_actions + static_cast<std::size_t>(a)];
      ++visits;
      const double alpha = options.learning_rate.at(progress, visits);
      double& q = table.q(s, a);
      q += alpha * (r + gamma * best_next - q);
      s = next;
    }
  }
  TabularQResult out;
  out.policy = table.greedy();
  out.table = std::move(table);
  return out;
}

double rollout_discounted_cost(const Environment& env, const StateSpace& space,
                               const Policy& policy, const RolloutOptions& options) {
  if (options.episodes <= 0) throw DomainError("rollout episode count must be positive");
  double total = 0.0;
  for (int e = 0; e < options.episodes; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    EnvState state = env.reset(mix_seed(options.seed, 2 * ue));
    Rng action_rng(mix_seed(options.seed, 2 * ue + 1));
    for (int h = 0; h < options.horizon; ++h) {
      const int a = sample_action(policy, space.encode(state), action_rng);
      std::vector<int> action;
      if (a > 0) action.push_back(space.attribute_for_action(a));
      env.advance(state, action, nullptr);
    }
    total += state.discounted_cost;
  }
  return total / options.episodes;
}

TabularQSolve tabular_q_solve(const SystemConfig& config, const TabularQOptions& options,
                              const RolloutOptions& rollouts, std::uint64_t seed) {
  const Environment env(config);
  const StateSpace space = build_state_space(config);
  TabularQSolve out;
  std::uint64_t trainings = 0;

  BisectionHooks hooks;
  hooks.derive = [&](double mu) {
    Rng rng(mix_seed(seed, trainings++));
    TabularQResult r = train_tabular_q(config, mu, options, rng);
    out.table = std::move(r.table);
    return std::move(r.policy);
  };
  hooks.cost = [&](const Policy& p) { return rollout_discounted_cost(env, space, p, rollouts); };
  out.bisection = lagrangian_bisection(config, max_budget(config), hooks);
  return out;
}

}  // namespace goesched
