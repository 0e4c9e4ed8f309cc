#include "goesched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "goesched/errors.hpp"

namespace goesched {

namespace {

constexpr int kMaxSweeps = 1'000'000;
constexpr double kMuCap = 1048576.0;  // 2^20

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fixed point of X(s) = sum_s' w (g(s, a, s') + gamma X(s')) for a = table[s],
// iterated from `start` (zero when empty) until the max-norm change falls
// below `tol`.
template <typename Gain>
std::vector<double> evaluate_table(const std::vector<int>& actions, const TransitionTable& table,
                                   double discount, double tol, Gain gain,
                                   std::vector<double> start = {}) {
  const std::size_t n = table.num_states();
  std::vector<double> x = start.empty() ? std::vector<double>(n, 0.0) : std::move(start);
  std::vector<double> next(n, 0.0);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const int a = actions[s];
      double acc = 0.0;
      for (const Transition& tr : table.row(static_cast<StateIndex>(s), a)) {
        acc += tr.weight * (gain(a, tr.next) + discount * x[tr.next]);
      }
      next[s] = acc;
      change = std::max(change, std::abs(acc - x[s]));
    }
    x.swap(next);
    if (change < tol || discount == 0.0) return x;
  }
  throw ConvergenceError("policy evaluation did not converge", 0.0);
}

template <typename Gain>
std::vector<double> evaluate_policy(const Policy& policy, const TransitionTable& table,
                                    const SystemConfig& config, Gain gain) {
  validate_policy(policy, table.num_states(), table.num_actions());
  std::vector<double> minus =
      evaluate_table(policy.table, table, config.discount, config.eval_tolerance, gain);
  if (!policy.is_mixture()) return minus;
  const std::vector<double> plus =
      evaluate_table(policy.plus_table, table, config.discount, config.eval_tolerance, gain);
  for (std::size_t s = 0; s < minus.size(); ++s) {
    minus[s] = policy.eta * minus[s] + (1.0 - policy.eta) * plus[s];
  }
  return minus;
}

}  // namespace

Policy Policy::deterministic(std::vector<int> table) {
  Policy p;
  p.kind = Kind::kDeterministic;
  p.table = std::move(table);
  p.eta = 1.0;
  return p;
}

Policy Policy::mixture(std::vector<int> minus, std::vector<int> plus, double eta) {
  Policy p;
  p.kind = Kind::kMixture;
  p.table = std::move(minus);
  p.plus_table = std::move(plus);
  p.eta = eta;
  return p;
}

void validate_policy(const Policy& policy, std::size_t num_states, std::size_t num_actions) {
  auto check = [&](const std::vector<int>& t, const char* name) {
    if (t.size() != num_states) {
      throw ValidationError(std::string("policy ") + name + " has " + std::to_string(t.size()) +
                            " entries, expected " + std::to_string(num_states));
    }
    for (std::size_t s = 0; s < t.size(); ++s) {
      if (t[s] < 0 || static_cast<std::size_t>(t[s]) >= num_actions) {
        throw ValidationError(std::string("policy ") + name + " state " + std::to_string(s) +
                              ": action " + std::to_string(t[s]) + " out of range");
      }
    }
  };
  check(policy.table, "table");
  if (policy.is_mixture()) {
    check(policy.plus_table, "plus table");
    if (!(policy.eta >= 0.0 && policy.eta <= 1.0)) {
      throw ValidationError("policy eta must be in [0, 1]");
    }
  }
}

double span(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

double q_value(const TransitionTable& table, StateIndex state, int action, double mu,
               std::span<const double> values, double discount) {
  const double c = mu * table.action_cost(action);
  double q = 0.0;
  for (const Transition& tr : table.row(state, action)) {
    q += tr.weight * (table.state_reward(tr.next) - c + discount * values[tr.next]);
  }
  return q;
}

ValueIterationResult value_iteration(const TransitionTable& table, double mu,
                                     const SystemConfig& config) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("multiplier must be >= 0");
  const std::size_t n = table.num_states();
  const int na = static_cast<int>(table.num_actions());
  const double gamma = config.discount;

  std::vector<double> v(n, 0.0);
  std::vector<double> next(n, 0.0);
  std::vector<int> greedy(n, 0);
  double last_span = std::numeric_limits<double>::infinity();
  double diff_lo = 0.0;
  double diff_hi = 0.0;

  for (int it = 1; it <= kMaxSweeps; ++it) {
    diff_lo = std::numeric_limits<double>::infinity();
    diff_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < na; ++a) {
        const double q = q_value(table, static_cast<StateIndex>(s), a, mu, v, gamma);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      next[s] = best;
      greedy[s] = best_a;
      const double d = best - v[s];
      diff_lo = std::min(diff_lo, d);
      diff_hi = std::max(diff_hi, d);
    }
    v.swap(next);
    last_span = diff_hi - diff_lo;
    if (gamma == 0.0 || last_span < config.span_tolerance) {
      if (gamma > 0.0 && config.cpt.weighting == Weighting::kIdentity) {
        // Value of the greedy table, warm-started from the bracket midpoint.
        const double shift = gamma / (1.0 - gamma) * 0.5 * (diff_hi + diff_lo);
        for (double& x : v) x += shift;
        v = evaluate_table(
            greedy, table, gamma, config.eval_tolerance,
            [&](int a, StateIndex t) { return table.state_reward(t) - mu * table.action_cost(a); },
            std::move(v));
      }
      ValueIterationResult out;
      out.values = std::move(v);
      out.policy = Policy::deterministic(std::move(greedy));
      out.iterations = it;
      out.final_span = last_span;
      return out;
    }
  }
  throw ConvergenceError("value iteration exceeded the sweep limit", last_span);
}

std::vector<double> cost_function(const Policy& policy, const TransitionTable& table,
                                  const SystemConfig& config) {
  return evaluate_policy(policy, table, config,
                         [&](int a, StateIndex) { return table.action_cost(a); });
}

std::vector<double> objective_function(const Policy& policy, const TransitionTable& table,
                                       const SystemConfig& config) {
  return evaluate_policy(policy, table, config,
                         [&](int, StateIndex next) { return table.state_reward(next); });
}

double evaluate_discounted_cost(const Policy& policy, const TransitionTable& table,
                                const SystemConfig& config) {
  return cost_function(policy, table, config)[0];
}

double evaluate_objective(const Policy& policy, const TransitionTable& table,
                          const SystemConfig& config) {
  return objective_function(policy, table, config)[0];
}

double evaluate_per_slot_cost(const Policy& policy, const TransitionTable& table,
                              const SystemConfig& config) {
  validate_policy(policy, table.num_states(), table.num_actions());
  if (!policy.is_mixture()) return evaluate_discounted_cost(policy, table, config);
  const std::size_t n = table.num_states();
  const double gamma = config.discount;
  std::vector<double> x(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double acc = 0.0;
      const std::pair<int, double> sides[2] = {{policy.table[s], policy.eta},
                                               {policy.plus_table[s], 1.0 - policy.eta}};
      for (const auto& [a, p] : sides) {
        if (p == 0.0) continue;
        double qa = 0.0;
        for (const Transition& tr : table.row(static_cast<StateIndex>(s), a)) {
          qa += tr.weight * (table.action_cost(a) + gamma * x[tr.next]);
        }
        acc += p * qa;
      }
      next[s] = acc;
      change = std::max(change, std::abs(acc - x[s]));
    }
    x.swap(next);
    if (change < config.eval_tolerance || gamma == 0.0) return x[0];
  }
  throw ConvergenceError("policy evaluation did not converge", 0.0);
}

double mixing_probability(double budget, double cost_minus, double cost_plus) {
  if (cost_minus == cost_plus) return 0.0;
  return std::clamp((budget - cost_plus) / (cost_minus - cost_plus), 0.0, 1.0);
}

BisectionOutcome lagrangian_bisection(const SystemConfig& config, double budget,
                                      const BisectionHooks& hooks) {
  BisectionOutcome out;
  Policy p0 = hooks.derive(0.0);
  const double c0 = hooks.cost(p0);
  if (c0 <= budget) {
    out.early_exit = true;
    out.feasible = true;
    out.policy = p0;
    out.minus = p0;
    out.plus = p0;
    out.cost = out.cost_minus = out.cost_plus = c0;
    return out;
  }

  double mu_lo = 0.0;
  Policy lo_policy = std::move(p0);
  double lo_cost = c0;
  double mu_hi = config.mu_hi_init;
  Policy hi_policy = hooks.derive(mu_hi);
  double hi_cost = hooks.cost(hi_policy);
  while (hi_cost > budget) {
    mu_lo = mu_hi;
    lo_policy = std::move(hi_policy);
    lo_cost = hi_cost;
    mu_hi *= 2.0;
    ++out.doubling_steps;
    if (mu_hi > kMuCap) {
      throw InfeasibleError("no multiplier up to 2^20 meets the budget " + fmt17(budget) +
                            " (cost " + fmt17(lo_cost) + ")");
    }
    hi_policy = hooks.derive(mu_hi);
    hi_cost = hooks.cost(hi_policy);
  }

  double mu = mu_hi;
  while (mu_hi - mu_lo >= config.mu_tolerance) {
    mu = 0.5 * (mu_lo + mu_hi);
    Policy p = hooks.derive(mu);
    const double c = hooks.cost(p);
    if (c > budget) {
      mu_lo = mu;
      lo_policy = std::move(p);
      lo_cost = c;
    } else {
      mu_hi = mu;
      hi_policy = std::move(p);
      hi_cost = c;
    }
    ++out.outer_steps;
  }

  out.mu_star = mu;
  out.mu_minus = mu_lo;
  out.mu_plus = mu_hi;
  out.cost_minus = lo_cost;
  out.cost_plus = hi_cost;
  out.minus = lo_policy;
  out.plus = hi_policy;

  const double eta = config.eta_mode == EtaMode::kFixed
                         ? config.eta
                         : mixing_probability(budget, lo_cost, hi_cost);
  if (hi_cost == budget || lo_policy.table == hi_policy.table ||
      (eta == 0.0 && config.eta_mode == EtaMode::kComputed)) {
    out.policy = hi_policy;
    out.cost = hi_cost;
  } else {
    out.policy = Policy::mixture(lo_policy.table, hi_policy.table, eta);
    out.cost = eta * lo_cost + (1.0 - eta) * hi_cost;
  }
  out.feasible = out.cost <= budget + 1e-6;
  return out;
}

SolveReport bisection_solve(const TransitionTable& table, const SystemConfig& config) {
  SolveReport report;
  report.budget = max_budget(config);
  std::vector<double> last_values;

  BisectionHooks hooks;
  hooks.derive = [&](double mu) {
    ValueIterationResult vi = value_iteration(table, mu, config);
    report.inner_iterations.push_back(vi.iterations);
    report.span_history.push_back(vi.final_span);
    last_values = std::move(vi.values);
    return std::move(vi.policy);
  };
  hooks.cost = [&](const Policy& p) { return evaluate_discounted_cost(p, table, config); };

  BisectionOutcome b = lagrangian_bisection(config, report.budget, hooks);
  report.mu_star = b.mu_star;
  report.policy = std::move(b.policy);
  report.value_function = std::move(last_values);
  report.cost_value = b.cost;
  report.objective_value = evaluate_objective(report.policy, table, config);
  report.feasible = b.feasible;
  report.outer_steps = b.outer_steps;
  report.doubling_steps = b.doubling_steps;
  report.mu_minus = b.mu_minus;
  report.mu_plus = b.mu_plus;
  report.cost_minus = b.cost_minus;
  report.cost_plus = b.cost_plus;
  report.per_slot_cost = evaluate_per_slot_cost(report.policy, table, config);

  const std::vector<double> per_state = cost_function(report.policy, table, config);
  for (double c : per_state) {
    report.cost_state_spread = std::max(report.cost_state_spread, std::abs(c - per_state[0]));
  }
  return report;
}

int sample_action(const Policy& policy, StateIndex state, Rng& rng) {
  if (state >= policy.table.size()) {
    throw ContractError("state index " + std::to_string(state) + " outside the policy table");
  }
  if (!policy.is_mixture()) return policy.table[state];
  return bernoulli(rng, policy.eta) ? policy.table[state] : policy.plus_table[state];
}

void write_policy_csv(std::ostream& out, const Policy& policy, double mu_star,
                      const std::string& config_hash) {
  out << "# kind=" << (policy.is_mixture() ? "mixture" : "deterministic") << '\n';
  out << "# mu_star=" << fmt17(mu_star) << '\n';
  out << "# eta=" << fmt17(policy.is_mixture() ? policy.eta : 1.0) << '\n';
  out << "# config_hash=" << config_hash << '\n';
  if (policy.is_mixture()) {
    out << "state_index,action,action_plus\n";
    for (std::size_t s = 0; s < policy.table.size(); ++s) {
      out << s << ',' << policy.table[s] << ',' << policy.plus_table[s] << '\n';
    }
  } else {
    out << "state_index,action\n";
    for (std::size_t s = 0; s < policy.table.size(); ++s) {
      out << s << ',' << policy.table[s] << '\n';
    }
  }
  if (!out) throw IoError("failed to write policy");
}

PolicyFile read_policy_csv(std::istream& in) {
  PolicyFile file;
  std::string kind = "deterministic";
  double eta = 1.0;
  bool header_seen = false;
  bool mixture_columns = false;
  std::vector<std::pair<long long, std::pair<int, int>>> rows;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto start = body.find_first_not_of(' ');
      body = start == std::string::npos ? "" : body.substr(start);
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      try {
        if (key == "kind") kind = value;
        else if (key == "mu_star") file.mu_star = std::stod(value);
        else if (key == "eta") eta = std::stod(value);
        else if (key == "config_hash") file.config_hash = value;
      } catch (const std::exception&) {
        throw ValidationError("policy line " + std::to_string(line_no) + ": bad value for " + key);
      }
      continue;
    }
    if (!header_seen) {
      if (line == "state_index,action") {
        mixture_columns = false;
      } else if (line == "state_index,action,action_plus") {
        mixture_columns = true;
      } else {
        throw ValidationError("policy line " + std::to_string(line_no) +
                              ": unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    std::vector<long long> cells;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stoll(field, &used));
        if (used != field.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError("policy line " + std::to_string(line_no) + ": not an integer '" +
                              field + "'");
      }
    }
    const std::size_t want = mixture_columns ? 3 : 2;
    if (cells.size() != want) {
      throw ValidationError("policy line " + std::to_string(line_no) + ": expected " +
                            std::to_string(want) + " columns");
    }
    rows.push_back({cells[0], {static_cast<int>(cells[1]),
                               static_cast<int>(mixture_columns ? cells[2] : cells[1])}});
  }
  if (!header_seen) throw ValidationError("policy file has no column header");
  if ((kind == "mixture") != mixture_columns) {
    throw ValidationError("policy kind '" + kind + "' does not match its columns");
  }

  std::vector<int> minus(rows.size(), -1);
  std::vector<int> plus(rows.size(), -1);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [s, actions] : rows) {
    if (s < 0 || static_cast<std::size_t>(s) >= rows.size()) {
      throw ValidationError("policy state index " + std::to_string(s) + " out of range");
    }
    if (seen[static_cast<std::size_t>(s)]) {
      throw ValidationError("policy state index " + std::to_string(s) + " listed twice");
    }
    if (actions.first < 0 || (mixture_columns && actions.second < 0)) {
      throw ValidationError("policy state index " + std::to_string(s) + " has a negative action");
    }
    seen[static_cast<std::size_t>(s)] = true;
    minus[static_cast<std::size_t>(s)] = actions.first;
    plus[static_cast<std::size_t>(s)] = actions.second;
  }
  file.policy = mixture_columns ? Policy::mixture(std::move(minus), std::move(plus), eta)
                                : Policy::deterministic(std::move(minus));
  return file;
}

PolicyFile read_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open policy file " + path);
  return read_policy_csv(in);
}

std::string solve_report_json(const SolveReport& report, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["mu_star"] = report.mu_star;
  j["policy_kind"] = report.policy.is_mixture() ? "mixture" : "deterministic";
  j["eta"] = report.policy.is_mixture() ? report.policy.eta : 1.0;
  j["cost_value"] = report.cost_value;
  j["objective_value"] = report.objective_value;
  j["budget"] = report.budget;
  j["feasible"] = report.feasible;
  j["outer_steps"] = report.outer_steps;
  j["doubling_steps"] = report.doubling_steps;
  j["inner_iterations"] = report.inner_iterations;
  j["span_history"] = report.span_history;
  j["mu_minus"] = report.mu_minus;
  j["mu_plus"] = report.mu_plus;
  j["cost_minus"] = report.cost_minus;
  j["cost_plus"] = report.cost_plus;
  j["per_slot_cost"] = report.per_slot_cost;
  j["cost_state_spread"] = report.cost_state_spread;
  j["value_function"] = report.value_function;
  return j.dump(2);
}

}  // namespace goesched
