#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/env.hpp"
#include "goesched/rng.hpp"
#include "goesched/solver.hpp"
#include "oracles.hpp"

using namespace goesched;

namespace {

// Small random instance: 1 or 2 attributes, random shapes, pmfs and agents.
SystemConfig random_config(Rng& rng) {
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  const int m = 1 + static_cast<int>(uniform_index(rng, 2));
  const int n = 1 + static_cast<int>(uniform_index(rng, 3));
  std::ostringstream doc;
  doc << R"({"system": {"M": )" << m << R"(, "N": )" << n << R"(, "K": 1, "max_aoi": )"
      << 1 + uniform_index(rng, 3) << R"(, "num_levels": )" << 1 + uniform_index(rng, 3)
      << "}, \"goals\": {\"required_sets\": [[";
  for (int i = 1; i <= m; ++i) doc << (i > 1 ? "," : "") << i;
  doc << "]]}, \"attributes\": [";
  for (int i = 0; i < m; ++i) {
    const int card = 2 + static_cast<int>(uniform_index(rng, 5));
    std::vector<double> pmf;
    double total = 0.0;
    for (int k = 0; k < card; ++k) {
      pmf.push_back(draw(0.05, 1.0));
      total += pmf.back();
    }
    doc << (i ? "," : "") << R"({"cardinality": )" << card << R"(, "alpha": )" << draw(0.3, 4.0)
        << R"(, "beta": )" << draw(0.3, 4.0) << R"(, "pmf": [)";
    double acc = 0.0;
    for (int k = 0; k < card; ++k) {
      // Last entry absorbs rounding so the pmf sums to 1.
      const double p = k + 1 < card ? pmf[static_cast<std::size_t>(k)] / total : 1.0 - acc;
      acc += p;
      doc << (k ? "," : "") << std::setprecision(17) << p;
    }
    doc << "]}";
  }
  doc << "], \"agents\": [";
  for (int j = 0; j < n; ++j) {
    doc << (j ? "," : "") << R"({"p_observe": [)";
    for (int i = 0; i < m; ++i) doc << (i ? "," : "") << draw(0.0, 0.99);
    doc << R"(], "p_erase": )" << draw(0.01, 1.0) << "}";
  }
  doc << R"(], "solver": {"gamma": )" << draw(0.0, 0.95) << R"(}, "cpt": {"goe_ref": )"
      << draw(0.0, 1.5) << "}}";
  return load_config(doc.str());
}

}  // namespace

TEST_CASE("random instances: kernel rows and success mass") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const SystemConfig c = random_config(rng);
    const TransitionTable t = build_transitions(c);
    const oracle::Mdp mdp = oracle::dense_model(c);
    REQUIRE(static_cast<int>(t.num_states()) == mdp.states);
    for (StateIndex s = 0; s < t.num_states(); ++s) {
      CHECK(t.space().encode(t.space().decode(s)) == s);
      for (int a = 0; a < static_cast<int>(t.num_actions()); ++a) {
        double sum = 0.0;
        for (const Transition& tr : t.row(s, a)) {
          sum += tr.probability;
          CHECK(std::abs(tr.probability - mdp.p(static_cast<int>(s), a, static_cast<int>(tr.next))) <
                1e-12);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        if (a == 0) CHECK(t.row(s, a).size() == 1);
      }
    }
    // Success mass from the all-initial state equals (1 - p_e) p_o of the
    // selected agent. With max_aoi = 1 the branches coincide; skip those.
    if (c.max_aoi > 1) {
      for (int a = 1; a < static_cast<int>(t.num_actions()); ++a) {
        const int attr = t.space().attribute_for_action(a);
        const AgentSpec& ag = c.agents[static_cast<std::size_t>(select_agent(c, attr) - 1)];
        const double q = (1.0 - ag.erase_prob) * ag.observe_prob[static_cast<std::size_t>(attr - 1)];
        double success = 0.0;
        for (const Transition& tr : t.row(0, a)) {
          if (t.space().decode(tr.next).aoi[static_cast<std::size_t>(a - 1)] == 1) {
            success += tr.probability;
          }
        }
        CHECK(success == doctest::Approx(q).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("random instances: value iteration is optimal") {
  Rng rng(99);
  int checked = 0;
  while (checked < 25) {
    const SystemConfig c = random_config(rng);
    const TransitionTable t = build_transitions(c);
    // Exhaustive search is only cheap for small tables.
    if (std::pow(static_cast<double>(t.num_actions()), static_cast<double>(t.num_states())) > 5000) {
      continue;
    }
    ++checked;
    const oracle::Mdp mdp = oracle::dense_model(c);
    const double mu = 2.0 * uniform01(rng);
    const ValueIterationResult r = value_iteration(t, mu, c);
    const auto best = oracle::best_lagrangian_values(mdp, mu);
    const auto achieved = oracle::lagrangian_values(mdp, r.policy.table, mu);
    for (std::size_t s = 0; s < best.size(); ++s) {
      CHECK(std::abs(r.values[s] - best[s]) < 1e-5);
      CHECK(std::abs(achieved[s] - best[s]) < 1e-5);
    }
  }
}

TEST_CASE("random instances: simulator invariants") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemConfig c = random_config(rng);
    const Environment env(c);
    EnvState s = env.reset(static_cast<std::uint64_t>(trial));
    std::vector<double> costs;
    for (int k = 0; k < 500; ++k) {
      std::vector<int> action;
      const auto choice = uniform_index(rng, env.relevant().size() + 1);
      if (choice > 0) action.push_back(env.relevant()[choice - 1]);
      const auto before = s.aoi;
      const TraceRecord r = env.step(s, action);
      costs.push_back(r.cost);
      for (int m = 1; m <= c.num_attributes; ++m) {
        const auto i = static_cast<std::size_t>(m - 1);
        CHECK(s.aoi[i] >= 1);
        CHECK(s.aoi[i] <= c.max_aoi);
        if (r.delivered_and_correct(m)) {
          CHECK(s.aoi[i] == 1);
        } else {
          CHECK(s.aoi[i] == std::min(before[i] + 1, c.max_aoi));
        }
      }
    }
    double expected = 0.0;
    for (std::size_t k = 0; k < costs.size(); ++k) {
      if (costs[k] != 0.0) expected += std::pow(c.discount, static_cast<double>(k)) * costs[k];
    }
    CHECK(s.discounted_cost == expected);
  }
}
