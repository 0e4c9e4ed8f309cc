#include <doctest.h>

#include <cmath>
#include <vector>

#include "goesched/config.hpp"
#include "goesched/env.hpp"
#include "goesched/errors.hpp"
#include "goesched/rng.hpp"

using namespace goesched;

namespace {

const std::vector<int> kIdle;

}  // namespace

TEST_CASE("reset gives the initial conditions") {
  const SystemConfig c = default_config();
  const EnvState s = reset(c, 7);
  CHECK(s.t == 0);
  CHECK(s.aoi == std::vector<int>{1, 1});
  CHECK(s.level == std::vector<int>{1, 1});
  CHECK(s.knowledge == std::vector<int>{0, 0});
  CHECK(s.discounted_cost == 0.0);
  for (int x : s.truth) CHECK((x >= 1 && x <= 8));
  CHECK(reset(c, 7) == s);
  CHECK(goe_total(s, c) == doctest::Approx(0.5));
}

TEST_CASE("same seed gives the same trajectory") {
  const Environment env(default_config());
  EnvState a = env.reset(11);
  EnvState b = env.reset(11);
  Rng pick(3);
  for (int t = 0; t < 100; ++t) {
    const int choice = static_cast<int>(uniform_index(pick, 3));
    std::vector<int> action;
    if (choice > 0) action.push_back(choice);
    const TraceRecord ra = env.step(a, action);
    const TraceRecord rb = env.step(b, action);
    CHECK(ra.goe == rb.goe);
    CHECK(ra.aoi == rb.aoi);
    CHECK(ra.num_queries() == rb.num_queries());
  }
  CHECK(a == b);
  CHECK(a.t == 100);
}

TEST_CASE("idle slot ages every attribute and costs nothing") {
  const Environment env(default_config());
  EnvState s = env.reset(1);
  const auto levels = s.level;
  for (int t = 1; t <= 6; ++t) {
    const TraceRecord r = env.step(s, kIdle);
    CHECK(r.cost == 0.0);
    CHECK(r.queries.empty());
    CHECK(r.t == static_cast<std::uint64_t>(t));
    for (int d : s.aoi) CHECK(d == std::min(t + 1, 4));
    CHECK(s.level == levels);
  }
  // Clamped at the maximum.
  CHECK(s.aoi == std::vector<int>{4, 4});
  CHECK(s.discounted_cost == 0.0);
}

TEST_CASE("delivered and correct frequency matches the success probability") {
  const Environment env(default_config());
  EnvState s = env.reset(2024);
  const std::vector<int> q1{1};
  int hits = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const TraceRecord r = env.step(s, q1);
    REQUIRE(r.queries.size() == 1);
    CHECK(r.queries[0].agent == 1);
    const bool ok = r.delivered_and_correct(1);
    hits += ok ? 1 : 0;
    // AoI resets iff delivered and correct.
    CHECK((s.aoi[0] == 1) == ok);
  }
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.64).epsilon(0.01 / 0.64));
}

TEST_CASE("wrong observations never equal the truth") {
  const Environment env(default_config());
  EnvState s = env.reset(5);
  const std::vector<int> q2{2};
  std::vector<int> wrong_counts(9, 0);
  for (int t = 0; t < 20000; ++t) {
    const TraceRecord r = env.step(s, q2);
    const QueryOutcome& q = r.queries[0];
    CHECK(q.correct == (q.observation == s.truth[1]));
    if (!q.correct) ++wrong_counts[static_cast<std::size_t>(q.observation)];
    if (q.delivered) CHECK(s.knowledge[1] == q.observation);
  }
  CHECK(wrong_counts[0] == 0);
  for (int i = 1; i <= 8; ++i) CHECK(wrong_counts[static_cast<std::size_t>(i)] > 300);
}

TEST_CASE("GoE examples") {
  const SystemConfig c = default_config();
  EnvState s = reset(c, 1);
  s.level = {3, 2};
  s.aoi = {1, 2};
  CHECK(goe_total(s, c) == doctest::Approx(1.0));
  s.level = {1, 1};
  s.aoi = {4, 4};
  CHECK(goe_total(s, c) == doctest::Approx(0.125));

  // An attribute outside every required set contributes nothing.
  const SystemConfig d = load_config(R"({"system": {"M": 3},
    "goals": {"required_sets": [[1], [2], [1, 2], [2]]}})");
  EnvState t = reset(d, 1);
  t.level = {4, 4, 4};
  t.aoi = {1, 1, 1};
  CHECK(goe_total(t, d) == doctest::Approx(2.0));
}

TEST_CASE("slot reward examples") {
  const SystemConfig c = default_config();
  EnvState prev = reset(c, 1);
  EnvState next = prev;
  next.level = {3, 2};
  next.aoi = {1, 2};
  const std::vector<int> q1{1};
  CHECK(slot_reward(prev, kIdle, next, 1.0, c) == doctest::Approx(std::sqrt(0.8)));
  CHECK(slot_reward(prev, kIdle, next, 1.0, c) == doctest::Approx(0.8944).epsilon(1e-4));
  CHECK(slot_reward(prev, q1, next, 1.0, c) == doctest::Approx(0.1873).epsilon(1e-3));
  CHECK(slot_reward(prev, q1, next, 1.0, c) ==
        doctest::Approx(std::sqrt(0.8) - std::sqrt(0.5)));
  // GoE equal to the reference.
  SystemConfig r = c;
  r.cpt.goe_ref = 1.0;
  CHECK(slot_reward(prev, kIdle, next, 0.0, r) == 0.0);
}

TEST_CASE("discounted cost equals the recomputed sum") {
  const Environment env(default_config());
  EnvState s = env.reset(9);
  Rng pick(17);
  std::vector<double> costs;
  for (int t = 0; t < 300; ++t) {
    std::vector<int> action;
    const int choice = static_cast<int>(uniform_index(pick, 3));
    if (choice > 0) action.push_back(choice);
    costs.push_back(env.step(s, action).cost);
  }
  double expected = 0.0;
  for (std::size_t t = 0; t < costs.size(); ++t) {
    if (costs[t] != 0.0) expected += std::pow(0.9, static_cast<double>(t)) * costs[t];
  }
  CHECK(s.discounted_cost == expected);
  for (double x : costs) CHECK((x == 0.0 || x == doctest::Approx(std::sqrt(0.5))));
}

TEST_CASE("certain erasure freezes knowledge and saturates AoI") {
  const SystemConfig c = load_config(R"({"agents": [{"p_erase": 1.0}]})");
  const Environment env(c);
  EnvState s = env.reset(4);
  const std::vector<int> q1{1};
  const std::vector<int> q2{2};
  for (int t = 1; t <= 50; ++t) {
    const TraceRecord r = env.step(s, t % 2 ? q1 : q2);
    CHECK_FALSE(r.queries[0].delivered);
    CHECK(s.knowledge == std::vector<int>{0, 0});
    CHECK(s.level == std::vector<int>{1, 1});
    if (t >= 3) CHECK(s.aoi == std::vector<int>{4, 4});
  }
}

TEST_CASE("oversized or foreign actions are contract violations") {
  const Environment env(default_config());
  EnvState s = env.reset(1);
  const std::vector<int> two{1, 2};
  const std::vector<int> bad{3};
  const std::vector<int> zero{0};
  CHECK_THROWS_AS(env.step(s, two), ContractError);
  CHECK_THROWS_AS(env.step(s, bad), ContractError);
  CHECK_THROWS_AS(env.step(s, zero), ContractError);

  const Environment wide(load_config(R"({"system": {"query_limit": 2}})"));
  EnvState w = wide.reset(1);
  const std::vector<int> dup{2, 2};
  CHECK_THROWS_AS(wide.step(w, dup), ContractError);
  const std::vector<int> rev{2, 1};
  const TraceRecord r = wide.step(w, rev);
  REQUIRE(r.queries.size() == 2);
  CHECK(r.queries[0].attribute == 1);
  CHECK(r.queries[1].attribute == 2);
  CHECK(r.cost == doctest::Approx(1.0));  // sqrt(2 * 0.5)
}

TEST_CASE("strict GoE zeroes stale usefulness") {
  const SystemConfig c = default_config();
  const Environment env(c);
  EnvState s = env.reset(3);
  s.knowledge = {s.truth[0], 0};
  s.level = {4, 4};
  s.aoi = {1, 1};
  CHECK(env.goe_strict(s) == doctest::Approx(1.0));
  CHECK(env.goe_total(s) == doctest::Approx(2.0));
}
