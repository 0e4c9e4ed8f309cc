#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace oracle {

using goesched::SystemConfig;

SystemConfig tiny_config(double cost_flex) {
  return goesched::load_config(R"({
    "system": {"N": 1, "M": 1, "K": 1, "max_aoi": 2, "num_levels": 2},
    "attributes": [{"cardinality": 8, "alpha": 2, "beta": 5}],
    "agents": [{"p_observe": 0.8, "p_erase": 0.2}],
    "cost": {"flex": )" + std::to_string(cost_flex) + "}}");
}

int level_of(double alpha, double beta, double y, int num_levels) {
  const double density =
      std::pow(y, alpha - 1.0) * std::pow(1.0 - y, beta - 1.0) / std::beta(alpha, beta);
  const double g = std::min(1.0, density);
  return std::clamp(static_cast<int>(std::ceil(g * num_levels)), 1, num_levels);
}

double cpt_value(double x, double ref, double alpha, double beta, double lambda) {
  if (x >= ref) return std::pow(x - ref, alpha);
  return -lambda * std::pow(ref - x, beta);
}

double inverse_s(double p, double g) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return std::pow(p, g) / std::pow(std::pow(p, g) + std::pow(1.0 - p, g), 1.0 / g);
}

Mdp dense_model(const SystemConfig& c) {
  std::set<int> relevant_set;
  for (const auto& k : c.required_sets) relevant_set.insert(k.begin(), k.end());
  const std::vector<int> relevant(relevant_set.begin(), relevant_set.end());
  const int r = static_cast<int>(relevant.size());
  const int u = c.num_levels();
  const int dmax = c.max_aoi;
  const int radix = dmax * u;
  int n = 1;
  for (int i = 0; i < r; ++i) n *= radix;

  // Level pmf per relevant attribute, from grid i / (card + 1).
  std::vector<std::vector<double>> level_pmf;
  std::vector<double> success;
  for (int m : relevant) {
    const auto& attr = c.attributes[static_cast<std::size_t>(m - 1)];
    std::vector<double> pmf(static_cast<std::size_t>(u), 0.0);
    for (int i = 1; i <= attr.cardinality; ++i) {
      const double y = static_cast<double>(i) / (attr.cardinality + 1);
      pmf[static_cast<std::size_t>(level_of(attr.alpha_shape, attr.beta_shape, y, u) - 1)] +=
          attr.source_pmf[static_cast<std::size_t>(i - 1)];
    }
    level_pmf.push_back(pmf);
    double best = -1.0;
    for (const auto& agent : c.agents) {
      best = std::max(best, (1.0 - agent.erase_prob) * agent.observe_prob[static_cast<std::size_t>(m - 1)]);
    }
    success.push_back(best);
  }

  Mdp mdp;
  mdp.states = n;
  mdp.actions = r + 1;
  mdp.gamma = c.discount;
  mdp.prob.assign(static_cast<std::size_t>(n) * mdp.actions * n, 0.0);

  auto decode = [&](int s) {
    std::vector<std::pair<int, int>> t;  // (aoi, level)
    for (int i = 0; i < r; ++i) {
      const int d = s % radix;
      s /= radix;
      t.push_back({d / u + 1, d % u + 1});
    }
    return t;
  };
  auto encode = [&](const std::vector<std::pair<int, int>>& t) {
    int s = 0;
    for (int i = r - 1; i >= 0; --i) s = s * radix + (t[i].first - 1) * u + (t[i].second - 1);
    return s;
  };
  auto aged = [&](std::vector<std::pair<int, int>> t) {
    for (auto& [d, j] : t) d = std::min(d + 1, dmax);
    return t;
  };

  for (int s = 0; s < n; ++s) {
    const auto tuple = decode(s);
    const auto old = aged(tuple);
    auto at = [&](int a, int t) -> double& {
      return mdp.prob[(static_cast<std::size_t>(s) * mdp.actions + a) * n + t];
    };
    at(0, encode(old)) += 1.0;
    for (int a = 1; a <= r; ++a) {
      const double q = success[static_cast<std::size_t>(a - 1)];
      at(a, encode(old)) += 1.0 - q;
      for (int j = 1; j <= u; ++j) {
        const double pj = level_pmf[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(j - 1)];
        if (pj == 0.0) continue;
        auto next = old;
        next[static_cast<std::size_t>(a - 1)] = {1, j};
        at(a, encode(next)) += q * pj;
      }
    }
  }
  mdp.mass = mdp.prob;
  if (c.cpt.weighting == goesched::Weighting::kInverseS) {
    for (double& w : mdp.mass) {
      if (w > 0.0) w = inverse_s(std::min(w, 1.0), c.cpt.weighting_gamma);
    }
  }

  for (int s = 0; s < n; ++s) {
    double goe = 0.0;
    for (const auto& [d, j] : decode(s)) {
      const double nu = static_cast<double>(j) / u;
      goe += c.composite == goesched::GoeComposite::kProduct ? nu / d : std::min(nu, 1.0 / d);
    }
    mdp.reward.push_back(cpt_value(goe, c.cpt.goe_ref, c.cpt.alpha_gain, c.cpt.beta_loss,
                                   c.cpt.lambda_loss));
  }
  mdp.cost.push_back(0.0);
  for (int a = 1; a <= r; ++a) mdp.cost.push_back(std::pow(c.cost_per_query, c.cpt.alpha_gain));
  return mdp;
}

std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
    }
    if (a[pivot * n + col] == 0.0) throw std::runtime_error("singular system");
    if (pivot != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i * n + k] * x[k];
    x[i] = acc / a[i * n + i];
  }
  return x;
}

namespace {

// x = sum_t W(s, pi(s), t) (gain(s, a, t) + gamma x(t)).
template <typename Gain>
std::vector<double> evaluate(const Mdp& mdp, const std::vector<int>& table, Gain gain) {
  const int n = mdp.states;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    a[static_cast<std::size_t>(s) * n + s] += 1.0;
    const int act = table[static_cast<std::size_t>(s)];
    for (int t = 0; t < n; ++t) {
      const double w = mdp.weight(s, act, t);
      if (w == 0.0) continue;
      a[static_cast<std::size_t>(s) * n + t] -= mdp.gamma * w;
      b[static_cast<std::size_t>(s)] += w * gain(act, t);
    }
  }
  return solve_linear(std::move(a), std::move(b));
}

}  // namespace

std::vector<double> objective_values(const Mdp& mdp, const std::vector<int>& table) {
  return evaluate(mdp, table, [&](int, int t) { return mdp.reward[static_cast<std::size_t>(t)]; });
}

std::vector<double> cost_values(const Mdp& mdp, const std::vector<int>& table) {
  return evaluate(mdp, table, [&](int a, int) { return mdp.cost[static_cast<std::size_t>(a)]; });
}

std::vector<double> lagrangian_values(const Mdp& mdp, const std::vector<int>& table, double mu) {
  return evaluate(mdp, table, [&](int a, int t) {
    return mdp.reward[static_cast<std::size_t>(t)] - mu * mdp.cost[static_cast<std::size_t>(a)];
  });
}

std::vector<std::vector<int>> all_policies(int states, int actions) {
  std::vector<std::vector<int>> out;
  std::vector<int> table(static_cast<std::size_t>(states), 0);
  while (true) {
    out.push_back(table);
    int i = 0;
    while (i < states && ++table[static_cast<std::size_t>(i)] == actions) {
      table[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == states) break;
  }
  return out;
}

std::vector<double> best_lagrangian_values(const Mdp& mdp, double mu) {
  std::vector<double> best(static_cast<std::size_t>(mdp.states),
                           -std::numeric_limits<double>::infinity());
  for (const auto& table : all_policies(mdp.states, mdp.actions)) {
    const auto v = lagrangian_values(mdp, table, mu);
    for (std::size_t s = 0; s < v.size(); ++s) best[s] = std::max(best[s], v[s]);
  }
  return best;
}

ConstrainedOptimum best_constrained(const Mdp& mdp, double budget) {
  struct Point {
    double j;
    double c;
  };
  std::vector<Point> points;
  for (const auto& table : all_policies(mdp.states, mdp.actions)) {
    points.push_back({objective_values(mdp, table)[0], cost_values(mdp, table)[0]});
  }
  ConstrainedOptimum best{-std::numeric_limits<double>::infinity(), 0.0};
  auto consider = [&](double j, double c) {
    if (c <= budget + 1e-12 && j > best.objective) best = {j, c};
  };
  for (const Point& a : points) {
    for (const Point& b : points) {
      for (int k = 0; k <= 100; ++k) {
        const double eta = k / 100.0;
        consider(eta * a.j + (1 - eta) * b.j, eta * a.c + (1 - eta) * b.c);
      }
      if (a.c != b.c) {
        const double eta = (budget - b.c) / (a.c - b.c);
        if (eta >= 0.0 && eta <= 1.0) {
          consider(eta * a.j + (1 - eta) * b.j, budget);
        }
      }
    }
  }
  return best;
}

}  // namespace oracle
