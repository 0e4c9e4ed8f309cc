#include "goesched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "goesched/cmdp.hpp"
#include "goesched/errors.hpp"

namespace goesched {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw IoError("trace line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

long long parse_int(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw IoError("trace line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

// Idle slots are written as a single 0; several queries as a;b;c.
std::vector<long long> parse_list(const std::string& s, int line_no) {
  std::vector<long long> out;
  for (const auto& part : split(s, ';')) out.push_back(parse_int(part, line_no));
  return out;
}

template <typename F>
std::string join_queries(const TraceRecord& r, F field) {
  if (r.queries.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < r.queries.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(field(r.queries[i]));
  }
  return out;
}

bool needs_state_space(const SchedulerKind& kind) {
  return std::holds_alternative<sched::PolicyRule>(kind) ||
         std::holds_alternative<sched::TabularQ>(kind);
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ResolvedScheduler resolve_scheduler(const std::string& name, const SystemConfig& config,
                                    const ResolveOptions& options) {
  if (name == "policy") {
    if (options.policy_file) {
      const PolicyFile file = read_policy_file(options.policy_file->string());
      const StateSpace space = build_state_space(config);
      validate_policy(file.policy, space.size(), space.num_actions());
      const std::string hash = config_hash(config);
      if (!file.config_hash.empty() && file.config_hash != hash) {
        throw ValidationError("policy file was computed for config " + file.config_hash +
                              ", not " + hash);
      }
      return {name, sched::PolicyRule{file.policy}};
    }
    const TransitionTable table = build_transitions(config);
    SolveReport report = bisection_solve(table, config);
    return {name, sched::PolicyRule{std::move(report.policy)}};
  }
  if (name == "tabular_q") {
    TabularQSolve solved =
        tabular_q_solve(config, options.tabular, options.rollouts, config.seed);
    return {name, sched::PolicyRule{std::move(solved.bisection.policy)}};
  }
  return {name, benchmark_kind(name, config)};
}

SeedTrace simulate(const SystemConfig& config, const SchedulerKind& kind, std::uint64_t seed) {
  const Environment env(config);
  std::optional<StateSpace> space;
  if (needs_state_space(kind)) space.emplace(build_state_space(config));
  auto scheduler = make_scheduler(kind, config);
  Rng rng(mix_seed(seed, 0x5c4ed));

  SeedTrace trace;
  trace.seed = seed;
  EnvState state = env.reset(seed);
  trace.initial = state;
  trace.records.reserve(static_cast<std::size_t>(config.horizon));
  for (int t = 0; t < config.horizon; ++t) {
    const Observation obs = observe(env, state, space ? &*space : nullptr);
    const std::vector<int> action = scheduler->decide(obs, static_cast<std::uint64_t>(t), rng);
    trace.records.push_back(env.step(state, action));
  }
  return trace;
}

RunSummary summarize(const std::string& scheduler, const SystemConfig& config,
                     const std::vector<SeedTrace>& traces) {
  if (traces.empty()) throw DomainError("no traces to summarize");
  RunSummary s;
  s.scheduler = scheduler;
  s.horizon = config.horizon;
  s.query_limit = config.query_limit;
  s.min_cpt_goe = std::numeric_limits<double>::infinity();
  s.max_cpt_goe = -std::numeric_limits<double>::infinity();

  double sum_cpt = 0.0;
  double sum_goe = 0.0;
  std::size_t slots = 0;
  std::uint64_t delivered = 0;
  std::uint64_t correct = 0;
  for (const SeedTrace& tr : traces) {
    s.seeds.push_back(tr.seed);
    double seed_cpt = 0.0;
    double disc_obj = 0.0;
    double disc_cost = 0.0;
    double cost = 0.0;
    double factor = 1.0;
    for (const TraceRecord& r : tr.records) {
      seed_cpt += r.cpt_goe;
      sum_goe += r.goe;
      s.min_cpt_goe = std::min(s.min_cpt_goe, r.cpt_goe);
      s.max_cpt_goe = std::max(s.max_cpt_goe, r.cpt_goe);
      disc_obj += factor * r.cpt_goe;
      disc_cost += factor * r.cost;
      cost += r.cost;
      factor *= config.discount;
      s.query_count += static_cast<std::uint64_t>(r.num_queries());
      for (const QueryOutcome& q : r.queries) {
        delivered += q.delivered ? 1 : 0;
        correct += (q.delivered && q.correct) ? 1 : 0;
      }
    }
    sum_cpt += seed_cpt;
    slots += tr.records.size();
    s.long_term_cpt_goe.push_back(tr.records.empty() ? 0.0 : seed_cpt / static_cast<double>(tr.records.size()));
    s.discounted_objective += disc_obj;
    s.discounted_cost += disc_cost;
    s.undiscounted_cost += cost;
  }
  const auto n = static_cast<double>(traces.size());
  s.discounted_objective /= n;
  s.discounted_cost /= n;
  s.undiscounted_cost /= n;
  if (slots > 0) {
    s.mean_cpt_goe = sum_cpt / static_cast<double>(slots);
    s.mean_goe = sum_goe / static_cast<double>(slots);
    const double opportunities = static_cast<double>(slots) * config.query_limit;
    s.query_percentage = 100.0 * static_cast<double>(s.query_count) / opportunities;
    s.delivered_percentage = 100.0 * static_cast<double>(delivered) / opportunities;
    s.correct_percentage = 100.0 * static_cast<double>(correct) / opportunities;
  } else {
    s.min_cpt_goe = s.max_cpt_goe = 0.0;
  }
  std::sort(s.long_term_cpt_goe.begin(), s.long_term_cpt_goe.end());
  return s;
}

RunResult run(const SystemConfig& config, const ResolvedScheduler& scheduler, int num_seeds,
              unsigned threads) {
  if (num_seeds < 1) throw DomainError("num_seeds must be >= 1");
  validate(config);
  RunResult result;
  result.traces.resize(static_cast<std::size_t>(num_seeds));
  parallel_for(
      result.traces.size(),
      [&](std::size_t k) {
        result.traces[k] = simulate(config, scheduler.kind, config.seed + k);
      },
      threads);
  result.summary = summarize(scheduler.name, config, result.traces);
  return result;
}

std::vector<std::pair<double, double>> compute_cdf(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("empirical CDF of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  std::vector<std::pair<double, double>> cdf;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double frac = static_cast<double>(i + 1) / n;
    if (!cdf.empty() && cdf.back().first == samples[i]) {
      cdf.back().second = frac;
    } else {
      cdf.emplace_back(samples[i], frac);
    }
  }
  return cdf;
}

void write_trace_csv(const SeedTrace& trace, const SystemConfig& config, std::ostream& out) {
  const int m = config.num_attributes;
  out << "t,action,agent,delivered,correct,goe,cpt_goe,cost";
  for (int i = 1; i <= m; ++i) out << ",delta_" << i;
  for (int i = 1; i <= m; ++i) out << ",u_" << i;
  out << ",goe_strict\n";
  for (const TraceRecord& r : trace.records) {
    out << r.t << ',' << join_queries(r, [](const QueryOutcome& q) { return q.attribute; })
        << ',' << join_queries(r, [](const QueryOutcome& q) { return q.agent; }) << ','
        << join_queries(r, [](const QueryOutcome& q) { return q.delivered ? 1 : 0; }) << ','
        << join_queries(r, [](const QueryOutcome& q) { return q.correct ? 1 : 0; }) << ','
        << fmt17(r.goe) << ',' << fmt17(r.cpt_goe) << ',' << fmt17(r.cost);
    for (int a : r.aoi) out << ',' << a;
    for (double u : r.usefulness) out << ',' << fmt17(u);
    out << ',' << fmt17(r.goe_strict) << '\n';
  }
  if (!out) throw IoError("failed to write trace");
}

std::vector<TraceRecord> read_trace_csv(std::istream& in, const SystemConfig& config) {
  const auto m = static_cast<std::size_t>(config.num_attributes);
  const std::size_t columns = 8 + 2 * m + 1;
  std::vector<TraceRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("t,action", 0) != 0) throw IoError("trace has no header");
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != columns) {
      throw IoError("trace line " + std::to_string(line_no) + ": expected " +
                    std::to_string(columns) + " columns");
    }
    TraceRecord r;
    r.t = static_cast<std::uint64_t>(parse_int(cells[0], line_no));
    const auto attrs = parse_list(cells[1], line_no);
    if (!(attrs.size() == 1 && attrs[0] == 0)) {
      const auto agents = parse_list(cells[2], line_no);
      const auto delivered = parse_list(cells[3], line_no);
      const auto correct = parse_list(cells[4], line_no);
      if (agents.size() != attrs.size() || delivered.size() != attrs.size() ||
          correct.size() != attrs.size()) {
        throw IoError("trace line " + std::to_string(line_no) + ": ragged query lists");
      }
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        QueryOutcome q;
        q.attribute = static_cast<int>(attrs[i]);
        q.agent = static_cast<int>(agents[i]);
        q.delivered = delivered[i] != 0;
        q.correct = correct[i] != 0;
        r.queries.push_back(q);
      }
    }
    r.goe = parse_double(cells[5], line_no);
    r.cpt_goe = parse_double(cells[6], line_no);
    r.cost = parse_double(cells[7], line_no);
    for (std::size_t i = 0; i < m; ++i) r.aoi.push_back(static_cast<int>(parse_int(cells[8 + i], line_no)));
    for (std::size_t i = 0; i < m; ++i) r.usefulness.push_back(parse_double(cells[8 + m + i], line_no));
    r.goe_strict = parse_double(cells[8 + 2 * m], line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::string summary_json(const RunSummary& s, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["scheduler"] = s.scheduler;
  j["config_hash"] = config_hash;
  j["seeds"] = s.seeds;
  j["horizon"] = s.horizon;
  j["query_limit"] = s.query_limit;
  j["mean_cpt_goe"] = s.mean_cpt_goe;
  j["min_cpt_goe"] = s.min_cpt_goe;
  j["max_cpt_goe"] = s.max_cpt_goe;
  j["mean_goe"] = s.mean_goe;
  j["discounted_objective"] = s.discounted_objective;
  j["discounted_cost"] = s.discounted_cost;
  j["undiscounted_cost"] = s.undiscounted_cost;
  j["query_count"] = s.query_count;
  j["query_percentage"] = s.query_percentage;
  j["delivered_percentage"] = s.delivered_percentage;
  j["correct_percentage"] = s.correct_percentage;
  j["long_term_cpt_goe"] = s.long_term_cpt_goe;
  return j.dump(2) + "\n";
}

void write_cdf_csv(const std::vector<double>& samples, std::ostream& out) {
  out << "value,fraction\n";
  for (const auto& [v, f] : compute_cdf(samples)) out << fmt17(v) << ',' << fmt17(f) << '\n';
}

void write_run_outputs(const std::filesystem::path& dir, const RunResult& result,
                       const SystemConfig& config) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("summary.json");
    f << summary_json(result.summary, config_hash(config));
  }
  {
    auto f = open("cdf.csv");
    write_cdf_csv(result.summary.long_term_cpt_goe, f);
  }
  for (const SeedTrace& tr : result.traces) {
    auto f = open("trace_seed" + std::to_string(tr.seed) + ".csv");
    write_trace_csv(tr, config, f);
  }
}

SystemConfig with_axis(const SystemConfig& base, const std::string& axis, double value) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(to_json(base));
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1.0 || value > 1e6) {
      throw ValidationError(std::string(what) + " must be a positive integer");
    }
    return static_cast<int>(value);
  };
  if (axis == "goe_ref") {
    doc["cpt"]["goe_ref"] = value;
  } else if (axis == "cost_flex") {
    doc["cost"]["flex"] = value;
  } else if (axis == "query_limit") {
    doc["system"]["query_limit"] = as_int("query_limit");
  } else if (axis == "num_attributes") {
    const int m = as_int("num_attributes");
    doc["system"]["M"] = m;
    auto& attrs = doc["attributes"];
    if (attrs.size() > static_cast<std::size_t>(m)) {
      attrs.erase(attrs.begin() + m, attrs.end());
    }
    for (auto& agent : doc["agents"]) {
      auto& po = agent["p_observe"];
      if (po.size() > static_cast<std::size_t>(m)) po.erase(po.begin() + m, po.end());
    }
    doc["goals"].erase("required_sets");
    if (doc["scheduler"]["weights"].size() != static_cast<std::size_t>(m)) {
      doc["scheduler"]["weights"] = nlohmann::ordered_json::array();
    }
  } else {
    throw ValidationError("unknown sweep axis '" + axis +
                          "' (goe_ref, cost_flex, num_attributes, query_limit)");
  }
  return load_config(doc.dump());
}

std::vector<SweepRow> sweep(const SystemConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::string>& schedulers, int num_seeds,
                            const ResolveOptions& options, unsigned threads) {
  std::vector<SystemConfig> configs;
  for (double v : values) configs.push_back(with_axis(base, axis, v));
  std::vector<SweepRow> rows(values.size() * schedulers.size());
  parallel_for(
      rows.size(),
      [&](std::size_t i) {
        const std::size_t vi = i / schedulers.size();
        const std::string& name = schedulers[i % schedulers.size()];
        const SystemConfig& cfg = configs[vi];
        SweepRow& row = rows[i];
        row.axis = axis;
        row.value = values[vi];
        row.scheduler = name;
        row.summary.scheduler = name;
        if ((name == "policy" || name == "tabular_q") && cfg.query_limit > 1) {
          row.status = "skipped: unsupported";
          return;
        }
        try {
          const ResolvedScheduler resolved = resolve_scheduler(name, cfg, options);
          row.summary = run(cfg, resolved, num_seeds, 1).summary;
          row.status = "ok";
        } catch (const CapacityError&) {
          row.status = "skipped: capacity";
        }
      },
      threads);
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "axis,value,scheduler,status,num_seeds,mean_cpt_goe,min_cpt_goe,max_cpt_goe,mean_goe,"
         "discounted_objective,discounted_cost,undiscounted_cost,query_count,query_percentage,"
         "delivered_percentage,correct_percentage\n";
  for (const SweepRow& r : rows) {
    const RunSummary& s = r.summary;
    out << r.axis << ',' << fmt17(r.value) << ',' << r.scheduler << ',' << r.status << ','
        << s.seeds.size() << ',' << fmt17(s.mean_cpt_goe) << ',' << fmt17(s.min_cpt_goe) << ','
        << fmt17(s.max_cpt_goe) << ',' << fmt17(s.mean_goe) << ','
        << fmt17(s.discounted_objective) << ',' << fmt17(s.discounted_cost) << ','
        << fmt17(s.undiscounted_cost) << ',' << s.query_count << ','
        << fmt17(s.query_percentage) << ',' << fmt17(s.delivered_percentage) << ','
        << fmt17(s.correct_percentage) << '\n';
  }
}

KernelCheck check_env_kernel(const SystemConfig& config, std::uint64_t samples_per_row,
                             std::uint64_t seed) {
  if (samples_per_row == 0) throw DomainError("samples_per_row must be positive");
  const TransitionTable table = build_transitions(config);
  const StateSpace& space = table.space();
  const Environment env(config);
  EnvState state = env.reset(seed);
  KernelCheck out;
  std::vector<std::uint64_t> counts;
  std::vector<int> action;

  for (StateIndex s = 0; s < space.size(); ++s) {
    const CmdpState cs = space.decode(s);
    for (int a = 0; a < static_cast<int>(space.num_actions()); ++a) {
      const auto row = table.row(s, a);
      double mass = 0.0;
      for (const Transition& tr : row) mass += tr.probability;
      out.max_row_sum_error = std::max(out.max_row_sum_error, std::abs(mass - 1.0));

      action.clear();
      if (a > 0) action.push_back(space.attribute_for_action(a));
      counts.assign(row.size() + 1, 0);
      for (std::uint64_t k = 0; k < samples_per_row; ++k) {
        for (std::size_t i = 0; i < space.attributes().size(); ++i) {
          const auto m = static_cast<std::size_t>(space.attributes()[i] - 1);
          state.aoi[m] = cs.aoi[i];
          state.level[m] = cs.level[i];
        }
        env.advance(state, action, nullptr);
        const StateIndex next = space.encode(state);
        std::size_t slot = 0;
        while (slot < row.size() && row[slot].next != next) ++slot;
        ++counts[slot];  // slot == row.size() collects successors the kernel lacks
      }
      const auto n = static_cast<double>(samples_per_row);
      double l1 = static_cast<double>(counts[row.size()]) / n;
      for (std::size_t i = 0; i < row.size(); ++i) {
        l1 += std::abs(static_cast<double>(counts[i]) / n - row[i].probability);
      }
      ++out.rows;
      if (l1 > out.max_l1) {
        out.max_l1 = l1;
        out.worst_state = s;
        out.worst_action = a;
      }
    }
  }
  return out;
}

}  // namespace goesched
