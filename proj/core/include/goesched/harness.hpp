#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goesched/config.hpp"
#include "goesched/env.hpp"
#include "goesched/schedulers.hpp"
#include "goesched/solver.hpp"

namespace goesched {

// Runs fn(0) .. fn(n - 1) on up to `threads` workers (0 = hardware
// concurrency). The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

// A scheduler ready to run, with the name reported in summaries.
struct ResolvedScheduler {
  std::string name;
  SchedulerKind kind;
};

struct ResolveOptions {
  std::optional<std::filesystem::path> policy_file;  // "policy": skip the in-process solve
  TabularQOptions tabular;
  RolloutOptions rollouts;
};

// Turns a scheduler name (policy, tabular_q, wrr, lwgf, uniform, markovian)
// into a runnable kind, solving or training as needed.
ResolvedScheduler resolve_scheduler(const std::string& name, const SystemConfig& config,
                                    const ResolveOptions& options = {});

// Slot-0 state plus one record per slot 1..T.
struct SeedTrace {
  std::uint64_t seed = 0;
  EnvState initial;
  std::vector<TraceRecord> records;
};

SeedTrace simulate(const SystemConfig& config, const SchedulerKind& kind, std::uint64_t seed);

struct RunSummary {
  std::string scheduler;
  std::vector<std::uint64_t> seeds;
  int horizon = 0;
  int query_limit = 1;
  // Per-slot v_cpt(GoE) over slots 1..T of every seed.
  double mean_cpt_goe = 0.0;
  double min_cpt_goe = 0.0;
  double max_cpt_goe = 0.0;
  double mean_goe = 0.0;
  // Per-seed means of the discounted sums from slot 1, discount gamma^(t-1).
  double discounted_objective = 0.0;
  double discounted_cost = 0.0;
  double undiscounted_cost = 0.0;  // per-seed mean of the summed slot costs
  std::uint64_t query_count = 0;   // over all seeds
  // Counts relative to seeds * T * query_limit query opportunities.
  double query_percentage = 0.0;
  double delivered_percentage = 0.0;
  double correct_percentage = 0.0;
  // Time-averaged v_cpt(GoE) of every seed, sorted.
  std::vector<double> long_term_cpt_goe;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

RunSummary summarize(const std::string& scheduler, const SystemConfig& config,
                     const std::vector<SeedTrace>& traces);

struct RunResult {
  RunSummary summary;
  std::vector<SeedTrace> traces;
};

// Seeds are config.seed + k for k in [0, num_seeds).
RunResult run(const SystemConfig& config, const ResolvedScheduler& scheduler, int num_seeds,
              unsigned threads = 0);

// Empirical CDF: sorted distinct values with fraction of samples <= value.
std::vector<std::pair<double, double>> compute_cdf(std::vector<double> samples);

void write_trace_csv(const SeedTrace& trace, const SystemConfig& config, std::ostream& out);
std::vector<TraceRecord> read_trace_csv(std::istream& in, const SystemConfig& config);
std::string summary_json(const RunSummary& summary, const std::string& config_hash);
void write_cdf_csv(const std::vector<double>& samples, std::ostream& out);

// summary.json, cdf.csv and trace_seed{K}.csv under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result,
                       const SystemConfig& config);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string scheduler;
  std::string status;  // "ok", "skipped: capacity", "skipped: unsupported"
  RunSummary summary;
};

// The config with one axis set: goe_ref, cost_flex, num_attributes or
// query_limit. Changing num_attributes resets the required sets to all
// attributes.
SystemConfig with_axis(const SystemConfig& base, const std::string& axis, double value);

std::vector<SweepRow> sweep(const SystemConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::string>& schedulers, int num_seeds,
                            const ResolveOptions& options = {}, unsigned threads = 0);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// Simulator versus kernel: every (state, action) row is sampled from a
// simulator state matching the CMDP state.
struct KernelCheck {
  std::size_t rows = 0;
  double max_l1 = 0.0;
  StateIndex worst_state = 0;
  int worst_action = 0;
  double max_row_sum_error = 0.0;
};

KernelCheck check_env_kernel(const SystemConfig& config, std::uint64_t samples_per_row,
                             std::uint64_t seed);

}  // namespace goesched
