// goesched: solve, simulate and sweep goal-oriented query schedules.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/errors.hpp"
#include "goesched/gateway.hpp"
#include "goesched/harness.hpp"
#include "goesched/solver.hpp"

namespace fs = std::filesystem;
using namespace goesched;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

SystemConfig load(const std::string& path) {
  return path.empty() ? default_config() : load_config_file(path);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ValidationError("--values is empty");
  return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

int cmd_solve(const std::string& config_path, const fs::path& out_dir, bool dump_kernel) {
  const SystemConfig config = load(config_path);
  const TransitionTable table = build_transitions(config);
  const SolveReport report = bisection_solve(table, config);
  const std::string hash = config_hash(config);
  fs::create_directories(out_dir);
  {
    auto f = open_out(out_dir / "policy.csv");
    write_policy_csv(f, report.policy, report.mu_star, hash);
  }
  {
    auto f = open_out(out_dir / "solve_report.json");
    f << solve_report_json(report, hash) << '\n';
  }
  if (dump_kernel) {
    auto f = open_out(out_dir / "kernel.csv");
    write_kernel_csv(table, f);
  }
  std::printf("mu*=%.9g  cost=%.9g  budget=%.9g  objective=%.9g  policy=%s  outer=%d\n",
              report.mu_star, report.cost_value, report.budget, report.objective_value,
              report.policy.is_mixture() ? "mixture" : "deterministic", report.outer_steps);
  return report.feasible ? 0 : 3;
}

int cmd_run(const std::string& config_path, const std::string& scheduler, int seeds,
            const fs::path& out_dir, const std::string& policy_path) {
  const SystemConfig config = load(config_path);
  ResolveOptions options;
  if (!policy_path.empty()) options.policy_file = policy_path;
  const ResolvedScheduler resolved = resolve_scheduler(scheduler, config, options);
  const RunResult result = run(config, resolved, seeds);
  write_run_outputs(out_dir, result, config);
  const RunSummary& s = result.summary;
  std::printf("%s: mean cpt goe %.6f  min %.6f  queries %.2f%%  discounted cost %.6f\n",
              s.scheduler.c_str(), s.mean_cpt_goe, s.min_cpt_goe, s.query_percentage,
              s.discounted_cost);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values,
              const std::string& schedulers, int seeds, const fs::path& out_dir) {
  const SystemConfig config = load(config_path);
  const auto rows = sweep(config, axis, parse_values(values), parse_names(schedulers), seeds);
  fs::create_directories(out_dir);
  auto f = open_out(out_dir / "sweep.csv");
  write_sweep_csv(rows, f);
  for (const SweepRow& r : rows) {
    std::printf("%s=%g %-10s %-22s mean cpt goe %.6f  queries %.2f%%\n", r.axis.c_str(), r.value,
                r.scheduler.c_str(), r.status.c_str(), r.summary.mean_cpt_goe,
                r.summary.query_percentage);
  }
  return 0;
}

int cmd_gateway(const std::string& config_path, int port) {
  const SystemConfig config = load(config_path);
  if (port < 0) {
    serve(config, std::cin, std::cout);
    return 0;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  serve_tcp(
      config, static_cast<std::uint16_t>(port),
      [](std::uint16_t bound) {
        std::fprintf(stderr, "gateway listening on 127.0.0.1:%u\n", bound);
      },
      g_stop);
  return 0;
}

int cmd_validate(const std::string& config_path, std::uint64_t samples, std::uint64_t seed) {
  const SystemConfig config = load(config_path);
  const TransitionTable table = build_transitions(config);
  const AccessibilityResult acc = check_weak_accessibility(table);
  std::printf("states %zu  actions %zu  entries %zu\n", table.num_states(), table.num_actions(),
              table.num_entries());
  std::printf("weakly accessible: %s  (closed classes %zu, class size %zu, holdable outside %zu)\n",
              acc.accessible ? "yes" : "no", acc.closed_classes, acc.class_size,
              acc.holdable_outside);
  if (acc.witness) {
    std::printf("  witness: state %u cannot reach state %u\n", acc.witness->first,
                acc.witness->second);
  }
  const KernelCheck check = check_env_kernel(config, samples, seed);
  const bool ok = check.max_l1 < 0.02 && check.max_row_sum_error < 1e-9;
  std::printf("kernel rows %zu  max |row sum - 1| %.3g  max L1 %.5f at (state %u, action %d): %s\n",
              check.rows, check.max_row_sum_error, check.max_l1, check.worst_state,
              check.worst_action, ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented query scheduling: solver, simulator and experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string scheduler = "policy";
  std::string policy_path;
  int seeds = 20;
  std::string axis;
  std::string values;
  std::string schedulers = "policy,wrr,lwgf,uniform,markovian";
  int port = -1;
  bool dump_kernel = false;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
  };

  auto* solve = app.add_subcommand("solve", "Solve the CMDP; write policy.csv and solve_report.json");
  add_config(solve);
  solve->add_option("--out", out_dir, "Output directory");
  solve->add_flag("--dump-kernel", dump_kernel, "Also write kernel.csv");

  auto* run_cmd = app.add_subcommand("run", "Simulate one scheduler over several seeds");
  add_config(run_cmd);
  run_cmd->add_option("--scheduler", scheduler,
                      "policy, tabular_q, wrr, lwgf, uniform or markovian");
  run_cmd->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--policy", policy_path, "Policy CSV to run instead of solving")
      ->check(CLI::ExistingFile);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run schedulers across values of one axis");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "goe_ref, cost_flex, num_attributes or query_limit")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma-separated axis values")->required();
  sweep_cmd->add_option("--schedulers", schedulers, "Comma-separated scheduler names");
  sweep_cmd->add_option("--seeds", seeds, "Seeds per point")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  auto* gateway_cmd = app.add_subcommand("gateway", "Serve the environment over JSON lines");
  add_config(gateway_cmd);
  gateway_cmd->add_option("--port", port, "TCP port on 127.0.0.1 (stdin/stdout when omitted)")
      ->check(CLI::Range(0, 65535));

  auto* validate_cmd = app.add_subcommand("validate", "Check the kernel against the simulator");
  add_config(validate_cmd);
  validate_cmd->add_option("--samples", samples, "Simulated slots per (state, action) row");
  validate_cmd->add_option("--seed", seed, "Simulator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(config_path, out_dir, dump_kernel);
    if (*run_cmd) return cmd_run(config_path, scheduler, seeds, out_dir, policy_path);
    if (*sweep_cmd) return cmd_sweep(config_path, axis, values, schedulers, seeds, out_dir);
    if (*gateway_cmd) return cmd_gateway(config_path, port);
    if (*validate_cmd) return cmd_validate(config_path, samples, seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
