// Command-line front end: run single policies, sweep lambda, compare all
// five algorithms on a scenario directory, and emit CSV reports.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eglb/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

struct CommonArgs {
  std::string scenario_dir;
  std::string policy = "glb-cost";
  std::vector<double> lambdas = {0.0};
  double eta = 0.0;
  std::string mode = "full";
  std::string out;
  std::string dump_allocation;
  long seed = 0;  // reserved, accepted for forward compatibility
};

eglb::GlbMode parse_mode(const std::string& mode) {
  if (mode == "full") return eglb::GlbMode::full;
  if (mode == "partial") return eglb::GlbMode::partial;
  throw CLI::ValidationError("--mode must be full or partial");
}

int cmd_validate(const CommonArgs& args) {
  const eglb::Scenario scn = eglb::load_scenario(args.scenario_dir);
  // load_scenario throws on any violation; reaching here means clean.
  std::cout << "ok: " << scn.num_dcs() << " data centers, "
            << scn.num_sources() << " sources, horizon " << scn.horizon
            << "\n";
  return kExitOk;
}

int cmd_run(const CommonArgs& args) {
  const eglb::Scenario scn = eglb::load_scenario(args.scenario_dir);
  const eglb::GlbMode mode = parse_mode(args.mode);
  const eglb::RunResult r = eglb::run_simulation(scn, args.policy,
                                                 args.lambdas.front(), args.eta,
                                                 mode);
  if (!args.out.empty()) eglb::write_results_csv(args.out, {r});
  if (!args.dump_allocation.empty()) {
    const eglb::Scenario eff =
        mode == eglb::GlbMode::full ? eglb::with_full_topology(scn) : scn;
    eglb::write_allocation_csv(args.dump_allocation, eff, r.allocation);
  }
  std::cout << eglb::summarize({r});
  return kExitOk;
}

int cmd_compare(const CommonArgs& args) {
  const eglb::Scenario scn = eglb::load_scenario(args.scenario_dir);
  const eglb::GlbMode mode = parse_mode(args.mode);
  std::vector<eglb::RunResult> results;
  for (const std::string& policy : eglb::table_policy_order())
    results.push_back(eglb::run_simulation(scn, policy, args.lambdas.front(),
                                           args.eta, mode));
  if (!args.out.empty()) eglb::write_results_csv(args.out, results);
  std::cout << eglb::summarize(results);
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
  const eglb::Scenario scn = eglb::load_scenario(args.scenario_dir);
  const eglb::GlbMode mode = parse_mode(args.mode);
  std::vector<eglb::RunResult> results;
  for (double lambda : args.lambdas)
    results.push_back(
        eglb::run_simulation(scn, args.policy, lambda, args.eta, mode));
  for (std::size_t k = 1; k < results.size(); ++k) {
    if (results[k].lambda < results[k - 1].lambda) continue;
    if (results[k].objective.equity_term >
        results[k - 1].objective.equity_term + 1e-6)
      std::cerr << "warning: equity_term increased from lambda "
                << results[k - 1].lambda << " to " << results[k].lambda << "\n";
    if (results[k].objective.cost_term <
        results[k - 1].objective.cost_term - 1e-6)
      std::cerr << "warning: cost_term decreased from lambda "
                << results[k - 1].lambda << " to " << results[k].lambda << "\n";
  }
  if (!args.out.empty()) eglb::write_results_csv(args.out, results);
  std::cout << eglb::summarize(results);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equity-aware geographical load balancing simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool needs_policy) {
    sub->add_option("--scenario", args.scenario_dir, "Scenario directory")
        ->required();
    if (needs_policy)
      sub->add_option("--policy", args.policy,
                      "glb-cost | glb-carbon | glb-dist | eglb-off | eglb");
    sub->add_option("--lambda", args.lambdas, "Equity weight (repeatable for sweep)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--eta", args.eta, "Mirror-descent step size (0 = auto)");
    sub->add_option("--mode", args.mode, "full | partial");
    sub->add_option("--out", args.out, "Results CSV path");
    sub->add_option("--dump-allocation", args.dump_allocation,
                    "Allocation dump CSV path");
    sub->add_option("--seed", args.seed, "Reserved");
  };

  CLI::App* run = app.add_subcommand("run", "Run one policy");
  add_common(run, true);
  CLI::App* compare =
      app.add_subcommand("compare", "Run all five algorithms");
  add_common(compare, false);
  CLI::App* sweep = app.add_subcommand("sweep", "Run one policy per lambda");
  add_common(sweep, true);
  CLI::App* validate = app.add_subcommand("validate", "Check a scenario");
  validate->add_option("--scenario", args.scenario_dir, "Scenario directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(args);
    if (run->parsed()) return cmd_run(args);
    if (compare->parsed()) return cmd_compare(args);
    if (sweep->parsed()) return cmd_sweep(args);
  } catch (const eglb::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const eglb::ScenarioIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
