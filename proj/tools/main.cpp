// driftlab command line: runs one experiment and writes runs.csv + summary.json.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/harness/config.hpp"
#include "driftlab/harness/experiments.hpp"
#include "driftlab/harness/report.hpp"
#include "driftlab/harness/selftest.hpp"

namespace dh = driftlab::harness;

namespace {

struct ExpArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

int run(dh::ExperimentId id, const ExpArgs& args) {
  dh::ExperimentConfig cfg =
      args.config.empty() ? dh::default_config(id) : dh::load_config(args.config, id);
  dh::apply_seed_overrides(cfg, args.seed);
  if (!args.out.empty()) cfg.out = args.out;
  if (args.workers) cfg.workers = *args.workers;
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const dh::ExperimentOutput out = dh::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  dh::write_outputs(out, cfg.out);

  nlohmann::json brief = out.summary;
  brief.erase("config");
  brief.erase("config_means");
  std::cout << brief.dump(2) << "\n";
  std::cerr << dh::to_string(id) << ": " << out.runs.size() << " runs in " << secs << " s; wrote "
            << cfg.out << "/runs.csv and " << cfg.out << "/summary.json\n";
  return 0;
}

int selftest() {
  int failed = 0;
  for (const auto& c : dh::run_selftest()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    failed += c.passed ? 0 : 1;
  }
  std::cout << (failed ? "selftest failed: " + std::to_string(failed) + " check(s)\n"
                       : std::string("selftest passed\n"));
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift-feedback learning simulations"};
  app.require_subcommand(1);

  ExpArgs args;
  for (const char* name : {"exp1", "exp2", "exp3", "exp4"}) {
    auto* sub = app.add_subcommand(name, std::string("Run ") + name);
    sub->add_option("-c,--config", args.config, "JSON config (defaults are used when omitted)");
    sub->add_option("-o,--out", args.out, "Output directory (overrides the config)");
    sub->add_option("-s,--seed", args.seed, "Master seed (overrides DRIFTLAB_SEED and the config)");
    sub->add_option("-w,--workers", args.workers, "Worker threads")->check(CLI::PositiveNumber);
  }
  app.add_subcommand("selftest", "Run the closed-form oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "selftest") return selftest();
    return run(dh::parse_experiment_id(sub->get_name()), args);
  } catch (const driftlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
