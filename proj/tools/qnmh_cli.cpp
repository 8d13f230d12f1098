#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "qnmh/cli_lib.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

qnmh::ExperimentConfig load_config(const CommonArgs& args) {
  qnmh::ExperimentConfig cfg = args.config_path.empty()
                                   ? qnmh::parse_config({})
                                   : qnmh::load_config_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  if (args.jobs > 0) cfg.jobs = args.jobs;
  return cfg;
}

void print_error(const std::string& command, const std::string& what) {
  nlohmann::json err;
  err["error"] = what;
  if (!command.empty()) err["command"] = command;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-Newton Metropolis-Hastings toolkit for state-space models"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;

  const std::pair<const char*, const char*> subs[] = {
      {"simulate", "Simulate a synthetic dataset and write it as CSV"},
      {"ingest-bitcoin", "Convert a date,close price CSV into log-returns"},
      {"run", "Run a single chain and write trace, metrics and histograms"},
      {"benchmark", "Run the proposal grid with replications; emit a report"},
      {"sv-casestudy", "SV-with-leverage posterior and smoothed volatility path"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", args.config_path, "experiment config file (key=value lines)");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&args](std::uint64_t s) {
          args.seed = s;
          args.seed_set = true;
        },
        "seed override");
    sub->add_option("--out", args.out, "output directory override");
    sub->add_option("--jobs", args.jobs, "parallel jobs (sets the OpenMP thread count)")
        ->check(CLI::PositiveNumber);
    sub->callback([&command, name = std::string(name)] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(command, e.what());
    return e.get_exit_code() != 0 ? e.get_exit_code() : 1;
  }

  try {
    const qnmh::ExperimentConfig cfg = load_config(args);
#ifdef _OPENMP
    omp_set_num_threads(std::max(1, cfg.jobs));
#endif
    if (command == "simulate") {
      qnmh::cmd_simulate(cfg);
    } else if (command == "ingest-bitcoin") {
      qnmh::cmd_ingest_bitcoin(cfg);
    } else if (command == "run") {
      qnmh::cmd_run(cfg);
    } else if (command == "benchmark") {
      qnmh::cmd_benchmark(cfg);
    } else if (command == "sv-casestudy") {
      qnmh::cmd_sv_casestudy(cfg);
    }
    return 0;
  } catch (const std::exception& e) {
    print_error(command, e.what());
    return 1;
  }
}
