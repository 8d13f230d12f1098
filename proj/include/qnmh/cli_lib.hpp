#ifndef QNMH_CLI_LIB_HPP
#define QNMH_CLI_LIB_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qnmh/config.hpp"
#include "qnmh/diagnostics.hpp"
#include "qnmh/io.hpp"
#include "qnmh/sampler.hpp"
#include "qnmh/smc.hpp"
#include "qnmh/targets.hpp"

namespace qnmh {

// One proposal token of a benchmark grid, summarized across the replications
// that finished; failures recorded per replication, never fatal to the grid.
struct BenchmarkCell {
  std::string proposal;
  MetricsReport metrics;
  int n_ok = 0;
  std::vector<std::string> errors;
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;
};

// Each command consumes a parsed config, writes its artifacts (plus JSON
// provenance) under config.out, and returns the paths written, primary
// artifact first.
std::vector<std::string> cmd_simulate(const ExperimentConfig& config);
std::vector<std::string> cmd_ingest_bitcoin(const ExperimentConfig& config);
std::vector<std::string> cmd_run(const ExperimentConfig& config);
std::vector<std::string> cmd_benchmark(const ExperimentConfig& config,
                                       BenchmarkReport* report_out = nullptr);
std::vector<std::string> cmd_sv_casestudy(const ExperimentConfig& config);

// ---- shared machinery (exposed for tests) ----------------------------------

// Posterior target for (config.backend, data).
std::unique_ptr<Target> make_target(const ExperimentConfig& config, const DataSet& data);

// One pMH0 identity-covariance pilot chain; returns the sample covariance of
// the latter half of its states (the preconditioner the pMH* rows consume).
Eigen::MatrixXd run_pilot(const Target& target, const ExperimentConfig& config,
                          const Eigen::VectorXd& theta0_bar, std::uint64_t seed);

// Full chain for one proposal token; precond enters pmh0/pmh1 only.
ChainTrace run_one_chain(const Target& target, const ExperimentConfig& config,
                         const std::string& token, const Eigen::MatrixXd& precond,
                         std::uint64_t seed);

std::uint64_t pilot_seed(std::uint64_t base);
std::uint64_t replication_seed(std::uint64_t base, int cell, int rep);

// Fixed-lag smoothed mean/variance of x_t from a kept PF history: weights at
// tau = min(t+lag, T), genealogy traced back to t.
void smoothed_state_moments(const ParticleSystem& ps, int lag,
                            std::vector<double>& mean, std::vector<double>& var);

}  // namespace qnmh

#endif  // QNMH_CLI_LIB_HPP
