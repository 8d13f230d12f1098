#ifndef QNMH_CONFIG_HPP
#define QNMH_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qnmh/models.hpp"
#include "qnmh/quasi_newton.hpp"
#include "qnmh/sampler.hpp"

namespace qnmh {

enum class Backend { Kalman, Particle };

// Flat key=value experiment configuration with a strict schema. Every field
// has an explicit default matching the paper's tuning constants; the resolved
// form (all keys materialized) is what lands in provenance sidecars.
struct ExperimentConfig {
  ModelKind model = ModelKind::LGSS;
  Backend backend = Backend::Kalman;
  std::string proposal = "dbfgs";
  // pmh0: 1.37 (kalman) / 1.48 (particle); pmh1: 0.57 / 0.47; qMH: 0.5.
  double eps = -1.0;  // <0: resolve from (backend, proposal)
  int memory = 20;
  double warmup_eps = 0.01;
  double delta = 1.0;
  int particles = -1;  // <0: 1000 for LGSS, 1500 for SV
  int lag = 10;
  int iters = 10000;
  int burn_in = 3000;
  int replications = 25;
  std::uint64_t seed = 1;
  std::string data;
  std::string out = ".";
  int sim_T = 500;
  std::vector<double> theta_true;  // <empty>: model default
  std::vector<double> theta_init;  // <empty>: theta_true
  std::vector<std::string> proposals;  // benchmark grid; <empty>: backend default
  int pilot_iters = 400;
  double pilot_eps = 0.1;
  double pilot_inflate = 4.0;  // conservative widening of the pilot covariance
  int bins = 50;
  int thin = 50;
  int jobs = 1;

  double resolved_eps() const;
  int resolved_particles() const;
  std::vector<double> resolved_theta_true() const;
  std::vector<double> resolved_theta_init() const;
  std::vector<std::string> resolved_proposals() const;
  ModelSpec model_spec() const { return ModelSpec{model}; }

  // Proposal token ("pmh0", "pmh1", "dbfgs", "ibfgs-flip", ...) resolved to
  // sampler settings; preconditioner left empty for the caller.
  ProposalConfig proposal_config(const std::string& token) const;

  // All keys in canonical sorted key=value form (fully resolved).
  std::string canonical() const;
  std::uint64_t hash() const;  // FNV-1a over canonical()
};

ExperimentConfig parse_config(const std::map<std::string, std::string>& kv);
ExperimentConfig load_config_file(const std::string& path);

bool is_valid_proposal_token(const std::string& token);

std::uint64_t fnv1a(const std::string& s);

}  // namespace qnmh

#endif  // QNMH_CONFIG_HPP
