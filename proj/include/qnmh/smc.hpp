#ifndef QNMH_SMC_HPP
#define QNMH_SMC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnmh/models.hpp"

namespace qnmh {

enum class Exec { Auto, Serial, OpenMP };

// Resolves Auto to OpenMP when compiled with OpenMP and more than one thread
// is available, Serial otherwise.
Exec resolve_exec(Exec exec);

class ParticleCollapse : public std::runtime_error {
 public:
  explicit ParticleCollapse(int t)
      : std::runtime_error("particle filter collapse (all weights zero) at t=" +
                           std::to_string(t)),
        t(t) {}
  int t;
};

struct ParticleSystem {
  int N = 0, T = 0;
  double loglik = 0.0;
  std::vector<double> step_loglik;  // log p(y_t | y_{1:t-1}) estimates, t = 1..T

  // Full history, populated when keep_history is set. Row t-1 holds time t.
  bool has_history = false;
  std::vector<double> states;    // T*N
  std::vector<double> weights;   // T*N, normalized per row
  std::vector<int> ancestors;    // (T-1)*N; row t-2 maps time-t particles to t-1
  std::vector<double> exp_negx;  // T*N, SV only: exp(-x) cache for score terms

  double state(int t, int i) const { return states[(t - 1) * N + i]; }
  double weight(int t, int i) const { return weights[(t - 1) * N + i]; }
  int ancestor(int t, int i) const { return ancestors[(t - 2) * N + i]; }
};

struct PfConfig {
  int N = 1000;
  bool keep_history = false;
  Exec exec = Exec::Auto;
};

// Systematic resampling: positions (k+u)/N against the cumulative weights.
// Count of index i is floor(N w_i) or ceil(N w_i).
std::vector<int> systematic_resample(const std::vector<double>& weights, double u);

// Bootstrap particle filter: propagate from the transition density, weight by
// g(y_t | x_t), systematic resampling every step. Bit-reproducible for a fixed
// seed regardless of Exec policy.
ParticleSystem bootstrap_pf(const ModelSpec& model, const ParameterVector& theta_natural,
                            const DataSet& data, const PfConfig& cfg, std::uint64_t seed);

struct ScoreResult {
  double loglik = 0.0;     // particle log-likelihood estimate
  Eigen::VectorXd grad;    // estimate of grad log_target, unconstrained coords
};

// Fixed-lag smoother estimate of the score via Fisher's identity: smoothed
// expectations of the complete-data score increments, genealogy traced back
// from tau = min(t+lag, T). Prior and Jacobian gradients enter exactly.
ScoreResult fixed_lag_score(const ModelSpec& model, const ParameterVector& theta_bar,
                            const DataSet& data, const PfConfig& cfg, int lag,
                            std::uint64_t seed);

}  // namespace qnmh

#endif  // QNMH_SMC_HPP
