#ifndef QNMH_SAMPLER_HPP
#define QNMH_SAMPLER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "qnmh/quasi_newton.hpp"
#include "qnmh/rng.hpp"

namespace qnmh {

// Joint evaluation of the log-target (and optionally its gradient) at an
// unconstrained point. eval_seed drives stochastic backends; deterministic
// backends ignore it. ok=false marks a backend failure (particle collapse,
// invalid noise covariance), which the chain treats as a zero-density
// candidate and flags.
class Target {
 public:
  struct Eval {
    double logpost = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    bool ok = true;
  };

  virtual ~Target() = default;
  virtual int dim() const = 0;
  virtual Eval evaluate(const Eigen::VectorXd& theta_bar, std::uint64_t eval_seed,
                        bool need_gradient) const = 0;
};

struct ProposalConfig {
  enum class Kind { pMH0, pMH1, qMH };
  Kind kind = Kind::pMH0;
  double eps = 1.0;
  Eigen::MatrixXd precond;  // pMH*: proposal covariance eps^2 * precond

  // qMH settings
  QnStrategy strategy = QnStrategy::dBFGS;
  Correction correction = Correction::Flip;
  int memory = 20;
  double delta = 1.0;
  double warmup_eps = 0.01;
};

struct ChainIter {
  Eigen::VectorXd theta;  // state after this iteration, unconstrained
  double logpost = 0.0;
  Eigen::VectorXd grad;   // empty when the backend was not asked for it
  Eigen::VectorXd candidate;
  bool accepted = false;
  bool corrected = false;   // qMH curvature correction applied this iteration
  bool fallback = false;    // delta*I fallback proposal used
  bool backend_failed = false;
  double time_us = 0.0;
};

struct ChainTrace {
  Eigen::VectorXd theta0;
  std::vector<ChainIter> iters;
  int warmup = 0;   // iterations using the warmup random walk (qMH: M)
  int burn_in = 0;
};

// accept iff log u <= min(0, (logpi_cand - logpi_cur) + (logq_rev - logq_fwd));
// -inf candidates always reject, -inf current always accepts.
bool mh_accept(double logpi_cand, double logpi_cur, double logq_rev, double logq_fwd,
               double u);

// Candidate draw for the first-order proposals:
// pMH1: N(theta + (eps^2/2) P G(theta), eps^2 P); pMH0 the same with G = 0.
struct PmhProposal {
  Eigen::VectorXd draw;
  double logq_fwd = 0.0;
};
PmhProposal pmh_propose(const Eigen::VectorXd& theta_bar, const Eigen::VectorXd& grad,
                        const ProposalConfig& cfg, RngStream& rng);
double pmh_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& center,
                  const Eigen::VectorXd& grad_at_center, const ProposalConfig& cfg);

ChainTrace run_chain(const Target& target, const ProposalConfig& proposal,
                     const Eigen::VectorXd& theta0, int K, int burn_in,
                     std::uint64_t seed);

// Sample covariance of the trace states from `begin` on (default: latter
// half), jittered to SPD. Throws when fewer than 2 distinct states exist.
Eigen::MatrixXd pilot_preconditioner(const ChainTrace& trace, int begin = -1);

}  // namespace qnmh

#endif  // QNMH_SAMPLER_HPP
