#ifndef QNMH_QUASI_NEWTON_HPP
#define QNMH_QUASI_NEWTON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "qnmh/rng.hpp"

namespace qnmh {

// One chain iterate with its log-target value and gradient, all in
// unconstrained coordinates.
struct MemoryEntry {
  Eigen::VectorXd theta;
  Eigen::VectorXd grad;
  double logpost = 0.0;
  std::int64_t iter = -1;
};

// Ring buffer over the last M chain iterates (psi_{k,M}).
class GradientMemory {
 public:
  explicit GradientMemory(int capacity) : capacity_(capacity) {}

  void push(MemoryEntry e) {
    entries_.push_back(std::move(e));
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
  }

  const std::deque<MemoryEntry>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  // Oldest entry = theta_{k-M}, the proposal anchor.
  const MemoryEntry& oldest() const { return entries_.front(); }

 private:
  int capacity_;
  std::deque<MemoryEntry> entries_;
};

enum class QnStrategy { dBFGS, iBFGS, eBFGS };
enum class Correction { None, Flip, Reg, Hyb };

struct CurvatureEstimate {
  Eigen::MatrixXd B;  // SPD approximation of the negative log-target Hessian
  bool damped_used = false;
  Correction corrected = Correction::None;
  bool fallback_identity = false;
  double lambda_min = 0.0;  // smallest eigenvalue before any correction
};

struct CurvatureOptions {
  QnStrategy strategy = QnStrategy::dBFGS;
  Correction correction = Correction::Flip;  // applied by iBFGS/eBFGS when needed
  // H0 scale and fallback precision. Directions the pairs span get secant
  // curvature regardless of this value; it only lingers along unexplored
  // directions, so a unit scale keeps those steps at eps.
  double delta = 1.0;
  const Eigen::MatrixXd* sigma_emp = nullptr;  // posterior covariance, hyb only
};

// Duplicate iterates removed (exact equality — MH rejections repeat states
// bit-identically), survivors sorted ascending by log-target value.
std::vector<MemoryEntry> extract_sorted_unique(const GradientMemory& memory);

// Rank-2 update B' = (I - rho z s^T) B (I - rho s z^T) + rho z z^T with
// rho = 1/(s^T z); satisfies the secant condition B' s = z.
// nullopt when |s^T z| < 1e-12 |s||z| (skip-update signal).
std::optional<Eigen::MatrixXd> bfgs_update(const Eigen::MatrixXd& B,
                                           const Eigen::VectorXd& s,
                                           const Eigen::VectorXd& z);

struct DampedUpdate {
  Eigen::MatrixXd B;
  bool damped = false;  // beta < 1 was required
};

// Damped BFGS: z is replaced by r = beta z + (1-beta) B s with beta chosen so
// s^T r >= 0.2 s^T B s, which keeps B' SPD for any (s != 0, z).
// nullopt only when s = 0.
std::optional<DampedUpdate> damped_bfgs_update(const Eigen::MatrixXd& B,
                                               const Eigen::VectorXd& s,
                                               const Eigen::VectorXd& z);

// Appendix-style corrections for indefinite estimates. flip: Q|Lambda|Q^T;
// reg: B - 2 lambda_min I when lambda_min < 0; hyb: Sigma_emp^{-1}.
// A flip hitting a zero eigenvalue gets a delta*I jitter.
Eigen::MatrixXd correct_curvature(const Eigen::MatrixXd& B, Correction method,
                                  const Eigen::MatrixXd* sigma_emp, double delta);

// Runs the per-strategy recursion over the sorted unique pairs (s_l, z_l)
// from H0 = delta*I, then forms Sigma_QN. The damped recursion blends each
// raw pair toward the current estimate far enough to stay positive definite,
// so its output already has proposal-precision sign and needs no correction.
// iBFGS/eBFGS run the recursion literally (the curvature condition fails on
// a concave target), negate at the end, and correct indefiniteness; eBFGS
// additionally skips pairs with s'z <= 0 before negating.
CurvatureEstimate build_curvature(const GradientMemory& memory, const CurvatureOptions& opt);

// Gaussian proposal N(mu_QN, eps^2 B^{-1}) with
// mu_QN = theta_anchor + (eps^2/2) B^{-1} G(theta_anchor). The forward
// proposal anchors at the oldest memory entry (theta_{k-M}); the reverse
// density is built from the shifted memory anchored at the candidate.
class QnProposal {
 public:
  QnProposal(const GradientMemory& memory, const CurvatureOptions& opt, double eps)
      : QnProposal(memory, memory.oldest(), opt, eps) {}

  QnProposal(const GradientMemory& memory, const MemoryEntry& anchor,
             const CurvatureOptions& opt, double eps);

  const Eigen::VectorXd& mean() const { return mean_; }
  const CurvatureEstimate& curvature() const { return curv_; }

  Eigen::VectorXd sample(RngStream& rng) const;
  double logpdf(const Eigen::VectorXd& x) const;

 private:
  CurvatureEstimate curv_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_lower_;  // L with B = L L^T
  double eps_;
  double log_norm_const_;
};

}  // namespace qnmh

#endif  // QNMH_QUASI_NEWTON_HPP
