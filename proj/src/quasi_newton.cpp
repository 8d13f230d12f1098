#include "qnmh/quasi_newton.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qnmh/stats.hpp"

namespace qnmh {

std::vector<MemoryEntry> extract_sorted_unique(const GradientMemory& memory) {
  std::vector<MemoryEntry> out;
  out.reserve(memory.size());
  for (const auto& e : memory.entries()) {
    bool dup = false;
    for (const auto& kept : out)
      if (kept.theta.size() == e.theta.size() && kept.theta == e.theta) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MemoryEntry& a, const MemoryEntry& b) { return a.logpost < b.logpost; });
  return out;
}

std::optional<Eigen::MatrixXd> bfgs_update(const Eigen::MatrixXd& B,
                                           const Eigen::VectorXd& s,
                                           const Eigen::VectorXd& z) {
  const double sz = s.dot(z);
  if (std::abs(sz) < 1e-12 * s.norm() * z.norm()) return std::nullopt;
  const double rho = 1.0 / sz;
  const Eigen::Index p = B.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd out =
      (I - rho * z * s.transpose()) * B * (I - rho * s * z.transpose()) +
      rho * z * z.transpose();
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

std::optional<DampedUpdate> damped_bfgs_update(const Eigen::MatrixXd& B,
                                               const Eigen::VectorXd& s,
                                               const Eigen::VectorXd& z) {
  if (s.norm() == 0.0) return std::nullopt;
  const Eigen::VectorXd Bs = B * s;
  const double sBs = s.dot(Bs);
  const double sz = s.dot(z);
  DampedUpdate out;
  Eigen::VectorXd r;
  if (sz >= 0.2 * sBs) {
    r = z;
    out.damped = false;
  } else {
    const double beta = 0.8 * sBs / (sBs - sz);
    r = beta * z + (1.0 - beta) * Bs;
    out.damped = true;
  }
  // s^T r >= 0.2 s^T B s > 0, so the raw update cannot hit its skip threshold.
  auto updated = bfgs_update(B, s, r);
  if (!updated) return std::nullopt;
  out.B = std::move(*updated);
  return out;
}

Eigen::MatrixXd correct_curvature(const Eigen::MatrixXd& B, Correction method,
                                  const Eigen::MatrixXd* sigma_emp, double delta) {
  if (method == Correction::Hyb) {
    if (sigma_emp == nullptr)
      throw std::invalid_argument("correct_curvature: hyb requires Sigma_emp");
    return sigma_emp->inverse();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  if (method == Correction::Reg) {
    const double lmin = lam.minCoeff();
    if (lmin < 0.0)
      return B - 2.0 * lmin * Eigen::MatrixXd::Identity(B.rows(), B.cols());
    return B;
  }
  // flip
  Eigen::MatrixXd out =
      eig.eigenvectors() * lam.cwiseAbs().asDiagonal() * eig.eigenvectors().transpose();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1.0);
  if (lam.cwiseAbs().minCoeff() <= 1e-12 * scale)
    out += delta * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  return 0.5 * (out + out.transpose()).eval();
}

CurvatureEstimate build_curvature(const GradientMemory& memory, const CurvatureOptions& opt) {
  if (!(opt.delta > 0.0)) throw std::invalid_argument("build_curvature: delta <= 0");
  const auto sorted = extract_sorted_unique(memory);
  const int mbar = static_cast<int>(sorted.size());

  CurvatureEstimate est;
  if (mbar < 2) {
    const Eigen::Index p = memory.empty() ? 1 : memory.oldest().theta.size();
    est.B = opt.delta * Eigen::MatrixXd::Identity(p, p);
    est.fallback_identity = true;
    est.lambda_min = opt.delta;
    return est;
  }

  const Eigen::Index p = sorted.front().theta.size();
  Eigen::MatrixXd B = opt.delta * Eigen::MatrixXd::Identity(p, p);
  for (int l = 0; l + 1 < mbar; ++l) {
    const Eigen::VectorXd s = sorted[l + 1].theta - sorted[l].theta;
    const Eigen::VectorXd z = sorted[l + 1].grad - sorted[l].grad;
    switch (opt.strategy) {
      case QnStrategy::dBFGS: {
        auto r = damped_bfgs_update(B, s, z);
        if (r) {
          B = std::move(r->B);
          est.damped_used |= r->damped;
        }
        break;
      }
      case QnStrategy::iBFGS: {
        auto r = bfgs_update(B, s, z);
        if (r) B = std::move(*r);
        break;
      }
      case QnStrategy::eBFGS: {
        if (s.dot(z) > 0.0) {
          auto r = bfgs_update(B, s, z);
          if (r) B = std::move(*r);
        }
        break;
      }
    }
  }

  // The raw recursions track the log-target Hessian itself (concave at the
  // mode), so Sigma_QN = -H there; damping keeps the estimate inside the
  // positive cone that H0 starts in, giving it proposal-precision sign
  // already, so it is used directly.
  if (opt.strategy != QnStrategy::dBFGS) B = -B;

  est.lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B).eigenvalues().minCoeff();
  if (opt.strategy != QnStrategy::dBFGS && est.lambda_min <= 0.0) {
    B = correct_curvature(B, opt.correction, opt.sigma_emp, opt.delta);
    est.corrected = opt.correction;
  }
  est.B = std::move(B);
  return est;
}

QnProposal::QnProposal(const GradientMemory& memory, const MemoryEntry& anchor,
                       const CurvatureOptions& opt, double eps)
    : curv_(build_curvature(memory, opt)), eps_(eps) {
  if (memory.empty()) throw std::invalid_argument("QnProposal: empty memory");
  const Eigen::Index p = anchor.theta.size();

  Eigen::LLT<Eigen::MatrixXd> llt(curv_.B);
  if (llt.info() != Eigen::Success) {
    // One jitter retry, then the identity fallback.
    llt.compute(curv_.B + opt.delta * Eigen::MatrixXd::Identity(p, p));
    if (llt.info() != Eigen::Success) {
      curv_.B = opt.delta * Eigen::MatrixXd::Identity(p, p);
      curv_.fallback_identity = true;
      llt.compute(curv_.B);
    } else {
      curv_.B += opt.delta * Eigen::MatrixXd::Identity(p, p);
    }
  }
  chol_lower_ = llt.matrixL();

  // mu = anchor + (eps^2/2) B^{-1} G(anchor)
  mean_ = anchor.theta + 0.5 * eps_ * eps_ * llt.solve(anchor.grad);

  double log_det_B = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) log_det_B += 2.0 * std::log(chol_lower_(i, i));
  // covariance = eps^2 B^{-1}; log det = 2p log eps - log det B
  log_norm_const_ =
      -0.5 * (p * kLog2Pi + 2.0 * p * std::log(eps_) - log_det_B);
}

Eigen::VectorXd QnProposal::sample(RngStream& rng) const {
  const Eigen::Index p = mean_.size();
  Eigen::VectorXd zv(p);
  for (Eigen::Index i = 0; i < p; ++i) zv(i) = rng.normal();
  // cov factor: eps * L^{-T}
  return mean_ + eps_ * chol_lower_.transpose()
                            .triangularView<Eigen::Upper>()
                            .solve(zv);
}

double QnProposal::logpdf(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - mean_;
  const Eigen::VectorXd Ld = chol_lower_.transpose() * d;  // quadratic form via B = L L^T
  return log_norm_const_ - 0.5 * Ld.squaredNorm() / (eps_ * eps_);
}

}  // namespace qnmh
