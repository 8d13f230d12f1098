#ifndef QNMH_TARGETS_HPP
#define QNMH_TARGETS_HPP

#include "qnmh/kalman.hpp"
#include "qnmh/models.hpp"
#include "qnmh/sampler.hpp"
#include "qnmh/smc.hpp"
#include "qnmh/stats.hpp"

namespace qnmh {

// Exact LGSS posterior via the Kalman recursions; deterministic, eval_seed
// unused. Prior support violations short-circuit before any filtering.
class KalmanTarget : public Target {
 public:
  explicit KalmanTarget(DataSet data) : data_(std::move(data)) {}

  int dim() const override { return 3; }
  Eval evaluate(const Eigen::VectorXd& theta_bar, std::uint64_t eval_seed,
                bool need_gradient) const override;

 private:
  ModelSpec model_{ModelKind::LGSS};
  DataSet data_;
};

// Particle posterior estimate for either model: bootstrap PF log-likelihood,
// fixed-lag smoother score. Collapse or an invalid SV noise covariance at the
// candidate is reported as ok=false.
class ParticleTarget : public Target {
 public:
  ParticleTarget(ModelSpec model, DataSet data, PfConfig pf, int lag)
      : model_(model), data_(std::move(data)), pf_(pf), lag_(lag) {}

  int dim() const override { return model_.dim(); }
  Eval evaluate(const Eigen::VectorXd& theta_bar, std::uint64_t eval_seed,
                bool need_gradient) const override;

 private:
  ModelSpec model_;
  DataSet data_;
  PfConfig pf_;
  int lag_;
};

// Analytic Gaussian target for sampler validation (no state-space model).
class GaussianTarget : public Target {
 public:
  GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
      : mean_(std::move(mean)), precision_(cov.inverse()) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    log_norm_ = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      log_norm_ += std::log(llt.matrixL()(i, i));
    log_norm_ = -0.5 * cov.rows() * kLog2Pi - log_norm_;
  }

  int dim() const override { return static_cast<int>(mean_.size()); }
  Eval evaluate(const Eigen::VectorXd& theta_bar, std::uint64_t,
                bool need_gradient) const override {
    Eval out;
    const Eigen::VectorXd d = theta_bar - mean_;
    out.logpost = log_norm_ - 0.5 * d.dot(precision_ * d);
    if (need_gradient) out.grad = -precision_ * d;
    return out;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  double log_norm_;
};

}  // namespace qnmh

#endif  // QNMH_TARGETS_HPP
