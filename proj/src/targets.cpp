#include "qnmh/targets.hpp"

#include <limits>

namespace qnmh {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Target::Eval KalmanTarget::evaluate(const Eigen::VectorXd& theta_bar, std::uint64_t,
                                    bool need_gradient) const {
  Eval out;
  const ParameterVector tb{theta_bar, Space::Unconstrained};
  const double pj = log_prior_jacobian(model_, tb);
  if (pj == kNegInf) return out;

  const ParameterVector theta = to_natural(model_, tb);
  out.logpost = pj + kalman_loglik(theta, data_);
  if (need_gradient) out.grad = score_kalman(tb, data_);
  return out;
}

Target::Eval ParticleTarget::evaluate(const Eigen::VectorXd& theta_bar,
                                      std::uint64_t eval_seed, bool need_gradient) const {
  Eval out;
  const ParameterVector tb{theta_bar, Space::Unconstrained};
  const double pj = log_prior_jacobian(model_, tb);
  if (pj == kNegInf) return out;

  try {
    if (need_gradient) {
      const ScoreResult r = fixed_lag_score(model_, tb, data_, pf_, lag_, eval_seed);
      out.logpost = pj + r.loglik;
      out.grad = r.grad;
    } else {
      const ParameterVector theta = to_natural(model_, tb);
      out.logpost = pj + bootstrap_pf(model_, theta, data_, pf_, eval_seed).loglik;
    }
  } catch (const SvCovarianceError&) {
    out.ok = false;
    out.logpost = kNegInf;
  } catch (const ParticleCollapse&) {
    out.ok = false;
    out.logpost = kNegInf;
  }
  return out;
}

}  // namespace qnmh
