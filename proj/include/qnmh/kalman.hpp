#ifndef QNMH_KALMAN_HPP
#define QNMH_KALMAN_HPP

#include <Eigen/Dense>
#include <vector>

#include "qnmh/models.hpp"

namespace qnmh {

// Scalar-state Kalman recursions for the LGSS model. x_0 carries the
// stationary prior N(mu, sigma_v^2/(1-phi^2)); observations are y_1..y_T.

struct FilterResult {
  std::vector<double> pred_mean, pred_var;  // x_t | y_{1:t-1}, t = 1..T
  std::vector<double> filt_mean, filt_var;  // x_t | y_{1:t},   t = 1..T
  std::vector<double> step_loglik;          // log p(y_t | y_{1:t-1})
  double loglik = 0.0;
  double prior_mean = 0.0, prior_var = 0.0;  // moments of x_0
};

struct SmootherResult {
  std::vector<double> mean, var;    // x_t | y_{1:T}, t = 0..T
  std::vector<double> lag_one_cov;  // Cov(x_t, x_{t+1} | y_{1:T}), t = 0..T-1
};

FilterResult kalman_filter(const ParameterVector& theta_natural, const DataSet& data);

SmootherResult rts_smoother(const FilterResult& filter, const ParameterVector& theta_natural);

double kalman_loglik(const ParameterVector& theta_natural, const DataSet& data);

// Gradient of the LGSS log-likelihood in natural coordinates, assembled from
// smoothed sufficient statistics via Fisher's identity.
Eigen::VectorXd kalman_loglik_grad(const ParameterVector& theta_natural, const DataSet& data);

// Gradient of log_target (likelihood + prior + Jacobian) in unconstrained
// coordinates.
Eigen::VectorXd score_kalman(const ParameterVector& theta_bar, const DataSet& data);

}  // namespace qnmh

#endif  // QNMH_KALMAN_HPP
