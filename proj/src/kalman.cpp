#include "qnmh/kalman.hpp"

#include <cmath>
#include <stdexcept>

#include "qnmh/stats.hpp"

namespace qnmh {

static void check_lgss(const ParameterVector& theta, const DataSet& data) {
  if (theta.space != Space::Natural)
    throw std::logic_error("kalman: expected natural-space parameters");
  if (!(std::abs(theta.values(1)) < 1.0) || !(theta.values(2) > 0.0))
    throw std::invalid_argument("kalman: parameters outside LGSS support");
  for (double y : data.y)
    if (!std::isfinite(y)) throw std::invalid_argument("kalman: non-finite observation");
}

FilterResult kalman_filter(const ParameterVector& theta, const DataSet& data) {
  check_lgss(theta, data);
  const double mu = theta.values(0), phi = theta.values(1), sigma_v = theta.values(2);
  const double q = sigma_v * sigma_v;
  const double r = 0.25;  // fixed observation variance 0.5^2
  const int T = data.T();

  FilterResult out;
  out.prior_mean = mu;
  out.prior_var = stationary_var(phi, sigma_v);
  out.pred_mean.resize(T);
  out.pred_var.resize(T);
  out.filt_mean.resize(T);
  out.filt_var.resize(T);
  out.step_loglik.resize(T);

  double m = out.prior_mean, p = out.prior_var;
  for (int t = 0; t < T; ++t) {
    const double mp = mu + phi * (m - mu);
    const double pp = phi * phi * p + q;
    const double s = pp + r;
    const double k = pp / s;
    m = mp + k * (data.y[t] - mp);
    p = (1.0 - k) * pp;
    out.pred_mean[t] = mp;
    out.pred_var[t] = pp;
    out.filt_mean[t] = m;
    out.filt_var[t] = p;
    out.step_loglik[t] = log_normal_pdf(data.y[t], mp, std::sqrt(s));
    out.loglik += out.step_loglik[t];
  }
  return out;
}

SmootherResult rts_smoother(const FilterResult& f, const ParameterVector& theta) {
  if (theta.space != Space::Natural)
    throw std::logic_error("rts_smoother: expected natural-space parameters");
  const double phi = theta.values(1);
  const int T = static_cast<int>(f.filt_mean.size());

  SmootherResult out;
  out.mean.resize(T + 1);
  out.var.resize(T + 1);
  out.lag_one_cov.assign(T, 0.0);
  if (T == 0) {
    out.mean[0] = f.prior_mean;
    out.var[0] = f.prior_var;
    return out;
  }

  out.mean[T] = f.filt_mean[T - 1];
  out.var[T] = f.filt_var[T - 1];
  for (int t = T - 1; t >= 0; --t) {
    // filtered moments of x_t; t = 0 uses the prior.
    const double fm = (t == 0) ? f.prior_mean : f.filt_mean[t - 1];
    const double fp = (t == 0) ? f.prior_var : f.filt_var[t - 1];
    const double j = fp * phi / f.pred_var[t];
    out.mean[t] = fm + j * (out.mean[t + 1] - f.pred_mean[t]);
    out.var[t] = fp + j * j * (out.var[t + 1] - f.pred_var[t]);
    out.lag_one_cov[t] = j * out.var[t + 1];
  }
  return out;
}

double kalman_loglik(const ParameterVector& theta, const DataSet& data) {
  return kalman_filter(theta, data).loglik;
}

Eigen::VectorXd kalman_loglik_grad(const ParameterVector& theta, const DataSet& data) {
  const FilterResult f = kalman_filter(theta, data);
  const SmootherResult s = rts_smoother(f, theta);
  const double mu = theta.values(0), phi = theta.values(1), sigma_v = theta.values(2);
  const double q = sigma_v * sigma_v;
  const double p0 = f.prior_var;
  const int T = data.T();

  Eigen::VectorXd g = Eigen::VectorXd::Zero(3);

  // Initial-state term log N(x_0; mu, P0) with P0 = sigma_v^2/(1-phi^2).
  const double d0 = s.mean[0] - mu;
  const double e0_sq = s.var[0] + d0 * d0;
  g(0) += d0 / p0;
  const double dlogp_dP0 = -0.5 / p0 + 0.5 * e0_sq / (p0 * p0);
  g(1) += dlogp_dP0 * (2.0 * phi * p0 / (1.0 - phi * phi));
  g(2) += dlogp_dP0 * (2.0 * p0 / sigma_v);

  // Transition terms, e_t = x_{t+1} - mu - phi (x_t - mu), t = 0..T-1.
  for (int t = 0; t < T; ++t) {
    const double dm_t = s.mean[t] - mu;
    const double e_mean = s.mean[t + 1] - mu - phi * dm_t;
    const double e_var = s.var[t + 1] - 2.0 * phi * s.lag_one_cov[t] + phi * phi * s.var[t];
    const double e_sq = e_var + e_mean * e_mean;
    const double e_xt = s.lag_one_cov[t] - phi * s.var[t] + e_mean * dm_t;
    g(0) += e_mean * (1.0 - phi) / q;
    g(1) += e_xt / q;
    g(2) += -1.0 / sigma_v + e_sq / (q * sigma_v);
  }

  // Observation terms carry no theta dependence (unit map, fixed variance).
  return g;
}

Eigen::VectorXd score_kalman(const ParameterVector& theta_bar, const DataSet& data) {
  const ModelSpec model{ModelKind::LGSS};
  const ParameterVector theta = to_natural(model, theta_bar);
  const Eigen::VectorXd scale = transform_scale(model, theta);
  return scale.cwiseProduct(kalman_loglik_grad(theta, data) +
                            log_prior_grad(theta, model.prior())) +
         log_jacobian_grad(model, theta_bar);
}

}  // namespace qnmh
