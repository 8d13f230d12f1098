#ifndef QNMH_STATS_HPP
#define QNMH_STATS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qnmh/rng.hpp"

namespace qnmh {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLog2Pi + z * z) - std::log(sd);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

// N(mean, sd^2) truncated to (lo, hi); -inf outside the support.
inline double log_truncnorm_pdf(double x, double mean, double sd, double lo,
                                double hi) {
  if (x <= lo || x >= hi) return -std::numeric_limits<double>::infinity();
  const double z = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
  return log_normal_pdf(x, mean, sd) - std::log(z);
}

// Gamma(shape, rate) parameterization: pdf ~ x^{a-1} e^{-b x}.
inline double log_gamma_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

inline double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Multivariate normal with precomputed Cholesky of the covariance.
class MvNormal {
 public:
  MvNormal(Eigen::VectorXd mean, const Eigen::MatrixXd& cov) : mean_(std::move(mean)) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("MvNormal: covariance not positive definite");
    lower_ = llt.matrixL();
    log_det_ = 0.0;
    for (Eigen::Index i = 0; i < lower_.rows(); ++i)
      log_det_ += 2.0 * std::log(lower_(i, i));
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }

  Eigen::VectorXd sample(RngStream& rng) const {
    Eigen::VectorXd z(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) z(i) = rng.normal();
    return mean_ + lower_ * z;
  }

  double logpdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = lower_.triangularView<Eigen::Lower>().solve(x - mean_);
    return -0.5 * (dim() * kLog2Pi + log_det_ + z.squaredNorm());
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd lower_;
  double log_det_;
};

}  // namespace qnmh

#endif  // QNMH_STATS_HPP
