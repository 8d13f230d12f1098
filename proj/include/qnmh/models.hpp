#ifndef QNMH_MODELS_HPP
#define QNMH_MODELS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnmh/rng.hpp"

namespace qnmh {

enum class Space { Natural, Unconstrained };
enum class ModelKind { LGSS, SVLeverage };

struct ParameterVector {
  Eigen::VectorXd values;
  Space space = Space::Natural;
};

struct PriorDist {
  enum class Family { Gaussian, TruncatedGaussian, Gamma };
  Family family;
  double a = 0.0;  // mean (Gaussian/TN) or shape (Gamma)
  double b = 1.0;  // sd (Gaussian/TN) or rate (Gamma)
  double lower = 0.0, upper = 0.0;  // TN truncation bounds
};

using PriorSpec = std::vector<PriorDist>;

// y holds y_1..y_T; x, when present, holds x_0..x_T (synthetic data only).
struct DataSet {
  std::vector<double> y;
  std::vector<double> x;

  int T() const { return static_cast<int>(y.size()); }
  bool has_states() const { return !x.empty(); }
};

struct ModelSpec {
  ModelKind kind = ModelKind::LGSS;
  double obs_sd = 0.5;  // LGSS only; SV observation variance is exp(x_t)

  int dim() const { return kind == ModelKind::LGSS ? 3 : 4; }
  std::vector<std::string> param_names() const;
  PriorSpec prior() const;
};

// Raised when the SV joint noise covariance [[sigma_v^2, rho],[rho, e^x]]
// loses positive definiteness at some visited state.
class SvCovarianceError : public std::runtime_error {
 public:
  SvCovarianceError(int t, double x)
      : std::runtime_error("SV noise covariance not positive definite at t=" +
                           std::to_string(t) + ", x=" + std::to_string(x)),
        t(t),
        x(x) {}
  int t;
  double x;
};

// ---- reparametrization -----------------------------------------------------
// phi = tanh(phibar), sigma_v = exp(sigmabar), rho = tanh(rhobar); mu as is.

ParameterVector to_unconstrained(const ModelSpec& model, const ParameterVector& theta);
ParameterVector to_natural(const ModelSpec& model, const ParameterVector& theta_bar);

double log_jacobian(const ModelSpec& model, const ParameterVector& theta_bar);
Eigen::VectorXd log_jacobian_grad(const ModelSpec& model, const ParameterVector& theta_bar);

// Diagonal of dtheta/dthetabar, used to chain natural-space gradients into
// unconstrained coordinates.
Eigen::VectorXd transform_scale(const ModelSpec& model, const ParameterVector& theta_natural);

bool in_support(const ModelSpec& model, const ParameterVector& theta_natural);

// ---- priors ----------------------------------------------------------------

double log_prior(const ParameterVector& theta_natural, const PriorSpec& prior);
// d log p / d theta in natural coordinates; valid only inside the support.
Eigen::VectorXd log_prior_grad(const ParameterVector& theta_natural, const PriorSpec& prior);

// log p(theta) + log|Jacobian| evaluated at an unconstrained point, and its
// gradient in unconstrained coordinates. These are the exact additive parts
// of the log-target shared by every likelihood backend.
double log_prior_jacobian(const ModelSpec& model, const ParameterVector& theta_bar);
Eigen::VectorXd log_prior_jacobian_grad(const ModelSpec& model, const ParameterVector& theta_bar);

// log_target = loglik(theta) + log p(theta) + log|Jacobian|; -inf short-circuits
// the backend call on support violations.
double log_target(const ModelSpec& model, const ParameterVector& theta_bar,
                  const std::function<double(const ParameterVector&)>& loglik);

// ---- simulation ------------------------------------------------------------

DataSet simulate_lgss(const ParameterVector& theta, int T, std::uint64_t seed);
DataSet simulate_sv(const ParameterVector& theta, int T, std::uint64_t seed);

// ---- hot-path parameter structs (used by the particle filter) ---------------

struct LgssParams {
  double mu, phi, sigma_v, obs_sd;
};

struct SvParams {
  double mu, phi, sigma_v, rho;
};

inline LgssParams lgss_params(const ModelSpec& model, const ParameterVector& theta_natural) {
  const auto& v = theta_natural.values;
  return {v(0), v(1), v(2), model.obs_sd};
}

inline SvParams sv_params(const ParameterVector& theta_natural) {
  const auto& v = theta_natural.values;
  return {v(0), v(1), v(2), v(3)};
}

// x_{t+1} | x_t, y_t for the SV model: Gaussian conditioning on the joint
// noise covariance [[sigma_v^2, rho],[rho, e^{x_t}]].
struct SvCond {
  double mean, var;
};

inline SvCond sv_conditional(const SvParams& p, double x_t, double y_t) {
  const double inv_ex = std::exp(-x_t);
  return {p.mu + p.phi * (x_t - p.mu) + p.rho * inv_ex * y_t,
          p.sigma_v * p.sigma_v - p.rho * p.rho * inv_ex};
}

inline double stationary_var(double phi, double sigma_v) {
  return sigma_v * sigma_v / (1.0 - phi * phi);
}

}  // namespace qnmh

#endif  // QNMH_MODELS_HPP
