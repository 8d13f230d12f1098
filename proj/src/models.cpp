#include "qnmh/models.hpp"

#include <limits>

#include "qnmh/stats.hpp"

namespace qnmh {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<std::string> ModelSpec::param_names() const {
  if (kind == ModelKind::LGSS) return {"mu", "phi", "sigma_v"};
  return {"mu", "phi", "sigma_v", "rho"};
}

PriorSpec ModelSpec::prior() const {
  using F = PriorDist::Family;
  if (kind == ModelKind::LGSS) {
    return {{F::Gaussian, 0.0, 1.0},
            {F::TruncatedGaussian, 0.5, 1.0, -1.0, 1.0},
            {F::Gamma, 2.0, 2.0}};
  }
  return {{F::Gaussian, 0.0, 1.0},
          {F::TruncatedGaussian, 0.95, 0.05, -1.0, 1.0},
          {F::Gamma, 2.0, 10.0},
          {F::TruncatedGaussian, 0.0, 1.0, -1.0, 1.0}};
}

static double atanh_checked(double x) {
  if (!(x > -1.0 && x < 1.0)) throw std::invalid_argument("atanh: argument outside (-1,1)");
  return std::atanh(x);
}

ParameterVector to_unconstrained(const ModelSpec& model, const ParameterVector& theta) {
  if (theta.space != Space::Natural)
    throw std::logic_error("to_unconstrained: expected natural-space input");
  Eigen::VectorXd v = theta.values;
  v(1) = atanh_checked(v(1));
  if (!(theta.values(2) > 0.0)) throw std::invalid_argument("to_unconstrained: sigma_v <= 0");
  v(2) = std::log(theta.values(2));
  if (model.kind == ModelKind::SVLeverage) v(3) = atanh_checked(theta.values(3));
  return {v, Space::Unconstrained};
}

ParameterVector to_natural(const ModelSpec& model, const ParameterVector& theta_bar) {
  if (theta_bar.space != Space::Unconstrained)
    throw std::logic_error("to_natural: expected unconstrained-space input");
  Eigen::VectorXd v = theta_bar.values;
  v(1) = std::tanh(v(1));
  v(2) = std::exp(v(2));
  if (model.kind == ModelKind::SVLeverage) v(3) = std::tanh(v(3));
  return {v, Space::Natural};
}

double log_jacobian(const ModelSpec& model, const ParameterVector& theta_bar) {
  if (theta_bar.space != Space::Unconstrained)
    throw std::logic_error("log_jacobian: expected unconstrained-space input");
  const auto& v = theta_bar.values;
  const double phi = std::tanh(v(1));
  double lj = std::log1p(-phi * phi) + v(2);
  if (model.kind == ModelKind::SVLeverage) {
    const double rho = std::tanh(v(3));
    lj += std::log1p(-rho * rho);
  }
  return lj;
}

Eigen::VectorXd log_jacobian_grad(const ModelSpec& model, const ParameterVector& theta_bar) {
  if (theta_bar.space != Space::Unconstrained)
    throw std::logic_error("log_jacobian_grad: expected unconstrained-space input");
  const auto& v = theta_bar.values;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(v.size());
  g(1) = -2.0 * std::tanh(v(1));
  g(2) = 1.0;
  if (model.kind == ModelKind::SVLeverage) g(3) = -2.0 * std::tanh(v(3));
  return g;
}

Eigen::VectorXd transform_scale(const ModelSpec& model, const ParameterVector& theta_natural) {
  if (theta_natural.space != Space::Natural)
    throw std::logic_error("transform_scale: expected natural-space input");
  const auto& v = theta_natural.values;
  Eigen::VectorXd d = Eigen::VectorXd::Ones(v.size());
  d(1) = 1.0 - v(1) * v(1);
  d(2) = v(2);
  if (model.kind == ModelKind::SVLeverage) d(3) = 1.0 - v(3) * v(3);
  return d;
}

bool in_support(const ModelSpec& model, const ParameterVector& theta_natural) {
  const auto& v = theta_natural.values;
  if (!v.allFinite()) return false;
  if (!(std::abs(v(1)) < 1.0)) return false;
  if (!(v(2) > 0.0)) return false;
  if (model.kind == ModelKind::SVLeverage && !(std::abs(v(3)) < 1.0)) return false;
  return true;
}

double log_prior(const ParameterVector& theta_natural, const PriorSpec& prior) {
  if (theta_natural.space != Space::Natural)
    throw std::logic_error("log_prior: expected natural-space input");
  const auto& v = theta_natural.values;
  if (static_cast<std::size_t>(v.size()) != prior.size())
    throw std::invalid_argument("log_prior: dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& d = prior[i];
    const double x = v(static_cast<Eigen::Index>(i));
    switch (d.family) {
      case PriorDist::Family::Gaussian:
        lp += log_normal_pdf(x, d.a, d.b);
        break;
      case PriorDist::Family::TruncatedGaussian:
        lp += log_truncnorm_pdf(x, d.a, d.b, d.lower, d.upper);
        break;
      case PriorDist::Family::Gamma:
        lp += log_gamma_pdf(x, d.a, d.b);
        break;
    }
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

Eigen::VectorXd log_prior_grad(const ParameterVector& theta_natural, const PriorSpec& prior) {
  if (theta_natural.space != Space::Natural)
    throw std::logic_error("log_prior_grad: expected natural-space input");
  const auto& v = theta_natural.values;
  Eigen::VectorXd g(v.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& d = prior[i];
    const double x = v(static_cast<Eigen::Index>(i));
    switch (d.family) {
      case PriorDist::Family::Gaussian:
      case PriorDist::Family::TruncatedGaussian:
        g(static_cast<Eigen::Index>(i)) = -(x - d.a) / (d.b * d.b);
        break;
      case PriorDist::Family::Gamma:
        g(static_cast<Eigen::Index>(i)) = (d.a - 1.0) / x - d.b;
        break;
    }
  }
  return g;
}

double log_prior_jacobian(const ModelSpec& model, const ParameterVector& theta_bar) {
  const ParameterVector theta = to_natural(model, theta_bar);
  if (!in_support(model, theta)) return kNegInf;
  const double lp = log_prior(theta, model.prior());
  if (lp == kNegInf) return kNegInf;
  return lp + log_jacobian(model, theta_bar);
}

Eigen::VectorXd log_prior_jacobian_grad(const ModelSpec& model, const ParameterVector& theta_bar) {
  const ParameterVector theta = to_natural(model, theta_bar);
  const Eigen::VectorXd scale = transform_scale(model, theta);
  return scale.cwiseProduct(log_prior_grad(theta, model.prior())) +
         log_jacobian_grad(model, theta_bar);
}

double log_target(const ModelSpec& model, const ParameterVector& theta_bar,
                  const std::function<double(const ParameterVector&)>& loglik) {
  const ParameterVector theta = to_natural(model, theta_bar);
  if (!in_support(model, theta)) return kNegInf;
  const double lp = log_prior(theta, model.prior());
  if (lp == kNegInf) return kNegInf;
  return loglik(theta) + lp + log_jacobian(model, theta_bar);
}

DataSet simulate_lgss(const ParameterVector& theta, int T, std::uint64_t seed) {
  if (theta.space != Space::Natural)
    throw std::logic_error("simulate_lgss: expected natural-space parameters");
  const auto& v = theta.values;
  const double mu = v(0), phi = v(1), sigma_v = v(2);
  if (!(std::abs(phi) < 1.0))
    throw std::invalid_argument("simulate_lgss: |phi| >= 1, no stationary initialization");
  if (!(sigma_v > 0.0)) throw std::invalid_argument("simulate_lgss: sigma_v <= 0");
  if (T < 1) throw std::invalid_argument("simulate_lgss: T < 1");

  const double obs_sd = 0.5;
  RngStream rng(seed, 0);
  DataSet data;
  data.x.resize(T + 1);
  data.y.resize(T);
  data.x[0] = mu + std::sqrt(stationary_var(phi, sigma_v)) * rng.normal();
  for (int t = 1; t <= T; ++t) {
    data.x[t] = mu + phi * (data.x[t - 1] - mu) + sigma_v * rng.normal();
    data.y[t - 1] = data.x[t] + obs_sd * rng.normal();
  }
  return data;
}

DataSet simulate_sv(const ParameterVector& theta, int T, std::uint64_t seed) {
  if (theta.space != Space::Natural)
    throw std::logic_error("simulate_sv: expected natural-space parameters");
  const SvParams p = sv_params(theta);
  if (!(std::abs(p.phi) < 1.0))
    throw std::invalid_argument("simulate_sv: |phi| >= 1, no stationary initialization");
  if (!(p.sigma_v > 0.0)) throw std::invalid_argument("simulate_sv: sigma_v <= 0");
  if (T < 1) throw std::invalid_argument("simulate_sv: T < 1");

  RngStream rng(seed, 0);
  DataSet data;
  data.x.resize(T + 1);
  data.y.resize(T);
  data.x[0] = p.mu + std::sqrt(stationary_var(p.phi, p.sigma_v)) * rng.normal();
  // y_0 is unobserved, so x_1 | x_0 is the marginal AR(1) step.
  data.x[1] = p.mu + p.phi * (data.x[0] - p.mu) + p.sigma_v * rng.normal();
  for (int t = 1; t <= T; ++t) {
    data.y[t - 1] = std::exp(0.5 * data.x[t]) * rng.normal();
    if (t < T) {
      const SvCond c = sv_conditional(p, data.x[t], data.y[t - 1]);
      if (!(c.var > 0.0)) throw SvCovarianceError(t, data.x[t]);
      data.x[t + 1] = c.mean + std::sqrt(c.var) * rng.normal();
    }
  }
  return data;
}

}  // namespace qnmh
