#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "qnmh/models.hpp"

using namespace qnmh;

constexpr double kInf = std::numeric_limits<double>::infinity();

namespace {

ParameterVector natural(std::initializer_list<double> v) {
  ParameterVector p;
  p.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
  p.space = Space::Natural;
  return p;
}

ParameterVector unconstrained(const Eigen::VectorXd& v) {
  return {v, Space::Unconstrained};
}

}  // namespace

TEST_CASE("reparametrization round trips") {
  const ModelSpec lgss{ModelKind::LGSS};
  const ModelSpec sv{ModelKind::SVLeverage};

  const auto th_l = natural({0.2, 0.5, 1.0});
  const auto back_l = to_natural(lgss, to_unconstrained(lgss, th_l));
  CHECK((back_l.values - th_l.values).cwiseAbs().maxCoeff() < 1e-12);

  const auto th_s = natural({1.5, 0.95, 0.25, -0.1});
  const auto back_s = to_natural(sv, to_unconstrained(sv, th_s));
  CHECK((back_s.values - th_s.values).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::VectorXd bar(4);
  bar << -0.3, 1.2, -0.7, 0.4;
  const auto there = to_unconstrained(sv, to_natural(sv, unconstrained(bar)));
  CHECK((there.values - bar).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transform_scale and log_jacobian against finite differences") {
  const ModelSpec sv{ModelKind::SVLeverage};
  Eigen::VectorXd bar(4);
  bar << 0.3, 1.1, -0.9, -0.2;

  // numerical Jacobian of theta(theta_bar); the map is componentwise
  const double h = 1e-6;
  Eigen::VectorXd diag(4);
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd p = bar, m = bar;
    p(j) += h;
    m(j) -= h;
    diag(j) = (to_natural(sv, unconstrained(p)).values(j) -
               to_natural(sv, unconstrained(m)).values(j)) /
              (2.0 * h);
  }

  const double logdet_fd = diag.array().log().sum();
  CHECK(log_jacobian(sv, unconstrained(bar)) == doctest::Approx(logdet_fd).epsilon(1e-6));

  const auto nat = to_natural(sv, unconstrained(bar));
  const Eigen::VectorXd scale = transform_scale(sv, nat);
  CHECK((scale - diag).cwiseAbs().maxCoeff() < 1e-6);

  // gradient of the log Jacobian
  const Eigen::VectorXd g = log_jacobian_grad(sv, unconstrained(bar));
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd p = bar, m = bar;
    p(j) += h;
    m(j) -= h;
    const double fd =
        (log_jacobian(sv, unconstrained(p)) - log_jacobian(sv, unconstrained(m))) / (2.0 * h);
    CHECK(g(j) == doctest::Approx(fd).epsilon(1e-6));
  }
}

// Frozen from scipy: norm(0,1).logpdf(0) + truncnorm logpdf(0.5; 0.5,1,[-1,1])
// + gamma(2, rate 2).logpdf(1).
TEST_CASE("LGSS prior value") {
  const ModelSpec lgss{ModelKind::LGSS};
  CHECK(log_prior(natural({0.0, 0.5, 1.0}), lgss.prior()) ==
        doctest::Approx(-1.9810273398735552).epsilon(1e-13));
}

// Same composition for the SV prior at (0, 0.9, 0.2, 0.1).
TEST_CASE("SV prior value") {
  const ModelSpec sv{ModelKind::SVLeverage};
  const double expect = -0.9189385332046727   // N(0,1) at 0
                        + 1.7495475193727692  // TN(0.95, 0.05) at 0.9
                        + 0.9957322735539909  // Gamma(2, 10) at 0.2
                        - 0.5422233869025466; // TN(0, 1) at 0.1
  CHECK(log_prior(natural({0.0, 0.9, 0.2, 0.1}), sv.prior()) ==
        doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("support violations map to -inf") {
  const ModelSpec lgss{ModelKind::LGSS};
  CHECK(!in_support(lgss, natural({0.0, 1.5, 1.0})));
  CHECK(!in_support(lgss, natural({0.0, 0.5, -1.0})));
  CHECK(in_support(lgss, natural({0.0, 0.5, 1.0})));
  CHECK(log_prior(natural({0.0, 1.5, 1.0}), lgss.prior()) == -kInf);
  CHECK(log_prior(natural({0.0, 0.5, -1.0}), lgss.prior()) == -kInf);
}

TEST_CASE("log_prior_grad against finite differences") {
  const ModelSpec sv{ModelKind::SVLeverage};
  const auto th = natural({0.3, 0.9, 0.2, 0.1});
  const Eigen::VectorXd g = log_prior_grad(th, sv.prior());
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    auto p = th, m = th;
    p.values(j) += h;
    m.values(j) -= h;
    const double fd = (log_prior(p, sv.prior()) - log_prior(m, sv.prior())) / (2.0 * h);
    CHECK(g(j) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("log_prior_jacobian composition and gradient") {
  const ModelSpec lgss{ModelKind::LGSS};
  Eigen::VectorXd bar(3);
  bar << 0.1, 0.6, -0.4;
  const auto tb = unconstrained(bar);

  const double expect = log_prior(to_natural(lgss, tb), lgss.prior()) + log_jacobian(lgss, tb);
  CHECK(log_prior_jacobian(lgss, tb) == doctest::Approx(expect).epsilon(1e-12));

  const Eigen::VectorXd g = log_prior_jacobian_grad(lgss, tb);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd p = bar, m = bar;
    p(j) += h;
    m(j) -= h;
    const double fd =
        (log_prior_jacobian(lgss, unconstrained(p)) - log_prior_jacobian(lgss, unconstrained(m))) /
        (2.0 * h);
    CHECK(g(j) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("log_target composes and short-circuits outside the support") {
  const ModelSpec lgss{ModelKind::LGSS};
  Eigen::VectorXd bar(3);
  bar << 0.2, 0.4, 0.0;
  int calls = 0;
  const auto loglik = [&](const ParameterVector& th) {
    ++calls;
    CHECK(th.space == Space::Natural);
    return -1.5 * th.values.squaredNorm();
  };

  const auto tb = unconstrained(bar);
  const double lt = log_target(lgss, tb, loglik);
  CHECK(calls == 1);
  const auto nat = to_natural(lgss, tb);
  CHECK(lt == doctest::Approx(-1.5 * nat.values.squaredNorm() + log_prior_jacobian(lgss, tb))
                  .epsilon(1e-12));

  // tanh saturates to exactly 1 in double precision; the likelihood must not run
  Eigen::VectorXd sat(3);
  sat << 0.0, 50.0, 0.0;
  calls = 0;
  CHECK(log_target(lgss, unconstrained(sat), loglik) == -kInf);
  CHECK(calls == 0);
}

TEST_CASE("simulate_lgss moments") {
  const auto th = natural({0.2, 0.5, 1.0});
  const DataSet data = simulate_lgss(th, 10000, 11);
  REQUIRE(data.T() == 10000);
  REQUIRE(data.has_states());
  REQUIRE(static_cast<int>(data.x.size()) == 10001);

  double sx = 0.0;
  for (int t = 1; t <= 10000; ++t) sx += data.x[t];
  const double mean_x = sx / 10000.0;
  // AR(1) long-run variance: var_x (1+phi)/(1-phi) = (4/3)*3 = 4
  CHECK(std::abs(mean_x - 0.2) < 3.0 * std::sqrt(4.0 / 10000.0));

  // lag-1 autocorrelation of the state
  double c0 = 0.0, c1 = 0.0;
  for (int t = 1; t <= 10000; ++t) c0 += (data.x[t] - mean_x) * (data.x[t] - mean_x);
  for (int t = 1; t < 10000; ++t) c1 += (data.x[t] - mean_x) * (data.x[t + 1] - mean_x);
  CHECK(c1 / c0 == doctest::Approx(0.5).epsilon(0.06));

  // observation noise: mean of (y - x)^2 is obs_sd^2 = 0.25
  double se = 0.0;
  for (int t = 1; t <= 10000; ++t) {
    const double e = data.y[t - 1] - data.x[t];
    se += e * e;
  }
  CHECK(se / 10000.0 == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("simulate rejects a nonstationary chain") {
  CHECK_THROWS_AS(simulate_lgss(natural({0.0, 1.0, 1.0}), 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate_lgss(natural({0.0, 0.5, 1.0}), 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate_sv(natural({0.0, 1.0, 0.2, 0.0}), 10, 1), std::invalid_argument);
}

TEST_CASE("simulate is bit-reproducible") {
  const auto th = natural({0.2, 0.5, 1.0});
  const DataSet a = simulate_lgss(th, 200, 33);
  const DataSet b = simulate_lgss(th, 200, 33);
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
  const DataSet c = simulate_lgss(th, 200, 34);
  CHECK(a.y != c.y);

  const auto ts = natural({1.5, 0.95, 0.25, -0.1});
  const DataSet s1 = simulate_sv(ts, 200, 5);
  const DataSet s2 = simulate_sv(ts, 200, 5);
  CHECK(s1.y == s2.y);
  CHECK(s1.x == s2.x);
}

TEST_CASE("simulate_sv state moments") {
  const auto th = natural({1.5, 0.95, 0.25, -0.1});
  const DataSet data = simulate_sv(th, 10000, 21);
  double sx = 0.0;
  for (int t = 1; t <= 10000; ++t) sx += data.x[t];
  // long-run SE: sqrt(var_x (1+phi)/(1-phi) / T), var_x = 0.0625/0.0975
  const double se = std::sqrt(stationary_var(0.95, 0.25) * 39.0 / 10000.0);
  CHECK(std::abs(sx / 10000.0 - 1.5) < 3.0 * se);
}

TEST_CASE("sv_conditional equals dense two-by-two conditioning") {
  const SvParams p{0.4, 0.9, 0.3, -0.15};
  const double x = 0.7, y = -1.2;

  Eigen::Matrix2d S;
  S << p.sigma_v * p.sigma_v, p.rho, p.rho, std::exp(x);
  const double mean = 0.4 + 0.9 * (x - 0.4) + S(0, 1) / S(1, 1) * y;
  const double var = S(0, 0) - S(0, 1) * S(0, 1) / S(1, 1);

  const SvCond c = sv_conditional(p, x, y);
  CHECK(c.mean == doctest::Approx(mean).epsilon(1e-13));
  CHECK(c.var == doctest::Approx(var).epsilon(1e-13));

  // rho = 0: no leverage feedback
  const SvCond c0 = sv_conditional(SvParams{0.4, 0.9, 0.3, 0.0}, x, y);
  CHECK(c0.mean == doctest::Approx(0.4 + 0.9 * (x - 0.4)).epsilon(1e-13));
  CHECK(c0.var == doctest::Approx(0.09).epsilon(1e-13));
}

TEST_CASE("simulate_sv surfaces a degenerate noise covariance") {
  // sigma_v^2 = 0.01 < rho^2 exp(-x) near x = 0
  CHECK_THROWS_AS(simulate_sv(natural({0.0, 0.5, 0.1, 0.5}), 50, 3), SvCovarianceError);
}
