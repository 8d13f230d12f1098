#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "qnmh/rng.hpp"
#include "qnmh/stats.hpp"

using namespace qnmh;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Expected values frozen from scipy.stats (norm/truncnorm/gamma logpdf).
TEST_CASE("scalar log densities match scipy") {
  CHECK(log_normal_pdf(0.0, 0.0, 1.0) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  CHECK(log_truncnorm_pdf(0.5, 0.5, 1.0, -1.0, 1.0) ==
        doctest::Approx(-0.4483831677887732).epsilon(1e-14));
  CHECK(log_gamma_pdf(1.0, 2.0, 2.0) == doctest::Approx(-0.6137056388801093).epsilon(1e-14));

  // the LGSS prior at theta = (0, 0.5, 1)
  const double sum = log_normal_pdf(0.0, 0.0, 1.0) + log_truncnorm_pdf(0.5, 0.5, 1.0, -1.0, 1.0) +
                     log_gamma_pdf(1.0, 2.0, 2.0);
  CHECK(sum == doctest::Approx(-1.9810273398735552).epsilon(1e-14));

  // the SV prior pieces near its center
  CHECK(log_truncnorm_pdf(0.9, 0.95, 0.05, -1.0, 1.0) ==
        doctest::Approx(1.7495475193727692).epsilon(1e-14));
  CHECK(log_gamma_pdf(0.2, 2.0, 10.0) == doctest::Approx(0.9957322735539909).epsilon(1e-14));
  CHECK(log_truncnorm_pdf(0.1, 0.0, 1.0, -1.0, 1.0) ==
        doctest::Approx(-0.5422233869025466).epsilon(1e-14));
}

TEST_CASE("support boundaries") {
  CHECK(log_truncnorm_pdf(-1.0, 0.0, 1.0, -1.0, 1.0) == -kInf);
  CHECK(log_truncnorm_pdf(1.0, 0.0, 1.0, -1.0, 1.0) == -kInf);
  CHECK(log_truncnorm_pdf(1.5, 0.0, 1.0, -1.0, 1.0) == -kInf);
  CHECK(log_gamma_pdf(0.0, 2.0, 2.0) == -kInf);
  CHECK(log_gamma_pdf(-0.5, 2.0, 2.0) == -kInf);
}

TEST_CASE("normal_cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-14));
  CHECK(normal_cdf(3.0) + normal_cdf(-3.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("logsumexp") {
  CHECK(logsumexp({}) == -kInf);
  CHECK(logsumexp({-kInf, -kInf}) == -kInf);
  CHECK(logsumexp({2.5}) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(logsumexp({std::log(2.0), std::log(3.0)}) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
  // offset far outside double range for naive exp
  CHECK(logsumexp({1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
  CHECK(logsumexp({-1e9, 0.0}) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("MvNormal logpdf against the dense formula") {
  Eigen::VectorXd mean(3);
  mean << 1.0, -2.0, 0.5;
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 0.8;

  const MvNormal d(mean, cov);
  const double logdet = std::log(cov.determinant());
  const Eigen::MatrixXd prec = cov.inverse();

  RngStream rng(5, 0);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x(j) = 3.0 * rng.normal();
    const Eigen::VectorXd r = x - mean;
    const double expect = -0.5 * (3.0 * kLog2Pi + logdet + r.dot(prec * r));
    CHECK(d.logpdf(x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("MvNormal sampling moments") {
  Eigen::VectorXd mean(2);
  mean << -1.0, 2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.6, 0.6, 2.0;

  const MvNormal d(mean, cov);
  RngStream rng(17, 0);
  const int n = 100000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::Matrix2d ss = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = d.sample(rng);
    s += x;
    ss += x * x.transpose();
  }
  const Eigen::Vector2d m = s / n;
  const Eigen::Matrix2d c = ss / n - m * m.transpose();
  for (int j = 0; j < 2; ++j)
    CHECK(std::abs(m(j) - mean(j)) < 3.0 * std::sqrt(cov(j, j) / n));
  // covariance entries: 3 rough standard errors
  CHECK(std::abs(c(0, 0) - 1.0) < 3.0 * std::sqrt(2.0 / n) * 1.0);
  CHECK(std::abs(c(1, 1) - 2.0) < 3.0 * std::sqrt(2.0 / n) * 2.0);
  CHECK(std::abs(c(0, 1) - 0.6) < 3.0 * std::sqrt((1.0 * 2.0 + 0.36) / n));
}

TEST_CASE("MvNormal rejects a non positive definite covariance") {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(MvNormal(mean, bad), std::runtime_error);
}
