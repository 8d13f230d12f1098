#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "qnmh/diagnostics.hpp"
#include "qnmh/models.hpp"
#include "qnmh/rng.hpp"

using namespace qnmh;

namespace {

std::vector<double> ar1(double a, int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> x(n);
  x[0] = rng.normal();
  const double s = std::sqrt(1.0 - a * a);
  for (int i = 1; i < n; ++i) x[i] = a * x[i - 1] + s * rng.normal();
  return x;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("iact is one for white noise") {
  RngStream rng(1, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  CHECK(iact(x) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("iact matches the AR(1) closed form") {
  for (double a : {0.0, 0.5, 0.9}) {
    const auto x = ar1(a, 1000000, 17 + static_cast<std::uint64_t>(10 * a));
    const double expect = (1.0 + a) / (1.0 - a);
    CHECK(iact(x) == doctest::Approx(expect).epsilon(0.2));
  }
}

TEST_CASE("iact sentinel, floor, and validation") {
  std::vector<double> flat(100, 3.25);
  CHECK(iact(flat) == std::numeric_limits<double>::infinity());

  RngStream rng(2, 0);
  for (int block : {1, 5, 20}) {
    std::vector<double> x(5000);
    for (auto& v : x) v = rng.normal();
    CHECK(iact(x, block) >= 1.0);
  }

  std::vector<double> tiny(5, 0.0);
  CHECK_THROWS_AS(iact(tiny), std::invalid_argument);
  std::vector<double> x(100, 0.0);
  x[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(iact(x), std::invalid_argument);
  std::vector<double> y(100, 1.0);
  CHECK_THROWS_AS(iact(y, 0), std::invalid_argument);
}

// Correlation concentrated at lag multiples of M: a lag-by-lag scan truncates
// at the first (noise-level) in-between lag, while the block scan sees the
// spikes. x_t = sum_j z_{t-jM} has IACT 1 + 2*(0.8+0.6+0.4+0.2) = 5 for 5 taps.
TEST_CASE("block scan captures order-M combs that a plain scan misses") {
  const int M = 20, J = 5, n = 200000;
  RngStream rng(3, 0);
  std::vector<double> z(n + J * M);
  for (auto& v : z) v = rng.normal();
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) {
    double s = 0.0;
    for (int j = 0; j < J; ++j) s += z[t + j * M];
    x[t] = s;
  }
  CHECK(iact(x, M) == doctest::Approx(5.0).epsilon(0.25));
  CHECK(iact(x, 1) < 2.0);
}

TEST_CASE("median and quantile") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({5.0}) == 5.0);
  CHECK(quantile({0.0, 1.0, 2.0, 3.0}, 0.0) == 0.0);
  CHECK(quantile({0.0, 1.0, 2.0, 3.0}, 1.0) == 3.0);
  CHECK(quantile({0.0, 1.0, 2.0, 3.0}, 0.25) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("natural_state applies the model transform") {
  const ModelSpec lgss{ModelKind::LGSS};
  const Eigen::VectorXd nat = natural_state(lgss, vec3(0.3, 0.5, -0.2));
  CHECK(nat(0) == 0.3);
  CHECK(nat(1) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(nat(2) == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));

  const ModelSpec sv{ModelKind::SVLeverage};
  Eigen::VectorXd th(4);
  th << 1.0, 2.0, -1.0, 0.4;
  const Eigen::VectorXd nsv = natural_state(sv, th);
  CHECK(nsv(0) == 1.0);
  CHECK(nsv(1) == doctest::Approx(std::tanh(2.0)).epsilon(1e-15));
  CHECK(nsv(2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(nsv(3) == doctest::Approx(std::tanh(0.4)).epsilon(1e-15));
}

TEST_CASE("summarize computes Table-style metrics from crafted traces") {
  const ModelSpec model{ModelKind::LGSS};
  const int K = 600, burn = 100;
  RngStream rng(5, 0);

  std::vector<ChainTrace> traces;
  for (int i = 0; i < 3; ++i) {
    ChainTrace t;
    t.theta0 = vec3(0.0, 0.5, 0.0);
    t.warmup = 20;
    t.burn_in = burn;
    for (int k = 0; k < K; ++k) {
      ChainIter it;
      it.theta = vec3(0.01 * rng.normal(), 0.5 + 0.01 * rng.normal(), 0.01 * rng.normal());
      it.accepted = (k % (i + 2)) == 0;
      it.corrected = k >= t.warmup && (k % 4) == 0;
      it.time_us = 1000.0;
      t.iters.push_back(std::move(it));
    }
    traces.push_back(std::move(t));
  }

  const MetricsReport rep = summarize(traces, burn, model);
  CHECK(rep.n_traces == 3);
  REQUIRE(rep.accept.size() == 3);

  // acceptance: fraction of accepted among iterations burn..K-1
  for (int i = 0; i < 3; ++i) {
    int acc = 0;
    for (int k = burn; k < K; ++k) acc += (k % (i + 2)) == 0 ? 1 : 0;
    CHECK(rep.accept[i] == doctest::Approx(static_cast<double>(acc) / (K - burn)).epsilon(1e-15));
  }
  CHECK(rep.acceptance_rate == median(rep.accept));

  // corrections: fraction among post-warmup iterations
  for (int i = 0; i < 3; ++i) {
    int cor = 0;
    for (int k = 20; k < K; ++k) cor += (k % 4) == 0 ? 1 : 0;
    CHECK(rep.corrected[i] ==
          doctest::Approx(static_cast<double>(cor) / (K - 20)).epsilon(1e-15));
  }

  // iid series: every max IF close to 1; unit iteration time carries through
  for (double f : rep.max_if) CHECK(f == doctest::Approx(1.0).epsilon(0.35));
  CHECK(rep.median_iter_time_ms == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.samp_time_ms == doctest::Approx(rep.median_iter_time_ms * rep.median_max_if)
                                .epsilon(1e-12));
  CHECK(rep.iqr_max_if == doctest::Approx(quantile(rep.max_if, 0.75) -
                                          quantile(rep.max_if, 0.25))
                              .epsilon(1e-12));

  CHECK_THROWS_AS(summarize({}, 0, model), std::invalid_argument);
  CHECK_THROWS_AS(summarize(traces, K, model), std::invalid_argument);
}

TEST_CASE("posterior_summary histograms integrate to one and the mean is natural") {
  const ModelSpec model{ModelKind::LGSS};
  const int K = 2000, burn = 200;
  RngStream rng(9, 0);

  ChainTrace t;
  t.theta0 = vec3(0.0, 0.5, 0.0);
  Eigen::VectorXd hand = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < K; ++k) {
    ChainIter it;
    it.theta = vec3(0.2 * rng.normal(), 0.5 + 0.1 * rng.normal(), 0.1 * rng.normal());
    if (k >= burn) hand += natural_state(model, it.theta);
    t.iters.push_back(std::move(it));
  }
  hand /= (K - burn);

  const PosteriorSummary s = posterior_summary(t, burn, 40, model);
  CHECK((s.mean - hand).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(s.hists.size() == 3);
  for (const auto& h : s.hists) {
    REQUIRE(h.left.size() == 40);
    double mass = 0.0;
    for (std::size_t b = 0; b < h.left.size(); ++b) {
      CHECK(h.right[b] > h.left[b]);
      mass += h.density[b] * (h.right[b] - h.left[b]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(posterior_summary(t, K, 40, model), std::invalid_argument);
  CHECK_THROWS_AS(posterior_summary(t, 0, 0, model), std::invalid_argument);
}

TEST_CASE("posterior_summary handles a constant chain") {
  const ModelSpec model{ModelKind::LGSS};
  ChainTrace t;
  t.theta0 = vec3(0.1, 0.2, 0.3);
  for (int k = 0; k < 50; ++k) {
    ChainIter it;
    it.theta = vec3(0.1, 0.2, 0.3);
    t.iters.push_back(std::move(it));
  }
  const PosteriorSummary s = posterior_summary(t, 0, 10, model);
  for (const auto& h : s.hists) {
    double mass = 0.0;
    for (std::size_t b = 0; b < h.left.size(); ++b)
      mass += h.density[b] * (h.right[b] - h.left[b]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(s.mean(0) == doctest::Approx(0.1).epsilon(1e-12));
}
