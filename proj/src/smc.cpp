#include "qnmh/smc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>

#include "qnmh/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qnmh {

Exec resolve_exec(Exec exec) {
  if (exec != Exec::Auto) return exec;
#ifdef _OPENMP
  if (omp_get_max_threads() > 1) return Exec::OpenMP;
#endif
  return Exec::Serial;
}

namespace {

constexpr std::uint64_t kStreamProp = 0;
constexpr std::uint64_t kStreamResample = 1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// All reductions (max, sums, cumulative scans) stay serial so results are
// bit-identical between Serial and OpenMP execution.
template <class F>
inline void par_for(bool par, int n, F&& body) {
  if (par) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

void systematic_resample_into(const std::vector<double>& w, double u, std::vector<int>& out) {
  const int n = static_cast<int>(w.size());
  int j = 0;
  double cum = w[0];
  for (int k = 0; k < n; ++k) {
    const double p = (k + u) / n;
    while (cum < p && j < n - 1) cum += w[++j];
    out[k] = j;
  }
}

struct StepBuffers {
  std::vector<double> x, xprev, lw, w, einv, einvprev;
  std::vector<int> anc;
};

template <bool kSv>
ParticleSystem run_pf(const ModelSpec& model, const ParameterVector& theta,
                      const DataSet& data, const PfConfig& cfg, std::uint64_t seed) {
  const auto& v = theta.values;
  const double mu = v(0), phi = v(1), sigma_v = v(2);
  const double rho = kSv ? v(3) : 0.0;
  const double q = sigma_v * sigma_v;
  const double rho2 = rho * rho;
  const double prior_sd = std::sqrt(stationary_var(phi, sigma_v));
  // LGSS: g(y|x) = N(y; x, 0.5^2); SV: g(y|x) = N(y; 0, e^x).
  const double inv2r = kSv ? 0.0 : 0.5 / (model.obs_sd * model.obs_sd);
  const double step_const =
      kSv ? -0.5 * kLog2Pi : -0.5 * kLog2Pi - std::log(model.obs_sd);

  const int N = cfg.N;
  const int T = data.T();
  const bool par = resolve_exec(cfg.exec) == Exec::OpenMP;
  const int npairs = (N + 1) / 2;

  ParticleSystem ps;
  ps.N = N;
  ps.T = T;
  ps.step_loglik.resize(T);
  if (cfg.keep_history) {
    ps.has_history = true;
    ps.states.resize(static_cast<std::size_t>(T) * N);
    ps.weights.resize(static_cast<std::size_t>(T) * N);
    ps.ancestors.resize(static_cast<std::size_t>(std::max(T - 1, 0)) * N);
    if (kSv) ps.exp_negx.resize(static_cast<std::size_t>(T) * N);
  }
  if (T == 0) return ps;

  StepBuffers b;
  b.x.resize(N);
  b.xprev.resize(N);
  b.lw.resize(N);
  b.w.resize(N);
  b.anc.resize(N);
  if (kSv) {
    b.einv.resize(N);
    b.einvprev.resize(N);
  }

  for (int t = 1; t <= T; ++t) {
    const double y = data.y[t - 1];
    const std::uint64_t pos_base = static_cast<std::uint64_t>(t - 1) * npairs;

    if (t == 1) {
      // x_1 from the stationary marginal, weight by g(y_1 | x_1).
      par_for(par, npairs, [&](int p) {
        const NormalPair n = normal_pair_at(seed, kStreamProp, pos_base + p);
        const int i = 2 * p;
        b.x[i] = mu + prior_sd * n.first;
        if (i + 1 < N) b.x[i + 1] = mu + prior_sd * n.second;
      });
    } else {
      const double u = uniform_at(seed, kStreamResample, static_cast<std::uint64_t>(t));
      systematic_resample_into(b.w, u, b.anc);
      par_for(par, N, [&](int i) {
        b.xprev[i] = b.x[b.anc[i]];
        if (kSv) b.einvprev[i] = b.einv[b.anc[i]];
      });
      if (cfg.keep_history)
        std::memcpy(&ps.ancestors[static_cast<std::size_t>(t - 2) * N], b.anc.data(),
                    sizeof(int) * N);

      const double yprev = data.y[t - 2];
      std::atomic<bool> pd_ok{true};
      par_for(par, npairs, [&](int p) {
        const NormalPair n = normal_pair_at(seed, kStreamProp, pos_base + p);
        for (int k = 0; k < 2; ++k) {
          const int i = 2 * p + k;
          if (i >= N) break;
          const double nk = (k == 0) ? n.first : n.second;
          if (kSv) {
            const double cv = q - rho2 * b.einvprev[i];
            if (!(cv > 0.0)) {
              pd_ok.store(false, std::memory_order_relaxed);
              b.x[i] = 0.0;
              continue;
            }
            const double m = mu + phi * (b.xprev[i] - mu) + rho * b.einvprev[i] * yprev;
            b.x[i] = m + std::sqrt(cv) * nk;
          } else {
            b.x[i] = mu + phi * (b.xprev[i] - mu) + sigma_v * nk;
          }
        }
      });
      if (kSv && !pd_ok.load(std::memory_order_relaxed)) {
        for (int i = 0; i < N; ++i)
          if (!(q - rho2 * b.einvprev[i] > 0.0)) throw SvCovarianceError(t - 1, b.xprev[i]);
      }
    }

    par_for(par, N, [&](int i) {
      if (kSv) {
        b.einv[i] = std::exp(-b.x[i]);
        b.lw[i] = -0.5 * (b.x[i] + y * y * b.einv[i]);
      } else {
        const double d = y - b.x[i];
        b.lw[i] = -d * d * inv2r;
      }
    });

    double mx = kNegInf;
    for (int i = 0; i < N; ++i)
      if (b.lw[i] > mx) mx = b.lw[i];
    if (!std::isfinite(mx)) throw ParticleCollapse(t);
    par_for(par, N, [&](int i) { b.w[i] = std::exp(b.lw[i] - mx); });
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += b.w[i];
    if (!(sum > 0.0) || !std::isfinite(sum)) throw ParticleCollapse(t);
    ps.step_loglik[t - 1] = mx + std::log(sum / N) + step_const;
    ps.loglik += ps.step_loglik[t - 1];
    const double inv_sum = 1.0 / sum;
    par_for(par, N, [&](int i) { b.w[i] *= inv_sum; });

    if (cfg.keep_history) {
      const std::size_t row = static_cast<std::size_t>(t - 1) * N;
      std::memcpy(&ps.states[row], b.x.data(), sizeof(double) * N);
      std::memcpy(&ps.weights[row], b.w.data(), sizeof(double) * N);
      if (kSv) std::memcpy(&ps.exp_negx[row], b.einv.data(), sizeof(double) * N);
    }
  }
  return ps;
}

// Complete-data score increments in natural coordinates, accumulated with the
// smoothing weights. The latent path starts at x_1 ~ N(mu, P0) (x_0 is
// marginalized analytically), so the initial term differentiates that density.
struct ScoreAccum {
  double mu, phi, sigma_v, rho;
  double q, p0, inv_p0, k_phi, k_sv;
  Eigen::VectorXd g;

  ScoreAccum(const ModelSpec& model, const ParameterVector& theta)
      : g(Eigen::VectorXd::Zero(model.dim())) {
    const auto& v = theta.values;
    mu = v(0);
    phi = v(1);
    sigma_v = v(2);
    rho = model.kind == ModelKind::SVLeverage ? v(3) : 0.0;
    q = sigma_v * sigma_v;
    p0 = stationary_var(phi, sigma_v);
    inv_p0 = 1.0 / p0;
    k_phi = 2.0 * phi * p0 / (1.0 - phi * phi);
    k_sv = 2.0 * p0 / sigma_v;
  }

  void init_term(double w, double x1) {
    const double d = x1 - mu;
    g(0) += w * d * inv_p0;
    const double c = 0.5 * inv_p0 * (d * d * inv_p0 - 1.0);
    g(1) += w * c * k_phi;
    g(2) += w * c * k_sv;
  }

  void lgss_trans(double w, double xp, double xc) {
    const double e = xc - mu - phi * (xp - mu);
    g(0) += w * e * (1.0 - phi) / q;
    g(1) += w * e * (xp - mu) / q;
    g(2) += w * (e * e / q - 1.0) / sigma_v;
  }

  void sv_trans(double w, double xp, double einvp, double yprev, double xc) {
    const double s2 = q - rho * rho * einvp;
    const double is2 = 1.0 / s2;
    const double e = xc - mu - phi * (xp - mu) - rho * einvp * yprev;
    const double c = 0.5 * is2 * (e * e * is2 - 1.0);
    g(0) += w * e * is2 * (1.0 - phi);
    g(1) += w * e * is2 * (xp - mu);
    g(2) += w * c * 2.0 * sigma_v;
    g(3) += w * (e * is2 * einvp * yprev - c * 2.0 * rho * einvp);
  }
};

Eigen::VectorXd smoothed_score_natural(const ModelSpec& model, const ParameterVector& theta,
                                       const DataSet& data, const ParticleSystem& ps,
                                       int lag) {
  const int N = ps.N, T = ps.T;
  const bool sv = model.kind == ModelKind::SVLeverage;
  ScoreAccum acc(model, theta);
  std::vector<int> idx(N);
  std::vector<double> wagg(N);

  for (int t = 1; t <= T; ++t) {
    const int tau = std::min(t + lag, T);
    for (int i = 0; i < N; ++i) {
      int j = i;
      for (int u = tau; u > t; --u) j = ps.ancestor(u, j);
      idx[i] = j;
    }
    std::fill(wagg.begin(), wagg.end(), 0.0);
    for (int i = 0; i < N; ++i) wagg[idx[i]] += ps.weight(tau, i);

    if (t == 1) {
      for (int j = 0; j < N; ++j)
        if (wagg[j] > 0.0) acc.init_term(wagg[j], ps.state(1, j));
    } else {
      const double yprev = data.y[t - 2];
      for (int j = 0; j < N; ++j) {
        if (wagg[j] <= 0.0) continue;
        const int a = ps.ancestor(t, j);
        if (sv)
          acc.sv_trans(wagg[j], ps.state(t - 1, a), ps.exp_negx[(t - 2) * static_cast<std::size_t>(N) + a],
                       yprev, ps.state(t, j));
        else
          acc.lgss_trans(wagg[j], ps.state(t - 1, a), ps.state(t, j));
      }
    }
  }
  return acc.g;
}

}  // namespace

std::vector<int> systematic_resample(const std::vector<double>& weights, double u) {
  if (weights.empty()) throw std::invalid_argument("systematic_resample: empty weights");
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (!(sum > 0.0) || !std::isfinite(sum)) throw ParticleCollapse(-1);
  std::vector<int> out(weights.size());
  systematic_resample_into(weights, u, out);
  return out;
}

ParticleSystem bootstrap_pf(const ModelSpec& model, const ParameterVector& theta,
                            const DataSet& data, const PfConfig& cfg, std::uint64_t seed) {
  if (theta.space != Space::Natural)
    throw std::logic_error("bootstrap_pf: expected natural-space parameters");
  if (cfg.N < 2) throw std::invalid_argument("bootstrap_pf: N < 2");
  if (!in_support(model, theta))
    throw std::invalid_argument("bootstrap_pf: parameters outside model support");
  for (double y : data.y)
    if (!std::isfinite(y)) throw std::invalid_argument("bootstrap_pf: non-finite observation");

  if (model.kind == ModelKind::SVLeverage)
    return run_pf<true>(model, theta, data, cfg, seed);
  return run_pf<false>(model, theta, data, cfg, seed);
}

ScoreResult fixed_lag_score(const ModelSpec& model, const ParameterVector& theta_bar,
                            const DataSet& data, const PfConfig& cfg, int lag,
                            std::uint64_t seed) {
  if (lag < 1) throw std::invalid_argument("fixed_lag_score: lag < 1");
  const ParameterVector theta = to_natural(model, theta_bar);
  if (!in_support(model, theta))
    throw std::invalid_argument("fixed_lag_score: parameters outside model support");

  PfConfig hist_cfg = cfg;
  hist_cfg.keep_history = true;
  const ParticleSystem ps = bootstrap_pf(model, theta, data, hist_cfg, seed);

  Eigen::VectorXd g_nat = Eigen::VectorXd::Zero(model.dim());
  if (data.T() > 0) g_nat = smoothed_score_natural(model, theta, data, ps, lag);

  const Eigen::VectorXd scale = transform_scale(model, theta);
  ScoreResult out;
  out.loglik = ps.loglik;
  out.grad = scale.cwiseProduct(g_nat + log_prior_grad(theta, model.prior())) +
             log_jacobian_grad(model, theta_bar);
  return out;
}

}  // namespace qnmh
