#include "qnmh/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qnmh {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double iact(const std::vector<double>& x, int block) {
  const int n = static_cast<int>(x.size());
  if (n < 10) throw std::invalid_argument("iact: series shorter than 10");
  if (block < 1) throw std::invalid_argument("iact: block must be >= 1");
  double mean = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("iact: non-finite value");
    mean += v;
  }
  mean /= n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (!(c0 > 0.0)) return std::numeric_limits<double>::infinity();

  const int cap = std::min(n / 2, 1000);
  double s = 0.0;
  for (int k = 1; k <= cap;) {
    double bsum = 0.0;
    for (int j = 0; j < block && k <= cap; ++j, ++k) {
      double ck = 0.0;
      for (int t = 0; t + k < n; ++t) ck += (x[t] - mean) * (x[t + k] - mean);
      bsum += ck / n / c0;
    }
    if (bsum <= 0.0) break;
    s += bsum;
  }
  return 1.0 + 2.0 * s;
}

Eigen::VectorXd natural_state(const ModelSpec& model, const Eigen::VectorXd& theta_bar) {
  return to_natural(model, ParameterVector{theta_bar, Space::Unconstrained}).values;
}

MetricsReport summarize(const std::vector<ChainTrace>& traces, int burn_in,
                        const ModelSpec& model) {
  if (traces.empty()) throw std::invalid_argument("summarize: no traces");
  const int p = model.dim();
  MetricsReport rep;
  rep.n_traces = static_cast<int>(traces.size());

  for (const auto& trace : traces) {
    const int K = static_cast<int>(trace.iters.size());
    if (burn_in >= K) throw std::invalid_argument("summarize: burn_in >= trace length");

    int acc = 0;
    for (int k = burn_in; k < K; ++k) acc += trace.iters[k].accepted ? 1 : 0;
    rep.accept.push_back(static_cast<double>(acc) / (K - burn_in));

    const int post_warmup = K - trace.warmup;
    int cor = 0;
    for (int k = trace.warmup; k < K; ++k) cor += trace.iters[k].corrected ? 1 : 0;
    rep.corrected.push_back(post_warmup > 0 ? static_cast<double>(cor) / post_warmup : 0.0);

    double max_if = 0.0;
    const int block = std::max(1, trace.warmup);  // M-order chains: scan lag-M blocks
    std::vector<double> series(K - burn_in);
    for (int j = 0; j < p; ++j) {
      for (int k = burn_in; k < K; ++k)
        series[k - burn_in] = natural_state(model, trace.iters[k].theta)(j);
      max_if = std::max(max_if, iact(series, block));
    }
    rep.max_if.push_back(max_if);

    std::vector<double> times(K);
    for (int k = 0; k < K; ++k) times[k] = trace.iters[k].time_us / 1000.0;
    rep.iter_ms.push_back(median(std::move(times)));
  }

  rep.acceptance_rate = median(rep.accept);
  rep.correction_fraction = median(rep.corrected);
  rep.median_max_if = median(rep.max_if);
  rep.iqr_max_if = quantile(rep.max_if, 0.75) - quantile(rep.max_if, 0.25);
  rep.median_iter_time_ms = median(rep.iter_ms);
  rep.samp_time_ms = rep.median_iter_time_ms * rep.median_max_if;
  return rep;
}

PosteriorSummary posterior_summary(const ChainTrace& trace, int burn_in, int bins,
                                   const ModelSpec& model) {
  const int K = static_cast<int>(trace.iters.size());
  if (burn_in >= K) throw std::invalid_argument("posterior_summary: burn_in >= trace length");
  if (bins < 1) throw std::invalid_argument("posterior_summary: bins < 1");
  const int p = model.dim();
  const int n = K - burn_in;

  PosteriorSummary out;
  out.mean = Eigen::VectorXd::Zero(p);
  std::vector<std::vector<double>> series(p, std::vector<double>(n));
  for (int k = burn_in; k < K; ++k) {
    const Eigen::VectorXd nat = natural_state(model, trace.iters[k].theta);
    out.mean += nat;
    for (int j = 0; j < p; ++j) series[j][k - burn_in] = nat(j);
  }
  out.mean /= n;

  for (int j = 0; j < p; ++j) {
    const auto [mn_it, mx_it] = std::minmax_element(series[j].begin(), series[j].end());
    double lo = *mn_it, hi = *mx_it;
    if (!(hi > lo)) {  // constant series: single unit-width bin
      lo -= 0.5;
      hi += 0.5;
    }
    Histogram h;
    const int nb = (hi - lo) > 0 ? bins : 1;
    const double width = (hi - lo) / nb;
    std::vector<int> counts(nb, 0);
    for (double v : series[j]) {
      int b = static_cast<int>((v - lo) / width);
      if (b >= nb) b = nb - 1;
      if (b < 0) b = 0;
      ++counts[b];
    }
    for (int b = 0; b < nb; ++b) {
      h.left.push_back(lo + b * width);
      h.right.push_back(lo + (b + 1) * width);
      h.density.push_back(counts[b] / (width * n));
    }
    out.hists.push_back(std::move(h));
  }
  return out;
}

}  // namespace qnmh
