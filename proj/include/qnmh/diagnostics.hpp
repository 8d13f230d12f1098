#ifndef QNMH_DIAGNOSTICS_HPP
#define QNMH_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <vector>

#include "qnmh/models.hpp"
#include "qnmh/sampler.hpp"

namespace qnmh {

// Inefficiency factor 1 + 2*sum(acf), summed to the first non-positive
// autocorrelation and capped at min(n/2, 1000). Zero-variance series maps to
// the +inf sentinel.
// An M-order chain anchors its proposal M iterations back, which concentrates
// autocorrelation at lag multiples of M with near-zero values in between; a
// lag-by-lag scan would truncate before the first spike. `block` widens the
// scan unit: autocorrelations are summed in blocks of that many lags and
// truncation happens at the first non-positive block sum (block = 1 recovers
// the plain rule, and is right for first-order chains).
double iact(const std::vector<double>& series, int block = 1);

struct MetricsReport {
  int n_traces = 0;
  double acceptance_rate = 0.0;      // median over traces, post burn-in
  double correction_fraction = 0.0;  // median over traces, post warmup
  double median_max_if = 0.0;
  double iqr_max_if = 0.0;
  double median_iter_time_ms = 0.0;
  double samp_time_ms = 0.0;  // median iter time * median max IF

  // per-trace values backing the medians
  std::vector<double> max_if, accept, corrected, iter_ms;
};

// Table-1 style metrics: IF on post-burn-in natural-coordinate series, max
// over parameters per trace, median and IQR across replications.
MetricsReport summarize(const std::vector<ChainTrace>& traces, int burn_in,
                        const ModelSpec& model);

struct Histogram {
  std::vector<double> left, right, density;  // density integrates to 1
};

struct PosteriorSummary {
  Eigen::VectorXd mean;  // natural coordinates
  std::vector<Histogram> hists;
};

PosteriorSummary posterior_summary(const ChainTrace& trace, int burn_in, int bins,
                                   const ModelSpec& model);

// Maps a stored unconstrained chain state to natural coordinates.
Eigen::VectorXd natural_state(const ModelSpec& model, const Eigen::VectorXd& theta_bar);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);  // linear interpolation

}  // namespace qnmh

#endif  // QNMH_DIAGNOSTICS_HPP
