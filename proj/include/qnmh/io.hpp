#ifndef QNMH_IO_HPP
#define QNMH_IO_HPP

#include <string>
#include <vector>

#include "qnmh/config.hpp"
#include "qnmh/diagnostics.hpp"
#include "qnmh/models.hpp"
#include "qnmh/sampler.hpp"

namespace qnmh {

constexpr const char* kVersionString = "qnmh 0.1.0";

// Dataset CSV: header `t,y` (observations only) or `t,y,x` (synthetic with
// states); rows t = 1..T. x_0 travels in the JSON sidecar.
void write_dataset_csv(const std::string& path, const DataSet& data);
DataSet read_dataset_csv(const std::string& path);

// Trace CSV: `k,theta_1..theta_p,logpost,accepted,corrected,time_us`, states
// reported in natural coordinates. All numerics as %.17g.
void write_trace_csv(const std::string& path, const ChainTrace& trace,
                     const ModelSpec& model);

void write_histogram_csv(const std::string& path, const Histogram& hist);

// JSON provenance sidecar written next to any artifact: resolved config,
// seed, config hash, version string, plus caller-provided extras.
void write_sidecar(const std::string& artifact_path, const ExperimentConfig& config,
                   std::uint64_t seed, const std::string& extra_json = "");

// The sidecar body as a serialized JSON object (for embedding provenance
// inside JSON artifacts instead of writing a second file next to them).
std::string provenance_json(const ExperimentConfig& config, std::uint64_t seed,
                            const std::string& extra_json = "");

struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> close;
};

// Raw price CSV with header `date,close`; ISO dates, strictly increasing,
// positive prices.
PriceSeries read_price_csv(const std::string& path);

// y_t = 100 (log s_t - log s_{t-1}); T = rows - 1.
DataSet log_returns(const PriceSeries& prices);

std::string format_full(double v);  // %.17g

}  // namespace qnmh

#endif  // QNMH_IO_HPP
