#include "qnmh/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qnmh {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

static std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  return out;
}

void write_dataset_csv(const std::string& path, const DataSet& data) {
  auto out = open_out(path);
  const bool states = data.has_states();
  out << (states ? "t,y,x\n" : "t,y\n");
  for (int t = 1; t <= data.T(); ++t) {
    out << t << ',' << format_full(data.y[t - 1]);
    if (states) out << ',' << format_full(data.x[t]);
    out << '\n';
  }
}

DataSet read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty dataset '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool states = line == "t,y,x";
  if (!states && line != "t,y")
    throw std::runtime_error("io: dataset '" + path + "' must start with 't,y' or 't,y,x'");

  DataSet data;
  if (states) data.x.push_back(0.0);  // x_0 placeholder (lives in the sidecar)
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // t, ignored (rows are 1..T in order)
    if (!std::getline(ss, cell, ','))
      throw std::runtime_error("io: malformed dataset row in '" + path + "'");
    data.y.push_back(std::stod(cell));
    if (states) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("io: missing state column in '" + path + "'");
      data.x.push_back(std::stod(cell));
    }
  }
  if (data.y.empty()) throw std::runtime_error("io: dataset '" + path + "' has no rows");
  return data;
}

void write_trace_csv(const std::string& path, const ChainTrace& trace,
                     const ModelSpec& model) {
  auto out = open_out(path);
  const int p = model.dim();
  out << "k";
  for (int j = 1; j <= p; ++j) out << ",theta_" << j;
  out << ",logpost,accepted,corrected,time_us\n";
  for (std::size_t k = 0; k < trace.iters.size(); ++k) {
    const ChainIter& it = trace.iters[k];
    const Eigen::VectorXd nat = natural_state(model, it.theta);
    out << (k + 1);
    for (int j = 0; j < p; ++j) out << ',' << format_full(nat(j));
    out << ',' << format_full(it.logpost) << ',' << (it.accepted ? 1 : 0) << ','
        << (it.corrected ? 1 : 0) << ',' << format_full(it.time_us) << '\n';
  }
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  auto out = open_out(path);
  out << "bin_left,bin_right,density\n";
  for (std::size_t i = 0; i < hist.density.size(); ++i)
    out << format_full(hist.left[i]) << ',' << format_full(hist.right[i]) << ','
        << format_full(hist.density[i]) << '\n';
}

std::string provenance_json(const ExperimentConfig& config, std::uint64_t seed,
                            const std::string& extra_json) {
  nlohmann::json j;
  j["version"] = kVersionString;
  j["seed"] = seed;
  j["config_hash"] = config.hash();
  nlohmann::json cfg;
  std::stringstream ss(config.canonical());
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  if (!extra_json.empty()) j["extra"] = nlohmann::json::parse(extra_json);
  return j.dump(2);
}

void write_sidecar(const std::string& artifact_path, const ExperimentConfig& config,
                   std::uint64_t seed, const std::string& extra_json) {
  auto out = open_out(artifact_path + ".json");
  out << provenance_json(config, seed, extra_json) << '\n';
}

static bool iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

PriceSeries read_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("io: empty price file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,close")
    throw std::runtime_error("io: price file must have header 'date,close'");

  PriceSeries ps;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("io: malformed price row '" + line + "'");
    const std::string date = line.substr(0, comma);
    if (!iso_date(date))
      throw std::runtime_error("io: expected ISO date (YYYY-MM-DD), got '" + date + "'");
    if (!ps.dates.empty() && date <= ps.dates.back())
      throw std::runtime_error("io: dates must be strictly increasing at '" + date + "'");
    const double close = std::stod(line.substr(comma + 1));
    if (!(close > 0.0))
      throw std::runtime_error("io: non-positive price at '" + date + "'");
    ps.dates.push_back(date);
    ps.close.push_back(close);
  }
  if (ps.close.size() < 2)
    throw std::runtime_error("io: need at least 2 price rows for returns");
  return ps;
}

DataSet log_returns(const PriceSeries& prices) {
  DataSet data;
  data.y.reserve(prices.close.size() - 1);
  for (std::size_t i = 1; i < prices.close.size(); ++i)
    data.y.push_back(100.0 * (std::log(prices.close[i]) - std::log(prices.close[i - 1])));
  return data;
}

}  // namespace qnmh
