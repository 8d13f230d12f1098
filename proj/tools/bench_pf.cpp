// Kernel benchmark: bootstrap PF under the serial and OpenMP execution
// policies on the same dataset and seed. The two must agree bit-for-bit
// (positional RNG), so this doubles as a quick reproducibility check.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "qnmh/models.hpp"
#include "qnmh/smc.hpp"

using namespace qnmh;

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double time_pf(const ModelSpec& model, const ParameterVector& theta, const DataSet& data,
               PfConfig cfg, std::uint64_t seed, int reps, double* loglik) {
  std::vector<double> ms;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const ParticleSystem ps = bootstrap_pf(model, theta, data, cfg, seed);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    *loglik = ps.loglik;
  }
  return median_of(ms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bootstrap particle filter benchmark: serial vs OpenMP"};
  std::string model_name = "lgss";
  int T = 500, N = 4000, reps = 5;
  std::uint64_t seed = 1;
  app.add_option("--model", model_name)->check(CLI::IsMember({"lgss", "sv"}));
  app.add_option("--T", T)->check(CLI::PositiveNumber);
  app.add_option("--N", N)->check(CLI::PositiveNumber);
  app.add_option("--reps", reps)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  const bool lgss = model_name == "lgss";
  const ModelSpec model{lgss ? ModelKind::LGSS : ModelKind::SVLeverage};
  Eigen::VectorXd nat(model.dim());
  if (lgss)
    nat << 0.2, 0.5, 1.0;
  else
    nat << 1.5, 0.95, 0.25, -0.1;
  const ParameterVector theta{nat, Space::Natural};
  const DataSet data = lgss ? simulate_lgss(theta, T, seed) : simulate_sv(theta, T, seed);

  PfConfig cfg;
  cfg.N = N;

  double ll_serial = 0.0, ll_omp = 0.0;
  cfg.exec = Exec::Serial;
  const double ms_serial = time_pf(model, theta, data, cfg, seed, reps, &ll_serial);
  cfg.exec = Exec::OpenMP;
  const double ms_omp = time_pf(model, theta, data, cfg, seed, reps, &ll_omp);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("model=%s T=%d N=%d reps=%d threads=%d\n", model_name.c_str(), T, N, reps,
              threads);
  std::printf("%-8s %10s %22s\n", "exec", "ms", "loglik");
  std::printf("%-8s %10.3f %22.15g\n", "serial", ms_serial, ll_serial);
  std::printf("%-8s %10.3f %22.15g\n", "openmp", ms_omp, ll_omp);
  if (ll_serial != ll_omp) {
    std::printf("MISMATCH: serial and OpenMP log-likelihoods differ\n");
    return 1;
  }
  std::printf("bit-identical: yes  speedup=%.2fx\n", ms_serial / ms_omp);
  return 0;
}
