#include "qnmh/sampler.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qnmh/stats.hpp"

namespace qnmh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Stream id for the chain's own draws; evaluation seeds use derived keys.
constexpr std::uint64_t kChainStream = 0x636861696e;

Eigen::MatrixXd resolve_precond(const ProposalConfig& cfg, int p) {
  if (cfg.precond.size() == 0) return Eigen::MatrixXd::Identity(p, p);
  if (cfg.precond.rows() != p || cfg.precond.cols() != p)
    throw std::invalid_argument("run_chain: preconditioner dimension mismatch");
  return cfg.precond;
}

// Prefix sums of states and their outer products: O(p^2) windowed sample
// covariances for the hyb correction.
class PrefixCov {
 public:
  explicit PrefixCov(int p) {
    s1_.push_back(Eigen::VectorXd::Zero(p));
    s2_.push_back(Eigen::MatrixXd::Zero(p, p));
  }

  void push(const Eigen::VectorXd& th) {
    s1_.push_back(s1_.back() + th);
    s2_.push_back(s2_.back() + th * th.transpose());
  }

  int count() const { return static_cast<int>(s1_.size()) - 1; }

  // Sample covariance over pushed states [a, b); false when degenerate.
  bool cov(int a, int b, Eigen::MatrixXd& out) const {
    const int n = b - a;
    if (a < 0 || b > count() || n < 2) return false;
    const Eigen::VectorXd mean = (s1_[b] - s1_[a]) / n;
    Eigen::MatrixXd c = (s2_[b] - s2_[a] - n * mean * mean.transpose()) / (n - 1);
    c = 0.5 * (c + c.transpose()).eval();
    const double tr = c.trace();
    if (!(tr > 1e-14) || !std::isfinite(tr)) return false;
    out = c + (1e-10 * tr) * Eigen::MatrixXd::Identity(c.rows(), c.cols());
    return true;
  }

 private:
  std::vector<Eigen::VectorXd> s1_;
  std::vector<Eigen::MatrixXd> s2_;
};

}  // namespace

bool mh_accept(double logpi_cand, double logpi_cur, double logq_rev, double logq_fwd,
               double u) {
  if (logpi_cand == kNegInf) return false;
  if (logpi_cur == kNegInf) return true;
  const double log_alpha =
      std::min(0.0, (logpi_cand - logpi_cur) + (logq_rev - logq_fwd));
  return std::log(u) <= log_alpha;
}

PmhProposal pmh_propose(const Eigen::VectorXd& theta_bar, const Eigen::VectorXd& grad,
                        const ProposalConfig& cfg, RngStream& rng) {
  const int p = static_cast<int>(theta_bar.size());
  const Eigen::MatrixXd P = resolve_precond(cfg, p);
  Eigen::VectorXd mean = theta_bar;
  if (cfg.kind == ProposalConfig::Kind::pMH1)
    mean += 0.5 * cfg.eps * cfg.eps * P * grad;
  const MvNormal q(mean, cfg.eps * cfg.eps * P);
  PmhProposal out;
  out.draw = q.sample(rng);
  out.logq_fwd = q.logpdf(out.draw);
  return out;
}

double pmh_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& center,
                  const Eigen::VectorXd& grad_at_center, const ProposalConfig& cfg) {
  const int p = static_cast<int>(center.size());
  const Eigen::MatrixXd P = resolve_precond(cfg, p);
  Eigen::VectorXd mean = center;
  if (cfg.kind == ProposalConfig::Kind::pMH1)
    mean += 0.5 * cfg.eps * cfg.eps * P * grad_at_center;
  return MvNormal(mean, cfg.eps * cfg.eps * P).logpdf(x);
}

ChainTrace run_chain(const Target& target, const ProposalConfig& cfg,
                     const Eigen::VectorXd& theta0, int K, int burn_in,
                     std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const int p = target.dim();
  if (theta0.size() != p) throw std::invalid_argument("run_chain: theta0 dimension mismatch");
  if (K <= burn_in || burn_in < 0) throw std::invalid_argument("run_chain: need K > burn_in >= 0");
  const bool qmh = cfg.kind == ProposalConfig::Kind::qMH;
  const bool need_grad = cfg.kind != ProposalConfig::Kind::pMH0;
  if (qmh && cfg.memory < 2) throw std::invalid_argument("run_chain: qMH needs memory >= 2");

  RngStream rng(seed, kChainStream);
  ChainTrace trace;
  trace.theta0 = theta0;
  trace.burn_in = burn_in;
  trace.warmup = qmh ? cfg.memory : 0;
  trace.iters.reserve(K);

  const Target::Eval e0 = target.evaluate(theta0, derive_stream(seed, 0), need_grad);
  if (!e0.ok || !std::isfinite(e0.logpost))
    throw std::runtime_error("run_chain: initial point is not evaluable");
  MemoryEntry cur{theta0, e0.grad, e0.logpost, 0};

  GradientMemory memory(qmh ? cfg.memory : 1);
  const bool track_emp = qmh && cfg.correction == Correction::Hyb &&
                         cfg.strategy != QnStrategy::dBFGS;
  PrefixCov prefix(p);
  if (qmh) {
    memory.push(cur);
    if (track_emp) prefix.push(cur.theta);
  }
  Eigen::MatrixXd sigma_emp;
  bool sigma_frozen = false;

  for (int k = 1; k <= K; ++k) {
    const auto t_start = Clock::now();
    const std::uint64_t eval_seed = derive_stream(seed, static_cast<std::uint64_t>(k));
    ChainIter rec;

    if (!qmh) {
      const PmhProposal prop = pmh_propose(cur.theta, cur.grad, cfg, rng);
      rec.candidate = prop.draw;
      Target::Eval e = target.evaluate(prop.draw, eval_seed, need_grad);
      rec.backend_failed = !e.ok;
      if (e.ok && e.logpost > kNegInf) {
        double logq_rev = 0.0, logq_fwd = 0.0;
        if (cfg.kind == ProposalConfig::Kind::pMH1) {
          logq_fwd = prop.logq_fwd;
          logq_rev = pmh_logpdf(cur.theta, prop.draw, e.grad, cfg);
        }
        if (mh_accept(e.logpost, cur.logpost, logq_rev, logq_fwd, rng.uniform())) {
          cur = MemoryEntry{prop.draw, e.grad, e.logpost, k};
          rec.accepted = true;
        }
      }
    } else if (k <= cfg.memory) {
      // Warmup: symmetric random walk, gradient still evaluated to seed the
      // memory with usable curvature pairs.
      Eigen::VectorXd cand(p);
      for (int i = 0; i < p; ++i) cand(i) = cur.theta(i) + cfg.warmup_eps * rng.normal();
      rec.candidate = cand;
      Target::Eval e = target.evaluate(cand, eval_seed, true);
      rec.backend_failed = !e.ok;
      if (e.ok && e.logpost > kNegInf &&
          mh_accept(e.logpost, cur.logpost, 0.0, 0.0, rng.uniform())) {
        cur = MemoryEntry{cand, e.grad, e.logpost, k};
        rec.accepted = true;
      }
      cur.iter = k;
      memory.push(cur);
      if (track_emp) prefix.push(cur.theta);
    } else {
      // Anchor at theta_{k-M}: propose from it, and on rejection the chain
      // returns to it.
      const MemoryEntry anchor = memory.oldest();
      CurvatureOptions opts;
      opts.strategy = cfg.strategy;
      opts.correction = cfg.correction;
      opts.delta = cfg.delta;
      if (track_emp) {
        if (!sigma_frozen) {
          const int c = prefix.count();
          const bool have = prefix.cov(std::max(cfg.memory, c / 2), c, sigma_emp);
          if (!have) sigma_emp.resize(0, 0);
          if (c >= burn_in && burn_in > 0) {
            if (!prefix.cov(burn_in / 2, burn_in, sigma_emp)) sigma_emp.resize(0, 0);
            sigma_frozen = true;
          }
        }
        if (sigma_emp.size() > 0)
          opts.sigma_emp = &sigma_emp;
        else
          opts.correction = Correction::Flip;  // no usable covariance yet
      }

      const QnProposal fwd(memory, opts, cfg.eps);
      rec.corrected = fwd.curvature().corrected != Correction::None;
      rec.fallback = fwd.curvature().fallback_identity;
      const Eigen::VectorXd cand = fwd.sample(rng);
      rec.candidate = cand;
      const double logq_fwd = fwd.logpdf(cand);

      Target::Eval e = target.evaluate(cand, eval_seed, true);
      rec.backend_failed = !e.ok;
      bool accepted = false;
      if (e.ok && e.logpost > kNegInf) {
        MemoryEntry cand_entry{cand, e.grad, e.logpost, k};
        GradientMemory shifted = memory;
        shifted.push(cand_entry);
        const QnProposal rev(shifted, cand_entry, opts, cfg.eps);
        const double logq_rev = rev.logpdf(anchor.theta);
        accepted =
            mh_accept(e.logpost, anchor.logpost, logq_rev, logq_fwd, rng.uniform());
        if (accepted) cur = std::move(cand_entry);
      }
      if (!accepted) cur = anchor;  // theta_k <- theta_{k-M}
      cur.iter = k;
      rec.accepted = accepted;
      memory.push(cur);
      if (track_emp && !sigma_frozen) prefix.push(cur.theta);
    }

    rec.theta = cur.theta;
    rec.logpost = cur.logpost;
    rec.grad = cur.grad;
    rec.time_us = std::chrono::duration<double, std::micro>(Clock::now() - t_start).count();
    trace.iters.push_back(std::move(rec));
  }
  return trace;
}

Eigen::MatrixXd pilot_preconditioner(const ChainTrace& trace, int begin) {
  const int n = static_cast<int>(trace.iters.size());
  if (begin < 0) begin = n / 2;
  if (begin >= n) throw std::invalid_argument("pilot_preconditioner: empty segment");
  const int p = static_cast<int>(trace.iters[begin].theta.size());

  bool distinct = false;
  for (int i = begin + 1; i < n && !distinct; ++i)
    distinct = trace.iters[i].theta != trace.iters[begin].theta;
  if (!distinct)
    throw std::runtime_error("pilot_preconditioner: fewer than 2 distinct states");

  const int m = n - begin;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (int i = begin; i < n; ++i) mean += trace.iters[i].theta;
  mean /= m;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (int i = begin; i < n; ++i) {
    const Eigen::VectorXd d = trace.iters[i].theta - mean;
    cov += d * d.transpose();
  }
  cov /= (m - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();

  double jitter = std::max(1e-12, 1e-8 * cov.diagonal().maxCoeff());
  for (int attempt = 0; attempt < 40; ++attempt) {
    const Eigen::MatrixXd c = cov + jitter * Eigen::MatrixXd::Identity(p, p);
    if (Eigen::LLT<Eigen::MatrixXd>(c).info() == Eigen::Success) return c;
    jitter *= 10.0;
  }
  throw std::runtime_error("pilot_preconditioner: could not produce an SPD matrix");
}

}  // namespace qnmh
