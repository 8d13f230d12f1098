#include "qnmh/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qnmh {

namespace {

const std::set<std::string> kSchema = {
    "model",     "backend",    "proposal",   "eps",        "memory",
    "warmup_eps", "delta",     "particles",  "lag",        "iters",
    "burn_in",   "replications", "seed",     "data",       "out",
    "sim_T",     "theta_true", "theta_init", "proposals",  "pilot_iters",
    "pilot_eps", "pilot_inflate", "bins",    "thin",       "jobs"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return i;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::vector<std::string> parse_string_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (const std::string t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

bool is_valid_proposal_token(const std::string& token) {
  static const std::set<std::string> valid = {
      "pmh0",       "pmh1",      "dbfgs",     "ibfgs-flip", "ibfgs-reg",
      "ibfgs-hyb",  "ebfgs-flip", "ebfgs-reg", "ebfgs-hyb"};
  return valid.count(token) > 0;
}

double ExperimentConfig::resolved_eps() const {
  if (eps > 0.0) return eps;
  const bool kalman = backend == Backend::Kalman;
  if (proposal == "pmh0") return kalman ? 1.37 : 1.48;
  if (proposal == "pmh1") return kalman ? 0.57 : 0.47;
  return 0.5;
}

int ExperimentConfig::resolved_particles() const {
  if (particles > 0) return particles;
  return model == ModelKind::LGSS ? 1000 : 1500;
}

std::vector<double> ExperimentConfig::resolved_theta_true() const {
  if (!theta_true.empty()) return theta_true;
  if (model == ModelKind::LGSS) return {0.2, 0.5, 1.0};
  return {1.5, 0.95, 0.25, -0.1};
}

std::vector<double> ExperimentConfig::resolved_theta_init() const {
  if (!theta_init.empty()) return theta_init;
  return resolved_theta_true();
}

std::vector<std::string> ExperimentConfig::resolved_proposals() const {
  if (!proposals.empty()) return proposals;
  if (backend == Backend::Kalman)
    return {"pmh0", "pmh1", "dbfgs", "ibfgs-flip", "ibfgs-reg", "ibfgs-hyb", "ebfgs-hyb"};
  return {"pmh0", "pmh1", "dbfgs", "ibfgs-hyb"};
}

ProposalConfig ExperimentConfig::proposal_config(const std::string& token) const {
  if (!is_valid_proposal_token(token))
    throw std::invalid_argument("config: unknown proposal '" + token + "'");
  ProposalConfig pc;
  pc.memory = memory;
  pc.delta = delta;
  pc.warmup_eps = warmup_eps;

  ExperimentConfig tmp = *this;
  tmp.proposal = token;
  pc.eps = eps > 0.0 ? eps : tmp.resolved_eps();

  if (token == "pmh0") {
    pc.kind = ProposalConfig::Kind::pMH0;
  } else if (token == "pmh1") {
    pc.kind = ProposalConfig::Kind::pMH1;
  } else {
    pc.kind = ProposalConfig::Kind::qMH;
    if (token == "dbfgs") {
      pc.strategy = QnStrategy::dBFGS;
      pc.correction = Correction::None;
    } else {
      pc.strategy = token.rfind("ibfgs", 0) == 0 ? QnStrategy::iBFGS : QnStrategy::eBFGS;
      const std::string corr = token.substr(token.find('-') + 1);
      pc.correction = corr == "flip"  ? Correction::Flip
                      : corr == "reg" ? Correction::Reg
                                      : Correction::Hyb;
    }
  }
  return pc;
}

ExperimentConfig parse_config(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv)
    if (!kSchema.count(k)) throw std::invalid_argument("config: unknown key '" + k + "'");

  ExperimentConfig c;
  if (auto it = kv.find("model"); it != kv.end()) {
    if (it->second == "lgss")
      c.model = ModelKind::LGSS;
    else if (it->second == "sv")
      c.model = ModelKind::SVLeverage;
    else
      throw std::invalid_argument("config: model must be 'lgss' or 'sv'");
  }
  if (auto it = kv.find("backend"); it != kv.end()) {
    if (it->second == "kalman")
      c.backend = Backend::Kalman;
    else if (it->second == "particle")
      c.backend = Backend::Particle;
    else
      throw std::invalid_argument("config: backend must be 'kalman' or 'particle'");
  } else if (c.model == ModelKind::SVLeverage) {
    c.backend = Backend::Particle;  // the exact backend has no SV recursion
  }
  if (c.backend == Backend::Kalman && c.model != ModelKind::LGSS)
    throw std::invalid_argument("config: the kalman backend supports only the LGSS model");

  if (auto it = kv.find("proposal"); it != kv.end()) {
    if (!is_valid_proposal_token(it->second))
      throw std::invalid_argument("config: unknown proposal '" + it->second + "'");
    c.proposal = it->second;
  }
  if (auto it = kv.find("eps"); it != kv.end()) c.eps = parse_double("eps", it->second);
  if (auto it = kv.find("memory"); it != kv.end())
    c.memory = static_cast<int>(parse_int("memory", it->second));
  if (auto it = kv.find("warmup_eps"); it != kv.end())
    c.warmup_eps = parse_double("warmup_eps", it->second);
  if (auto it = kv.find("delta"); it != kv.end()) c.delta = parse_double("delta", it->second);
  if (auto it = kv.find("particles"); it != kv.end())
    c.particles = static_cast<int>(parse_int("particles", it->second));
  if (auto it = kv.find("lag"); it != kv.end())
    c.lag = static_cast<int>(parse_int("lag", it->second));
  if (auto it = kv.find("iters"); it != kv.end())
    c.iters = static_cast<int>(parse_int("iters", it->second));
  if (auto it = kv.find("burn_in"); it != kv.end())
    c.burn_in = static_cast<int>(parse_int("burn_in", it->second));
  if (auto it = kv.find("replications"); it != kv.end())
    c.replications = static_cast<int>(parse_int("replications", it->second));
  if (auto it = kv.find("seed"); it != kv.end())
    c.seed = static_cast<std::uint64_t>(parse_int("seed", it->second));
  if (auto it = kv.find("data"); it != kv.end()) c.data = it->second;
  if (auto it = kv.find("out"); it != kv.end()) c.out = it->second;
  if (auto it = kv.find("sim_T"); it != kv.end())
    c.sim_T = static_cast<int>(parse_int("sim_T", it->second));
  if (auto it = kv.find("theta_true"); it != kv.end())
    c.theta_true = parse_double_list("theta_true", it->second);
  if (auto it = kv.find("theta_init"); it != kv.end())
    c.theta_init = parse_double_list("theta_init", it->second);
  if (auto it = kv.find("proposals"); it != kv.end()) {
    c.proposals = parse_string_list(it->second);
    for (const auto& t : c.proposals)
      if (!is_valid_proposal_token(t))
        throw std::invalid_argument("config: unknown proposal '" + t + "' in proposals");
  }
  if (auto it = kv.find("pilot_iters"); it != kv.end())
    c.pilot_iters = static_cast<int>(parse_int("pilot_iters", it->second));
  if (auto it = kv.find("pilot_eps"); it != kv.end())
    c.pilot_eps = parse_double("pilot_eps", it->second);
  if (auto it = kv.find("pilot_inflate"); it != kv.end())
    c.pilot_inflate = parse_double("pilot_inflate", it->second);
  if (auto it = kv.find("bins"); it != kv.end())
    c.bins = static_cast<int>(parse_int("bins", it->second));
  if (auto it = kv.find("thin"); it != kv.end())
    c.thin = static_cast<int>(parse_int("thin", it->second));
  if (auto it = kv.find("jobs"); it != kv.end())
    c.jobs = static_cast<int>(parse_int("jobs", it->second));

  const int p = c.model_spec().dim();
  if (!c.theta_true.empty() && static_cast<int>(c.theta_true.size()) != p)
    throw std::invalid_argument("config: theta_true has wrong dimension");
  if (!c.theta_init.empty() && static_cast<int>(c.theta_init.size()) != p)
    throw std::invalid_argument("config: theta_init has wrong dimension");
  if (c.iters <= c.burn_in) throw std::invalid_argument("config: iters must exceed burn_in");
  if (c.memory < 2) throw std::invalid_argument("config: memory must be >= 2");
  if (c.lag < 1) throw std::invalid_argument("config: lag must be >= 1");
  if (c.delta <= 0.0) throw std::invalid_argument("config: delta must be positive");
  if (c.pilot_inflate <= 0.0)
    throw std::invalid_argument("config: pilot_inflate must be positive");
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (kv.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    kv[key] = val;
  }
  return parse_config(kv);
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["model"] = model == ModelKind::LGSS ? "lgss" : "sv";
  kv["backend"] = backend == Backend::Kalman ? "kalman" : "particle";
  kv["proposal"] = proposal;
  kv["eps"] = fmt(resolved_eps());
  kv["memory"] = std::to_string(memory);
  kv["warmup_eps"] = fmt(warmup_eps);
  kv["delta"] = fmt(delta);
  kv["particles"] = std::to_string(resolved_particles());
  kv["lag"] = std::to_string(lag);
  kv["iters"] = std::to_string(iters);
  kv["burn_in"] = std::to_string(burn_in);
  kv["replications"] = std::to_string(replications);
  kv["seed"] = std::to_string(seed);
  kv["data"] = data;
  kv["out"] = out;
  kv["sim_T"] = std::to_string(sim_T);
  kv["theta_true"] = join_doubles(resolved_theta_true());
  kv["theta_init"] = join_doubles(resolved_theta_init());
  kv["proposals"] = join_strings(resolved_proposals());
  kv["pilot_iters"] = std::to_string(pilot_iters);
  kv["pilot_eps"] = fmt(pilot_eps);
  kv["pilot_inflate"] = fmt(pilot_inflate);
  kv["bins"] = std::to_string(bins);
  kv["thin"] = std::to_string(thin);
  kv["jobs"] = std::to_string(jobs);

  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

}  // namespace qnmh
