#include "mlti/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mlti/tensor_io.hpp"

namespace mlti {

using nlohmann::json;

std::vector<double> FreqGrid::points() const {
  if (log) return log_space(omega_min, omega_max, count);
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = count == 1 ? omega_min
                        : omega_min + (omega_max - omega_min) * i / (count - 1);
  return out;
}

const char* to_string(Problem p) {
  switch (p) {
    case Problem::Spdiags:
      return "spdiags";
    case Problem::Heat2d:
      return "heat2d";
    default:
      return "file";
  }
}

const char* to_string(Method m) {
  switch (m) {
    case Method::TRBA:
      return "TRBA";
    case Method::TRBL:
      return "TRBL";
    case Method::TCBL:
      return "TCBL";
    default:
      return "BT";
  }
}

void ExperimentConfig::validate() const {
  if (problem != Problem::File) {
    if (N < 2) throw ConfigError("N must be at least 2");
    if (K1 < 1 || K2 < 1) throw ConfigError("K1 and K2 must be positive");
  }
  if (m_max < 1) throw ConfigError("m_max must be positive");
  if (!(eps > 0) || !(dtol >= 0) || !(sigma_tol > 0))
    throw ConfigError("eps and sigma_tol must be positive, dtol nonnegative");
  if (tol && !(*tol > 0)) throw ConfigError("tol must be positive");
  const double a = std::abs(shift_interval[0]), b = std::abs(shift_interval[1]);
  if (!(a > 0) || !(b > a)) throw ConfigError("shift_interval must satisfy 0 < |a| < |b|");
  if (!(freq_grid.omega_min < freq_grid.omega_max))
    throw ConfigError("freq_grid needs omega_min < omega_max");
  if (freq_grid.log && !(freq_grid.omega_min > 0))
    throw ConfigError("log-spaced freq_grid needs omega_min > 0");
  if (freq_grid.count < 1) throw ConfigError("freq_grid count must be positive");
  if (estimator < 0 || estimator > 6) throw ConfigError("estimator must be in 0..6");
  if (r && *r < 1) throw ConfigError("r must be positive");
  if (!(heat.c > 0) || (heat.dt && !(*heat.dt > 0)) || (heat.h && !(*heat.h > 0)))
    throw ConfigError("heat parameters must be positive");
  if (problem == Problem::File)
    for (const auto& f : files)
      if (f.empty()) throw ConfigError("problem \"file\" needs files A, B and C");
  for (const auto& cs : cases)
    if (cs[0] < 2 || cs[1] < 1 || cs[2] < 1) throw ConfigError("bad bench case dims");
}

LyapunovOptions ExperimentConfig::lyap_options() const {
  LyapunovOptions o;
  o.eps = eps;
  o.dtol = dtol;
  o.m_max = m_max;
  o.shift_interval = {shift_interval[0], shift_interval[1]};
  return o;
}

namespace {

template <class E>
E parse_enum(const json& v, const char* key,
             std::initializer_list<std::pair<const char*, E>> names) {
  const std::string s = v.get<std::string>();
  for (const auto& [n, e] : names)
    if (s == n) return e;
  throw ConfigError(std::string("unknown ") + key + " \"" + s + "\"");
}

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(std::string("unknown key \"") + k + "\" in " + where);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j, "config",
               {"problem", "N", "K1", "K2", "method", "m_max", "eps", "dtol",
                "shift_interval", "freq_grid", "seed", "tol", "estimator", "r",
                "sigma_tol", "heat", "files", "cases", "timing"});
    if (j.contains("problem"))
      c.problem = parse_enum<Problem>(j["problem"], "problem",
                                      {{"spdiags", Problem::Spdiags},
                                       {"heat2d", Problem::Heat2d},
                                       {"file", Problem::File}});
    if (j.contains("N")) c.N = j["N"].get<int>();
    if (j.contains("K1")) c.K1 = j["K1"].get<int>();
    if (j.contains("K2")) c.K2 = j["K2"].get<int>();
    if (j.contains("method"))
      c.method = parse_enum<Method>(j["method"], "method",
                                    {{"TRBA", Method::TRBA},
                                     {"TRBL", Method::TRBL},
                                     {"TCBL", Method::TCBL},
                                     {"BT", Method::BT}});
    if (j.contains("m_max")) c.m_max = j["m_max"].get<int>();
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("dtol")) c.dtol = j["dtol"].get<double>();
    if (j.contains("shift_interval")) {
      const auto v = j["shift_interval"].get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("shift_interval needs two values");
      c.shift_interval = {v[0], v[1]};
    }
    if (j.contains("freq_grid")) {
      const json& g = j["freq_grid"];
      check_keys(g, "freq_grid", {"omega_min", "omega_max", "count", "log"});
      if (g.contains("omega_min")) c.freq_grid.omega_min = g["omega_min"].get<double>();
      if (g.contains("omega_max")) c.freq_grid.omega_max = g["omega_max"].get<double>();
      if (g.contains("count")) c.freq_grid.count = g["count"].get<int>();
      if (g.contains("log")) c.freq_grid.log = g["log"].get<bool>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
    if (j.contains("estimator")) c.estimator = j["estimator"].get<int>();
    if (j.contains("r")) c.r = j["r"].get<int>();
    if (j.contains("sigma_tol")) c.sigma_tol = j["sigma_tol"].get<double>();
    if (j.contains("heat")) {
      const json& h = j["heat"];
      check_keys(h, "heat", {"c", "dt", "h"});
      if (h.contains("c")) c.heat.c = h["c"].get<double>();
      if (h.contains("dt")) c.heat.dt = h["dt"].get<double>();
      if (h.contains("h")) c.heat.h = h["h"].get<double>();
    }
    if (j.contains("files")) {
      const json& f = j["files"];
      check_keys(f, "files", {"A", "B", "C"});
      if (f.contains("A")) c.files[0] = f["A"].get<std::string>();
      if (f.contains("B")) c.files[1] = f["B"].get<std::string>();
      if (f.contains("C")) c.files[2] = f["C"].get<std::string>();
    }
    if (j.contains("cases")) {
      for (const auto& cs : j["cases"]) {
        const auto v = cs.get<std::vector<int>>();
        if (v.size() != 3) throw ConfigError("bench cases are [N, K1, K2] triples");
        c.cases.push_back({v[0], v[1], v[2]});
      }
    }
    if (j.contains("timing")) c.timing = j["timing"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = to_string(c.problem);
  j["N"] = c.N;
  j["K1"] = c.K1;
  j["K2"] = c.K2;
  j["method"] = to_string(c.method);
  j["m_max"] = c.m_max;
  j["eps"] = c.eps;
  j["dtol"] = c.dtol;
  j["shift_interval"] = {c.shift_interval[0], c.shift_interval[1]};
  j["freq_grid"] = {{"omega_min", c.freq_grid.omega_min},
                    {"omega_max", c.freq_grid.omega_max},
                    {"count", c.freq_grid.count},
                    {"log", c.freq_grid.log}};
  j["seed"] = c.seed;
  if (c.tol) j["tol"] = *c.tol;
  j["estimator"] = c.estimator;
  if (c.r) j["r"] = *c.r;
  j["sigma_tol"] = c.sigma_tol;
  json h = {{"c", c.heat.c}};
  if (c.heat.dt) h["dt"] = *c.heat.dt;
  if (c.heat.h) h["h"] = *c.heat.h;
  j["heat"] = h;
  if (c.problem == Problem::File)
    j["files"] = {{"A", c.files[0]}, {"B", c.files[1]}, {"C", c.files[2]}};
  if (!c.cases.empty()) j["cases"] = c.cases;
  j["timing"] = c.timing;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

MLTISystem build_system(const ExperimentConfig& c) {
  switch (c.problem) {
    case Problem::Spdiags:
      return gen_spdiags(c.N, c.K1, c.K2, c.seed);
    case Problem::Heat2d:
      return gen_heat2d(c.N, c.K1, c.K2, c.heat, c.seed);
    default: {
      MLTISystem sys{load_t4_real(c.files[0]), load_t4_real(c.files[1]),
                     load_t4_real(c.files[2])};
      try {
        sys.validate();
      } catch (const DimensionError& e) {
        throw ConfigError(e.what());
      }
      return sys;
    }
  }
}

ReductionRun run_reduction(const MLTISystem& sys, const ExperimentConfig& c) {
  ReductionRun out;
  switch (c.method) {
    case Method::TRBA:
    case Method::TRBL: {
      AdaptiveOptions o;
      o.m_max = c.m_max;
      o.tol = c.tol.value_or(c.eps);
      o.method = c.method == Method::TRBA ? ReduceMethod::TRBA : ReduceMethod::TRBL;
      o.estimator = c.estimator;
      o.shift_interval = {c.shift_interval[0], c.shift_interval[1]};
      AdaptiveResult r = adaptive_reduce(sys, o);
      out.reduced = std::move(r.reduced);
      out.history = std::move(r.history);
      out.shifts = std::move(r.shifts);
      out.converged = r.converged;
      break;
    }
    case Method::TCBL: {
      if (static_cast<Index>(c.m_max) * sys.inputs() > sys.n())
        throw ConfigError("m_max*K1*K2 exceeds the state dimension");
      out.reduced = project(sys, tbl(sys.A, sys.B, sys.C, c.m_max));
      break;
    }
    case Method::BT: {
      BTOptions o;
      o.r = c.r;
      o.sigma_tol = c.sigma_tol;
      o.lyap = c.lyap_options();
      BalancedReduction b = balanced_truncate(sys, o);
      out.reduced.A_m = b.A_r;
      out.reduced.B_m = b.B_r;
      out.reduced.C_m = b.C_r;
      out.reduced.V = b.V_r;
      out.reduced.W = b.W_r;
      out.reduced.m = b.r;
      out.hankel = std::move(b.hankel_values);
      out.converged = b.gramians_converged;
      break;
    }
  }
  return out;
}

std::vector<FrequencySample> run_freqresp(const MLTISystem& sys, const ExperimentConfig& c) {
  const ReductionRun run = run_reduction(sys, c);
  return freq_sweep(sys, run.reduced, c.freq_grid.points());
}

std::vector<BenchRow> run_bench(const ExperimentConfig& c) {
  std::vector<std::array<int, 3>> cases = c.cases;
  if (cases.empty()) cases.push_back({c.N, c.K1, c.K2});
  if (c.problem == Problem::File) cases = {{0, 0, 0}};
  std::vector<BenchRow> rows;
  for (const auto& cs : cases) {
    ExperimentConfig cc = c;
    cc.N = cs[0];
    cc.K1 = cs[1];
    cc.K2 = cs[2];
    std::ostringstream name;
    if (c.problem == Problem::File)
      name << "file";
    else
      name << "N=" << cs[0] << ",K=(" << cs[1] << "," << cs[2] << ")";
    for (const char* alg : {"TCBL", "TRBL"}) {
      BenchRow row;
      row.case_name = name.str();
      row.algorithm = alg;
      try {
        const MLTISystem sys = build_system(cc);
        const auto t0 = std::chrono::steady_clock::now();
        const LyapunovResult r =
            std::string(alg) == "TCBL"
                ? solve_lyapunov_classic(sys.A, sys.B, sys.C, cc.lyap_options())
                : solve_lyapunov_rational(sys.A, sys.B, sys.C, cc.lyap_options());
        const double t =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.iter = r.iterations;
        row.res = r.bounds.back();
        if (c.timing) row.time_s = t;
        row.converged = r.converged;
        row.status = r.converged ? "ok" : "not converged";
      } catch (const Error& e) {
        row.status = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

}  // namespace

std::string freqresp_csv(const std::vector<FrequencySample>& rows) {
  std::string out = "omega,norm_full,norm_reduced,error\n";
  for (const auto& r : rows)
    out += sci(r.omega) + "," + sci(r.norm_full) + "," + sci(r.norm_reduced) + "," +
           sci(r.error) + "\n";
  return out;
}

json freqresp_json(const std::vector<FrequencySample>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"omega", r.omega},
                 {"norm_full", r.norm_full},
                 {"norm_reduced", r.norm_reduced},
                 {"error", r.error}});
  return a;
}

std::string bench_text(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %-9s %5s %12s %10s  %s\n", "case", "algorithm",
                "iter", "res", "time_s", "status");
  os << buf;
  for (const auto& r : rows) {
    const std::string iter = r.iter ? std::to_string(*r.iter) : "-";
    char res[32] = "-", t[32] = "-";
    if (r.res) std::snprintf(res, sizeof res, "%.3e", *r.res);
    if (r.time_s) std::snprintf(t, sizeof t, "%.3f", *r.time_s);
    std::snprintf(buf, sizeof buf, "%-18s %-9s %5s %12s %10s  %s\n", r.case_name.c_str(),
                  r.algorithm.c_str(), iter.c_str(), res, t, r.status.c_str());
    os << buf;
  }
  return os.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "case,algorithm,iter,res,time_s\n";
  for (const auto& r : rows) {
    out += "\"" + r.case_name + "\"," + r.algorithm + ",";
    out += (r.iter ? std::to_string(*r.iter) : "") + ",";
    out += (r.res ? sci(*r.res) : "") + ",";
    out += (r.time_s ? sci(*r.time_s) : "") + "\n";
  }
  return out;
}

json bench_json(const std::vector<BenchRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    json o;
    o["case"] = r.case_name;
    o["algorithm"] = r.algorithm;
    o["iter"] = r.iter ? json(*r.iter) : json(nullptr);
    o["res"] = r.res ? json(*r.res) : json(nullptr);
    o["time_s"] = r.time_s ? json(*r.time_s) : json(nullptr);
    o["converged"] = r.converged;
    o["status"] = r.status;
    a.push_back(o);
  }
  return a;
}

}  // namespace mlti
