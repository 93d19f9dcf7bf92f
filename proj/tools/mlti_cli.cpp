// mlti: generators, reductions, Lyapunov and balanced-truncation drivers,
// frequency sweeps and the benchmark table. Exit codes: 0 ok, 1 other
// failure, 2 bad config/input, 3 not converged, 4 numerical breakdown.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlti/experiment.hpp"
#include "mlti/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mlti;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNotConverged = 3, kBreakdown = 4 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
  std::optional<std::string> problem, method, timing;
  std::optional<int> N, K1, K2, m_max, r, estimator;
  std::optional<double> eps, tol;
};

ExperimentConfig make_config(const Globals& g) {
  json j = json::object();
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw ConfigError("cannot open config " + g.config);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config " + g.config + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }
  if (g.seed) j["seed"] = *g.seed;
  if (g.problem) j["problem"] = *g.problem;
  if (g.method) j["method"] = *g.method;
  if (g.N) j["N"] = *g.N;
  if (g.K1) j["K1"] = *g.K1;
  if (g.K2) j["K2"] = *g.K2;
  if (g.m_max) j["m_max"] = *g.m_max;
  if (g.r) j["r"] = *g.r;
  if (g.estimator) j["estimator"] = *g.estimator;
  if (g.eps) j["eps"] = *g.eps;
  if (g.tol) j["tol"] = *g.tol;
  if (g.timing) j["timing"] = *g.timing == "on";
  return config_from_json(j);
}

fs::path out_dir(const Globals& g) {
  fs::path p(g.out);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

json num_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

int cmd_gen(const Globals& g) {
  const ExperimentConfig c = make_config(g);
  const MLTISystem sys = build_system(c);
  const fs::path d = out_dir(g);
  save_t4((d / "A.t4").string(), sys.A);
  save_t4((d / "B.t4").string(), sys.B);
  save_t4((d / "C.t4").string(), sys.C);
  return kOk;
}

int cmd_reduce(const Globals& g) {
  const ExperimentConfig c = make_config(g);
  const MLTISystem sys = build_system(c);
  const ReductionRun run = run_reduction(sys, c);
  const fs::path d = out_dir(g);
  save_t4((d / "Am.t4").string(), run.reduced.A_m);
  save_t4((d / "Bm.t4").string(), run.reduced.B_m);
  save_t4((d / "Cm.t4").string(), run.reduced.C_m);
  if (g.format == "json") {
    json h = json::array();
    for (const auto& s : run.history)
      h.push_back({{"m", s.m}, {"estimate", s.estimate}, {"next_shift", num_json(s.next_shift)}});
    write_json(d / "reduce.json", {{"method", to_string(c.method)},
                                   {"m", run.reduced.m},
                                   {"converged", run.converged},
                                   {"shifts", run.shifts},
                                   {"history", h}});
  } else {
    std::string s = "m,estimate,next_shift\n";
    for (const auto& h : run.history)
      s += std::to_string(h.m) + "," + num(h.estimate) + "," + num(h.next_shift) + "\n";
    write_text(d / "history.csv", s);
  }
  if (!run.converged) {
    std::cerr << "mlti reduce: tolerance not reached within m_max=" << c.m_max << "\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_lyap(const Globals& g) {
  const ExperimentConfig c = make_config(g);
  const MLTISystem sys = build_system(c);
  const bool classic = c.method == Method::TCBL;
  const LyapunovResult r =
      classic ? solve_lyapunov_classic(sys.A, sys.B, sys.C, c.lyap_options())
              : solve_lyapunov_rational(sys.A, sys.B, sys.C, c.lyap_options());
  const fs::path d = out_dir(g);
  save_t4((d / "Z1.t4").string(), r.solution.Z1);
  save_t4((d / "Z2.t4").string(), r.solution.Z2);
  write_json(d / "lyap.json", {{"method", classic ? "TCBL" : "TRBL"},
                               {"rank", r.solution.rank},
                               {"residual_bound", r.solution.residual_bound},
                               {"iterations", r.iterations},
                               {"converged", r.converged},
                               {"shifts", r.shifts},
                               {"bounds", r.bounds}});
  if (g.format == "csv") {
    std::string s = "iteration,bound\n";
    for (std::size_t i = 0; i < r.bounds.size(); ++i)
      s += std::to_string(i + 1) + "," + num(r.bounds[i]) + "\n";
    write_text(d / "lyap_history.csv", s);
  }
  if (!r.converged) {
    std::cerr << "mlti lyap: residual bound " << r.solution.residual_bound
              << " above eps after " << r.iterations << " iterations\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_bt(const Globals& g) {
  ExperimentConfig c = make_config(g);
  c.method = Method::BT;
  const MLTISystem sys = build_system(c);
  BTOptions o;
  o.r = c.r;
  o.sigma_tol = c.sigma_tol;
  o.lyap = c.lyap_options();
  const BalancedReduction b = balanced_truncate(sys, o);
  for (const auto& w : b.warnings) std::cerr << "mlti bt: " << w << "\n";
  const fs::path d = out_dir(g);
  save_t4((d / "Ar.t4").string(), b.A_r);
  save_t4((d / "Br.t4").string(), b.B_r);
  save_t4((d / "Cr.t4").string(), b.C_r);
  if (g.format == "json") {
    write_json(d / "hankel.json", {{"r", b.r},
                                   {"gramians_converged", b.gramians_converged},
                                   {"hankel_values", b.hankel_values}});
  } else {
    std::string s = "index,hankel_value\n";
    for (std::size_t i = 0; i < b.hankel_values.size(); ++i)
      s += std::to_string(i + 1) + "," + num(b.hankel_values[i]) + "\n";
    write_text(d / "hankel.csv", s);
  }
  return b.gramians_converged ? kOk : kNotConverged;
}

int cmd_freqresp(const Globals& g) {
  const ExperimentConfig c = make_config(g);
  const MLTISystem sys = build_system(c);
  const auto rows = run_freqresp(sys, c);
  const fs::path d = out_dir(g);
  if (g.format == "json")
    write_json(d / "freqresp.json", freqresp_json(rows));
  else
    write_text(d / "freqresp.csv", freqresp_csv(rows));
  return kOk;
}

int cmd_bench(const Globals& g) {
  const ExperimentConfig c = make_config(g);
  const auto rows = run_bench(c);
  const fs::path d = out_dir(g);
  const std::string text = bench_text(rows);
  write_text(d / "bench.txt", text);
  if (g.format == "json")
    write_json(d / "bench.json", bench_json(rows));
  else
    write_text(d / "bench.csv", bench_csv(rows));
  std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor Krylov model order reduction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--seed", g.seed, "RNG seed for generated data");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--format", g.format, "tabular output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--problem", g.problem, "spdiags, heat2d or file");
  app.add_option("--method", g.method, "TRBA, TRBL, TCBL or BT");
  app.add_option("--N", g.N);
  app.add_option("--K1", g.K1);
  app.add_option("--K2", g.K2);
  app.add_option("--m-max", g.m_max);
  app.add_option("--r", g.r, "balanced truncation order");
  app.add_option("--estimator", g.estimator, "error estimator kind, 0 for default");
  app.add_option("--eps", g.eps);
  app.add_option("--tol", g.tol, "adaptive reduction tolerance");
  app.add_option("--timing", g.timing, "record wall times in bench output")
      ->check(CLI::IsMember({"on", "off"}));

  int (*handler)(const Globals&) = nullptr;
  const auto sub = [&](const char* name, const char* help, int (*fn)(const Globals&)) {
    app.add_subcommand(name, help)->callback([&handler, fn] { handler = fn; });
  };
  sub("gen", "write the generated A, B, C tensors", cmd_gen);
  sub("reduce", "adaptive or classic reduction, writes Am/Bm/Cm", cmd_reduce);
  sub("lyap", "low-rank Lyapunov solve, writes Z1/Z2", cmd_lyap);
  sub("bt", "balanced truncation, writes Ar/Br/Cr and Hankel values", cmd_bt);
  sub("freqresp", "frequency response of full and reduced systems", cmd_freqresp);
  sub("bench", "TCBL vs TRBL Lyapunov benchmark table", cmd_bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return handler(g);
  } catch (const ConfigError& e) {
    std::cerr << "mlti: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const FormatError& e) {
    std::cerr << "mlti: bad input file: " << e.what() << "\n";
    return kConfig;
  } catch (const DimensionError& e) {
    std::cerr << "mlti: dimension mismatch: " << e.what() << "\n";
    return kConfig;
  } catch (const BreakdownError& e) {
    std::cerr << "mlti: breakdown: " << e.what() << "\n";
    return kBreakdown;
  } catch (const SingularError& e) {
    std::cerr << "mlti: singular: " << e.what() << "\n";
    return kBreakdown;
  } catch (const SingularPencilError& e) {
    std::cerr << "mlti: singular: " << e.what() << "\n";
    return kBreakdown;
  } catch (const BoundUnavailableError& e) {
    std::cerr << "mlti: " << e.what() << "\n";
    return kBreakdown;
  } catch (const NoCandidateError& e) {
    std::cerr << "mlti: " << e.what() << "\n";
    return kBreakdown;
  } catch (const std::exception& e) {
    std::cerr << "mlti: " << e.what() << "\n";
    return kFailure;
  }
}
