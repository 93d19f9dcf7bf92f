#pragma once

// Experiment configuration and the drivers behind the command-line tool.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mlti/btr.hpp"
#include "mlti/generators.hpp"

namespace mlti {

enum class Problem { Spdiags, Heat2d, File };
enum class Method { TRBA, TRBL, TCBL, BT };

struct FreqGrid {
  double omega_min = 1e-2;
  double omega_max = 1e2;
  int count = 100;
  bool log = true;

  std::vector<double> points() const;
};

struct ExperimentConfig {
  Problem problem = Problem::Spdiags;
  int N = 20, K1 = 3, K2 = 3;
  Method method = Method::TRBL;
  int m_max = 30;
  double eps = 1e-8;
  double dtol = 1e-12;
  std::array<double, 2> shift_interval{1e-2, 1e4};
  FreqGrid freq_grid;
  std::uint64_t seed = 1;

  // Reduction tolerance for reduce/freqresp (estimator units); defaults to eps.
  std::optional<double> tol;
  int estimator = 0;         // 0: kind 6 for TRBL, 3 for TRBA
  std::optional<int> r;      // BT order; sigma_tol rule when absent
  double sigma_tol = 1e-8;
  HeatParams heat;
  std::array<std::string, 3> files;                // A, B, C for problem "file"
  std::vector<std::array<int, 3>> cases;           // bench (N,K1,K2); default {N,K1,K2}
  bool timing = true;

  void validate() const;
  LyapunovOptions lyap_options() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

const char* to_string(Problem p);
const char* to_string(Method m);

MLTISystem build_system(const ExperimentConfig& c);

// Reduction selected by c.method. `converged` is false when the adaptive loop
// hit m_max.
struct ReductionRun {
  ReducedSystem reduced;
  std::vector<AdaptiveStep> history;
  std::vector<double> shifts;
  std::vector<double> hankel;
  bool converged = true;
};
ReductionRun run_reduction(const MLTISystem& sys, const ExperimentConfig& c);

std::vector<FrequencySample> run_freqresp(const MLTISystem& sys, const ExperimentConfig& c);

struct BenchRow {
  std::string case_name;
  std::string algorithm;
  std::optional<int> iter;
  std::optional<double> res;
  std::optional<double> time_s;
  bool converged = false;
  std::string status;  // "ok", "not converged" or the error message
};
std::vector<BenchRow> run_bench(const ExperimentConfig& c);

std::string freqresp_csv(const std::vector<FrequencySample>& rows);
nlohmann::json freqresp_json(const std::vector<FrequencySample>& rows);
std::string bench_text(const std::vector<BenchRow>& rows);
std::string bench_csv(const std::vector<BenchRow>& rows);
nlohmann::json bench_json(const std::vector<BenchRow>& rows);

}  // namespace mlti
