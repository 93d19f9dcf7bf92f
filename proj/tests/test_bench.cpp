#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlti/experiment.hpp"
#include "mlti/tensor_io.hpp"
#include "support.hpp"

using namespace mlti;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mlti_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MLTI_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST(SplitMix, KnownFirstOutput) {
  // mix() is one SplitMix64 step, so mix(0) is the first output of the
  // reference generator seeded with 0.
  EXPECT_EQ(SplitMix64::mix(0), 0xE220A8397B1DCDAFULL);
  const SplitMix64 a(7, kStreamC), b(7, kStreamC), c(7, kStreamBValues);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const double u = a.uniform(i);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, b.uniform(i));
    EXPECT_NE(u, c.uniform(i));
  }
}

TEST(Generators, SpdiagsStructure) {
  const MLTISystem sys = gen_spdiags(5, 2, 3, 11);
  EXPECT_EQ(sys.A.dims(), (Dims4{5, 5, 5, 5}));
  EXPECT_EQ(sys.B.dims(), (Dims4{5, 5, 2, 3}));
  EXPECT_EQ(sys.C.dims(), (Dims4{2, 3, 5, 5}));
  const MatD& A = sys.A.unfold();
  for (Index i = 0; i < 25; ++i)
    for (Index j = 0; j < 25; ++j) {
      const double want = i == j ? -2.0 : (i == j + 1 ? 1.0 : 0.0);
      EXPECT_EQ(A(i, j), want);
    }
  const MatD& B = sys.B.unfold();
  for (Index k = 0; k < B.cols(); ++k) {
    EXPECT_GT(B.col(k).cwiseAbs().maxCoeff(), 0.0) << "column " << k;
    EXPECT_GE(B.col(k).minCoeff(), 0.0);
    EXPECT_LT(B.col(k).maxCoeff(), 1.0);
  }
  const MatD& C = sys.C.unfold();
  EXPECT_GE(C.minCoeff(), 0.0);
  EXPECT_LT(C.maxCoeff(), 1.0);
  EXPECT_EQ(check_stability(sys.A), Stability::AsymptoticallyStable);
}

TEST(Generators, SameSeedIsBitIdentical) {
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const MLTISystem a = gen_spdiags(6, 2, 2, seed), b = gen_spdiags(6, 2, 2, seed);
    EXPECT_TRUE(a.B.unfold() == b.B.unfold());
    EXPECT_TRUE(a.C.unfold() == b.C.unfold());
    const MLTISystem h1 = gen_heat2d(4, 1, 2, {}, seed), h2 = gen_heat2d(4, 1, 2, {}, seed);
    EXPECT_TRUE(h1.A.unfold() == h2.A.unfold());
    EXPECT_TRUE(h1.B.unfold() == h2.B.unfold());
  }
  EXPECT_FALSE(gen_spdiags(6, 2, 2, 1).C.unfold() == gen_spdiags(6, 2, 2, 2).C.unfold());
}

TEST(Generators, HeatSpectrum) {
  // With dt = h^2 and c = 1 the scale is 1; T = tridiag(1,-2,1) of size 2 has
  // eigenvalues -1 and -3.
  const MLTISystem sys = gen_heat2d(2, 1, 1, {}, 1);
  const MatD& A = sys.A.unfold();
  EXPECT_LT((A - A.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<MatD> es(A);
  const Eigen::Vector4d want(-6, -4, -4, -2);
  EXPECT_LT((es.eigenvalues() - want).norm(), 1e-12);
  EXPECT_EQ(check_stability(sys.A), Stability::AsymptoticallyStable);

  HeatParams hp;
  hp.c = 2.0;
  const MatD A2 = gen_heat2d(2, 1, 1, hp, 1).A.unfold();
  EXPECT_LT((A2 - 4.0 * A).norm(), 1e-12);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.problem = Problem::Heat2d;
  c.N = 7;
  c.K1 = 2;
  c.method = Method::BT;
  c.r = 4;
  c.tol = 1e-5;
  c.freq_grid.count = 17;
  c.cases = {{10, 1, 1}, {12, 2, 2}};
  c.heat.dt = 0.01;
  c.timing = false;
  const ExperimentConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.N, 7);
  EXPECT_EQ(d.method, Method::BT);
  EXPECT_EQ(*d.r, 4);
  EXPECT_EQ(d.cases.size(), 2u);
  EXPECT_FALSE(d.timing);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  using nlohmann::json;
  EXPECT_THROW(config_from_json(json{{"Nx", 3}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"freq_grid", {{"points", 3}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"method", "GMRES"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"N", "twenty"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"N", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"eps", -1.0}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"shift_interval", {5.0, 1.0}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"estimator", 7}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"cases", {{3, 1}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json::array()), ConfigError);
  EXPECT_NO_THROW(config_from_json(json::object()));
}

TEST(Config, FreqGridPoints) {
  FreqGrid g;
  g.omega_min = 1;
  g.omega_max = 100;
  g.count = 3;
  const auto p = g.points();
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[1], 10.0, 1e-12);
  g.log = false;
  EXPECT_NEAR(g.points()[1], 50.5, 1e-12);
}

TEST(Freqresp, RowCountAndAmbientExactness) {
  ExperimentConfig c;
  c.N = 3;
  c.K1 = 1;
  c.K2 = 1;
  c.method = Method::TRBA;
  c.m_max = 9;
  c.tol = 1e-300;
  c.freq_grid.count = 25;
  const MLTISystem sys = build_system(c);
  const auto rows = run_freqresp(sys, c);
  ASSERT_EQ(rows.size(), 25u);
  for (const auto& r : rows) EXPECT_LE(r.error, 1e-8 * std::max(1.0, r.norm_full));
}

TEST(Freqresp, SpdiagsArnoldiIsAccurate) {
  ExperimentConfig c;
  c.N = 20;
  c.K1 = 3;
  c.K2 = 4;
  c.method = Method::TRBA;
  c.m_max = 5;
  c.tol = 1e-300;
  const MLTISystem sys = build_system(c);
  const auto rows = run_freqresp(sys, c);
  double peak = 0, worst = 0;
  for (const auto& r : rows) {
    peak = std::max(peak, r.norm_full);
    worst = std::max(worst, r.error);
  }
  EXPECT_LE(worst, 1e-2 * peak);
}

TEST(Bench, SchemaAndOrdering) {
  ExperimentConfig c;
  c.N = 12;
  c.K1 = 2;
  c.K2 = 2;
  c.timing = false;
  const auto rows = run_bench(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].algorithm, "TCBL");
  EXPECT_EQ(rows[1].algorithm, "TRBL");
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged) << r.status;
    EXPECT_FALSE(r.time_s.has_value());
    EXPECT_LE(*r.res, c.eps);
  }
  EXPECT_LT(*rows[1].iter, *rows[0].iter);
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "case,algorithm,iter,res,time_s");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto j = bench_json(rows);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_TRUE(j[0].contains("iter"));
}

TEST(Bench, TextFileSystemRoundTrip) {
  const fs::path dir = scratch("io");
  const MLTISystem sys = gen_spdiags(3, 1, 2, 5);
  save_t4((dir / "A.t4").string(), sys.A);
  save_t4((dir / "B.t4").string(), sys.B);
  save_t4((dir / "C.t4").string(), sys.C);
  ExperimentConfig c;
  c.problem = Problem::File;
  c.files = {(dir / "A.t4").string(), (dir / "B.t4").string(), (dir / "C.t4").string()};
  const MLTISystem back = build_system(c);
  EXPECT_TRUE(back.B.unfold() == sys.B.unfold());
  c.files[2] = c.files[1];  // B as C has the wrong shape
  EXPECT_THROW(build_system(c), ConfigError);
}

TEST(Cli, ExitCodesAndOutputs) {
  const fs::path dir = scratch("cli");
  const std::string out = " --out \"" + dir.string() + "\"";
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("gen --N 1" + out), 2);
  EXPECT_EQ(run_cli("gen --config /nonexistent.json" + out), 2);

  EXPECT_EQ(run_cli("gen --N 4 --K1 1 --K2 2 --seed 3" + out), 0);
  const Tensor4d A = load_t4_real((dir / "A.t4").string());
  EXPECT_EQ(A.dims(), (Dims4{4, 4, 4, 4}));
  EXPECT_TRUE(load_t4_real((dir / "B.t4").string()).unfold() == gen_spdiags(4, 1, 2, 3).B.unfold());

  EXPECT_EQ(run_cli("reduce --N 6 --K1 1 --K2 1 --m-max 3 --tol 1e-300" + out), 3);
  EXPECT_TRUE(fs::exists(dir / "history.csv"));
  EXPECT_EQ(run_cli("reduce --N 6 --K1 1 --K2 1 --m-max 4 --tol 1e-2" + out), 0);
  EXPECT_EQ(run_cli("reduce --N 6 --K1 1 --K2 1 --method TRBA --estimator 6" + out), 2);

  EXPECT_EQ(run_cli("lyap --N 6 --K1 1 --K2 1" + out), 0);
  const auto lj = nlohmann::json::parse(slurp(dir / "lyap.json"));
  EXPECT_TRUE(lj["converged"].get<bool>());
  EXPECT_EQ(lj["method"], "TRBL");

  EXPECT_EQ(run_cli("bt --N 6 --K1 1 --K2 1 --r 3 --format json" + out), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "hankel.json"))["r"], 3);

  EXPECT_EQ(run_cli("freqresp --N 6 --K1 1 --K2 1 --m-max 3" + out), 0);
  const std::string fr = slurp(dir / "freqresp.csv");
  EXPECT_EQ(fr.substr(0, fr.find('\n')), "omega,norm_full,norm_reduced,error");
  EXPECT_EQ(std::count(fr.begin(), fr.end(), '\n'), 101);
}
