// Copyright 2026 The SLAY Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracle.hpp"
#include "slay/bench.hpp"
#include "slay/tensor_io.hpp"

using namespace slay;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BenchOptions tiny_bench() {
  BenchOptions o;
  o.mechanisms = {Mechanism::slay, Mechanism::spherical_yat, Mechanism::favor};
  o.lengths = {32, 64};
  o.d_model = 16;
  o.heads = 2;
  o.reps = 2;
  o.warmup = 1;
  return o;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("slay_cli_test_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI with args; returns the exit status.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " \"" + std::string(SLAY_CLI_PATH) + "\" " + args + " >\"" +
                            (dir_ / "stdout.txt").string() + "\" 2>\"" + (dir_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string out() const { return slurp(dir_ / "stdout.txt"); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Library-level bench
// ---------------------------------------------------------------------------

TEST(Bench, DoublingLengths) {
  EXPECT_EQ(doubling_lengths(128, 1024), (std::vector<std::size_t>{128, 256, 512, 1024}));
  EXPECT_EQ(doubling_lengths(100, 300), (std::vector<std::size_t>{100, 200}));
  EXPECT_THROW((void)doubling_lengths(0, 8), Error);
}

TEST(Bench, RecordsCoverEveryPoint) {
  const auto recs = run_bench(tiny_bench());
  ASSERT_EQ(recs.size(), 6u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_GT(r.peak_aux_bytes, 0u);
    EXPECT_GE(r.timed_reps, 1u);
    EXPECT_TRUE(r.causal);
    EXPECT_NEAR(r.throughput_tokens_per_s, static_cast<double>(r.length) / (r.latency_ms_median / 1e3),
                1e-9 * r.throughput_tokens_per_s);
  }
}

TEST(Bench, InterleavedMatchesSequentialOutputs) {
  auto seq = tiny_bench();
  seq.lengths = {16, 32, 64};
  seq.reps = 3;
  auto inter = seq;
  inter.interleave = true;
  const auto a = run_bench(seq), b = run_bench(inter);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mechanism, b[i].mechanism);
    EXPECT_EQ(a[i].length, b[i].length);
    EXPECT_EQ(a[i].output_checksum, b[i].output_checksum);
    EXPECT_EQ(a[i].status, b[i].status);
    EXPECT_EQ(b[i].timed_reps, 3u);
    EXPECT_GT(b[i].latency_ms_median, 0.0);
  }
}

TEST(Bench, InterleavedBudgetKeepsAtLeastOneRun) {
  auto o = tiny_bench();
  o.interleave = true;
  o.reps = 50;
  o.budget_s = 0.0;
  for (const auto& r : run_bench(o)) EXPECT_EQ(r.timed_reps, 1u);
}

TEST(Bench, InterleavedReportsOom) {
  BenchOptions o;
  o.mechanisms = {Mechanism::spherical_yat};
  o.lengths = {64, 512};
  o.d_model = 8;
  o.heads = 1;
  o.reps = 2;
  o.warmup = 1;
  o.interleave = true;
  o.quadratic_length_cap = 64;
  o.aux_cap_bytes = 1 << 20;
  const auto recs = run_bench(o);
  EXPECT_EQ(recs[0].status, "ok");
  EXPECT_EQ(recs[1].status, "oom");
  EXPECT_EQ(recs[1].timed_reps, 0u);
}

TEST(Bench, FlopEstimateDoublesForSlay) {
  const auto recs = run_bench(tiny_bench());
  EXPECT_EQ(recs[1].flop_estimate, 2.0 * recs[0].flop_estimate);
  EXPECT_EQ(recs[5].flop_estimate, 2.0 * recs[4].flop_estimate);
  EXPECT_GT(recs[3].flop_estimate, 3.0 * recs[2].flop_estimate);
}

TEST(Bench, RepsDoNotChangeOutputs) {
  auto a = tiny_bench();
  a.reps = 1;
  auto b = tiny_bench();
  b.reps = 20;
  const auto ra = run_bench(a), rb = run_bench(b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].output_checksum, rb[i].output_checksum);
    EXPECT_EQ(ra[i].peak_aux_bytes, rb[i].peak_aux_bytes);
  }
}

TEST(Bench, ChecksumMatchesDirectRun) {
  auto o = tiny_bench();
  o.mechanisms = {Mechanism::spherical_yat};
  o.lengths = {16};
  o.causal = false;
  const auto rec = run_bench(o).front();
  double sum = 0.0;
  for (std::size_t h = 0; h < 2; ++h) {
    const auto q = sample_gaussian(RngStream::named(0, StreamFamily::inputs, 3 * h), 16, 8);
    const auto k = sample_gaussian(RngStream::named(0, StreamFamily::inputs, 3 * h + 1), 16, 8);
    const auto v = sample_gaussian(RngStream::named(0, StreamFamily::inputs, 3 * h + 2), 16, 8);
    const auto qn = normalize_rows(q).rows, kn = normalize_rows(k).rows;
    const auto y = oracle::kernel_attention(
        [&](std::size_t i, std::size_t j) {
          return static_cast<long double>(oracle::spherical(static_cast<double>(oracle::dot_ld(qn.row(i), kn.row(j))), 1e-3));
        },
        v, 1e-6, false);
    for (double x : y.data()) sum += x;
  }
  EXPECT_NEAR(rec.output_checksum, sum, 1e-9 * std::max(1.0, std::abs(sum)));
}

TEST(Bench, AllocationCapRecordsOom) {
  auto o = tiny_bench();
  o.mechanisms = {Mechanism::spherical_yat};
  o.lengths = {256};
  o.aux_cap_bytes = 256 * 256 * sizeof(double) - 1;
  const auto rec = run_bench(o).front();
  EXPECT_EQ(rec.status, "oom");
  EXPECT_EQ(rec.latency_ms_median, 0.0);
}

TEST(Bench, QuadraticLengthCapSkipsUnlessScoresExceedAllocationCap) {
  auto o = tiny_bench();
  o.mechanisms = {Mechanism::spherical_yat};
  o.lengths = {64, 128};
  o.quadratic_length_cap = 64;
  EXPECT_EQ(run_bench(o)[1].status, "skipped");
  o.aux_cap_bytes = 128 * 128 * sizeof(double) - 1;
  EXPECT_EQ(run_bench(o)[1].status, "oom");
}

TEST(Bench, SerialDeterministicRunsAreByteIdentical) {
  auto o = tiny_bench();
  o.serial_deterministic = true;
  const auto a = bench_table(run_bench(o), "{}").str();
  const auto b = bench_table(run_bench(o), "{}").str();
  EXPECT_EQ(a, b);
  for (const auto& r : run_bench(o)) {
    EXPECT_EQ(r.latency_ms_median, 0.0);
    EXPECT_EQ(r.timed_reps, 0u);
  }
}

TEST(Bench, Float32Path) {
  auto o = tiny_bench();
  o.use_f32 = true;
  o.lengths = {32};
  const auto f32 = run_bench(o);
  o.use_f32 = false;
  const auto f64 = run_bench(o);
  for (std::size_t i = 0; i < f32.size(); ++i) {
    EXPECT_EQ(f32[i].status, "ok");
    EXPECT_LT(f32[i].peak_aux_bytes, f64[i].peak_aux_bytes);
    EXPECT_NEAR(f32[i].output_checksum, f64[i].output_checksum, 1e-3 * std::max(1.0, std::abs(f64[i].output_checksum)));
  }
}

TEST(Bench, RejectsBadOptions) {
  auto o = tiny_bench();
  o.heads = 3;
  EXPECT_THROW((void)run_bench(o), Error);
  o = tiny_bench();
  o.lengths = {64, 32};
  EXPECT_THROW((void)run_bench(o), Error);
  o = tiny_bench();
  o.mechanisms.clear();
  EXPECT_THROW((void)run_bench(o), Error);
}

TEST(Bench, TableMatchesGoldenHeader) {
  const std::string golden = slurp(fs::path(SLAY_GOLDEN_DIR) / "bench_header.csv");
  EXPECT_EQ(bench_table({}, "").str(), golden);
}

TEST(Schemas, GoldenHeaders) {
  EXPECT_EQ(CsvTable(kernel_curve_columns()).str(), slurp(fs::path(SLAY_GOLDEN_DIR) / "kernel_curve_header.csv"));
  EXPECT_EQ(CsvTable(convergence_columns()).str(), slurp(fs::path(SLAY_GOLDEN_DIR) / "convergence_header.csv"));
  EXPECT_EQ(CsvTable(ablation_columns()).str(), slurp(fs::path(SLAY_GOLDEN_DIR) / "ablation_header.csv"));
  EXPECT_EQ(CsvTable(denominator_columns()).str(), slurp(fs::path(SLAY_GOLDEN_DIR) / "denominator_header.csv"));
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

TEST_F(Cli, QuadratureTwoNodes) {
  ASSERT_EQ(run("quadrature --r 2 --epsilon 0.001"), 0);
  EXPECT_EQ(out(), slurp(fs::path(SLAY_GOLDEN_DIR) / "quadrature_r2.csv"));
  std::istringstream lines(out());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("# json-config: ", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line, "i,t,alpha,s,w");
  std::getline(lines, line);
  EXPECT_EQ(line.substr(0, 10), "0,0.585786");
  std::getline(lines, line);
  EXPECT_EQ(line.substr(0, 10), "1,3.414213");
}

TEST_F(Cli, KernelCurveGolden) {
  ASSERT_EQ(run("kernel-curve --epsilon 0.001 --r 3 --points 5"), 0);
  EXPECT_EQ(out(), slurp(fs::path(SLAY_GOLDEN_DIR) / "kernel_curve_p5.csv"));
}

TEST_F(Cli, ConvergenceSweepGolden) {
  ASSERT_EQ(run("quadrature --epsilon 0.1 --sweep 1,2,4"), 0);
  EXPECT_EQ(out(), slurp(fs::path(SLAY_GOLDEN_DIR) / "convergence_sweep.csv"));
}

TEST_F(Cli, OutFlagWritesFile) {
  ASSERT_EQ(run("quadrature --r 2 --epsilon 0.001 --out " + path("q.csv")), 0);
  EXPECT_EQ(out(), "");
  EXPECT_EQ(slurp(path("q.csv")), slurp(fs::path(SLAY_GOLDEN_DIR) / "quadrature_r2.csv"));
}

TEST_F(Cli, AttnSingleTokenReturnsValues) {
  write_tensor_file(path("q.bin"), Matrix<double>::from_rows({{0.3, -0.4, 1.2}}), Dtype::f64);
  write_tensor_file(path("k.bin"), Matrix<double>::from_rows({{1.0, 0.5, -0.2}}), Dtype::f64);
  write_tensor_file(path("v.bin"), Matrix<double>::from_rows({{2.5, -1.0}}), Dtype::f64);
  write_text("cfg.json", R"({"delta": 0.0, "poly_kind": "exact"})");
  for (const char* mech : {"slay", "spherical-yat", "softmax", "favor", "elu1", "yat"}) {
    ASSERT_EQ(run(std::string("attn --mechanism ") + mech + " --config " + path("cfg.json") + " --q " +
                  path("q.bin") + " --k " + path("k.bin") + " --v " + path("v.bin") + " --out " + path("y.bin")),
              0)
        << mech;
    const auto y = read_tensor_file(path("y.bin"));
    if (std::string(mech) == "favor") continue;  // relu features may vanish for a single token
    EXPECT_NEAR(y.values(0, 0), 2.5, 1e-12) << mech;
    EXPECT_NEAR(y.values(0, 1), -1.0, 1e-12) << mech;
  }
}

TEST_F(Cli, AttnSingleTokenPayloadEqualsValuesWithDefaultConfig) {
  write_tensor_file(path("q.bin"), Matrix<double>::from_rows({{1.0, 0.0}}), Dtype::f64);
  write_tensor_file(path("v.bin"), Matrix<double>::from_rows({{4.0, 8.0}}), Dtype::f64);
  write_text("cfg.json", R"({"delta": 0.0})");
  ASSERT_EQ(run("attn --mechanism slay --config " + path("cfg.json") + " --q " + path("q.bin") + " --k " +
                path("q.bin") + " --v " + path("v.bin") + " --out " + path("y.bin")),
            0);
  EXPECT_EQ(slurp(path("y.bin")), slurp(path("v.bin")));
}

TEST_F(Cli, AttnMatchesLibraryAndKeepsDtype) {
  const auto q = oracle::gaussian_matrix(1, 12, 4), k = oracle::gaussian_matrix(2, 12, 4), v = oracle::gaussian_matrix(3, 12, 3);
  write_tensor_file(path("q.bin"), q, Dtype::f32);
  write_tensor_file(path("k.bin"), k, Dtype::f32);
  write_tensor_file(path("v.bin"), v, Dtype::f32);
  ASSERT_EQ(run("attn --mechanism spherical-yat --causal --q " + path("q.bin") + " --k " + path("k.bin") + " --v " +
                path("v.bin") + " --out " + path("y.bin")),
            0);
  const auto y = read_tensor_file(path("y.bin"));
  EXPECT_EQ(y.dtype, Dtype::f32);
  MechanismOptions o;
  o.causal = true;
  const auto ref = run_mechanism(Mechanism::spherical_yat, read_tensor_file(path("q.bin")).values,
                                 read_tensor_file(path("k.bin")).values, read_tensor_file(path("v.bin")).values, o);
  EXPECT_LT(oracle::max_rel_diff(y.values, ref.y), 1e-6);
}

TEST_F(Cli, ExitCodes) {
  write_tensor_file(path("q.bin"), Matrix<double>(2, 3, 1.0), Dtype::f64);
  write_text("bad.bin", "NOTATENSOR");
  write_text("bad.json", R"({"poly_kind": "cubic"})");
  const std::string qkv = " --q " + path("q.bin") + " --k " + path("q.bin") + " --v " + path("q.bin") + " --out " + path("y.bin");
  EXPECT_EQ(run("attn --mechanism performer" + qkv), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("attn --mechanism slay --q " + path("bad.bin") + " --k " + path("q.bin") + " --v " + path("q.bin") +
                " --out " + path("y.bin")),
            2);
  EXPECT_EQ(run("attn --mechanism slay --q " + path("missing.bin") + " --k " + path("q.bin") + " --v " +
                path("q.bin") + " --out " + path("y.bin")),
            2);
  EXPECT_EQ(run("attn --mechanism slay --config " + path("bad.json") + qkv), 3);
  EXPECT_EQ(run("quadrature --r 0"), 3);
  EXPECT_EQ(run("kernel-curve --epsilon -1"), 3);
  EXPECT_EQ(run("bench --lengths 64,32 --d-model 16 --heads 2"), 1);
}

TEST_F(Cli, SeedEnvironmentOverride) {
  const std::string args = "bench --mechanisms slay --lengths 32 --d-model 16 --heads 2 --serial-deterministic";
  ASSERT_EQ(run(args), 0);
  const std::string base = out();
  ASSERT_EQ(run(args, "SLAY_SEED=0"), 0);
  EXPECT_EQ(out(), base);
  ASSERT_EQ(run(args, "SLAY_SEED=7"), 0);
  EXPECT_NE(out(), base);
  EXPECT_NE(out().find("\"seed\":7"), std::string::npos);
  EXPECT_EQ(run(args, "SLAY_SEED=abc"), 3);
  EXPECT_EQ(run(args, "SLAY_SEED=-4"), 3);
}

TEST_F(Cli, BenchSerialDeterministicIsByteIdentical) {
  const std::string args =
      "bench --mechanisms slay,spherical-yat,elu1,cosformer --l-min 16 --l-max 64 --d-model 16 --heads 2 "
      "--serial-deterministic --out ";
  ASSERT_EQ(run(args + path("a.csv")), 0);
  ASSERT_EQ(run(args + path("b.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  std::istringstream lines(slurp(path("a.csv")));
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  EXPECT_EQ(line + "\n", slurp(fs::path(SLAY_GOLDEN_DIR) / "bench_header.csv"));
}

TEST_F(Cli, AblateSerialDeterministicIsByteIdentical) {
  const std::string args = "ablate-poly --scales small --methods anchor,nystrom --seeds 2 --dim 8 --serial-deterministic --out ";
  ASSERT_EQ(run(args + path("a.csv")), 0);
  ASSERT_EQ(run(args + path("b.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(run("ablate-poly --scales huge"), 1);
}

TEST_F(Cli, DenominatorSweepRuns) {
  ASSERT_EQ(run("denominator-sweep --pairs 500 --seeds 1 --bins 4"), 0);
  std::istringstream lines(out());
  std::string line;
  std::getline(lines, line);
  EXPECT_NE(line.find("\"guaranteed_nonneg_scores\":true"), std::string::npos);
  std::getline(lines, line);
  EXPECT_EQ(line + "\n", slurp(fs::path(SLAY_GOLDEN_DIR) / "denominator_header.csv"));
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST_F(Cli, SelftestSelection) {
  ASSERT_EQ(run("selftest --list"), 0);
  EXPECT_NE(out().find("tensor-core/normalize-idempotent"), std::string::npos);
  EXPECT_EQ(run("selftest --only tensor-core"), 0);
  EXPECT_NE(out().find("3/3 checks passed"), std::string::npos);
  EXPECT_EQ(run("selftest --only exact-kernels/boundedness"), 0);
  EXPECT_EQ(run("selftest --only no-such-check"), 1);
}

TEST_F(Cli, HelpListsColumns) {
  ASSERT_EQ(run("bench --help"), 0);
  EXPECT_NE(out().find("mechanism,L,d_model,heads"), std::string::npos);
}
