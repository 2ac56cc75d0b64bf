#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "conic_nmf/experiment.hpp"
#include "conic_nmf/io.hpp"
#include "test_util.hpp"

using namespace conic_nmf;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("conic_nmf_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

using Io = TempDir;

}  // namespace

TEST_F(Io, CsvRoundTripIsBitExact) {
  Rng rng(1);
  Matrix m = testutil::gaussian_matrix(7, 9, rng);
  m(0, 0) = 1e-300;
  m(1, 1) = 0.1;
  m(2, 2) = 1.0 / 3.0;
  io::write_csv(path("m.csv"), m);
  const Matrix r = io::read_csv(path("m.csv"));
  EXPECT_TRUE(r == m);
}

TEST_F(Io, CsvEmptyFile) {
  io::write_csv(path("e.csv"), Matrix(5, 0));
  EXPECT_EQ(fs::file_size(path("e.csv")), 0u);
  const Matrix r = io::read_csv(path("e.csv"));
  EXPECT_EQ(r.size(), 0);
}

TEST_F(Io, CsvRaggedAndGarbageRejected) {
  write("r.csv", "1,2,3\n4,5\n");
  EXPECT_THROW(io::read_csv(path("r.csv")), Error);
  write("g.csv", "1,2,x\n");
  EXPECT_THROW(io::read_csv(path("g.csv")), Error);
  write("h.csv", "1,,3\n");
  EXPECT_THROW(io::read_csv(path("h.csv")), Error);
  EXPECT_THROW(io::read_csv(path("missing.csv")), Error);
}

TEST_F(Io, DataMatrixValidation) {
  write("neg.csv", "1,2\n-3,4\n");
  try {
    io::read_data_matrix(path("neg.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_FALSE(e.is_numerical());
  }
  write("nan.csv", "1,nan\n3,4\n");
  EXPECT_THROW(io::read_data_matrix(path("nan.csv")), Error);
  write("ok.csv", "1,0\n3,4\n");
  EXPECT_EQ(io::read_data_matrix(path("ok.csv"))(1, 0), 3.0);
}

TEST_F(Io, MatrixMarketCoordinate) {
  write("a.mtx",
        "%%MatrixMarket matrix coordinate real general\n"
        "% a comment\n"
        "3 4 4\n"
        "1 1 2.5\n"
        "3 2 1\n"
        "2 4 7\n"
        "3 2 0.5\n");
  const Matrix m = io::read_data_matrix(path("a.mtx"));
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 4);
  EXPECT_EQ(m(0, 0), 2.5);
  EXPECT_EQ(m(2, 1), 1.5);
  EXPECT_EQ(m(1, 3), 7.0);
  EXPECT_EQ(m.sum(), 11.0);
}

TEST_F(Io, MatrixMarketPatternSymmetricAndArray) {
  write("p.mtx",
        "%%MatrixMarket matrix coordinate pattern symmetric\n"
        "3 3 2\n"
        "2 1\n"
        "3 3\n");
  const Matrix p = io::read_matrix_market(path("p.mtx"));
  EXPECT_EQ(p(1, 0), 1.0);
  EXPECT_EQ(p(0, 1), 1.0);
  EXPECT_EQ(p(2, 2), 1.0);
  EXPECT_EQ(p.sum(), 3.0);

  write("d.mtx",
        "%%MatrixMarket matrix array real general\n"
        "2 3\n"
        "1\n2\n3\n4\n5\n6\n");
  const Matrix d = io::read_matrix_market(path("d.mtx"));
  Matrix expected(2, 3);
  expected << 1, 3, 5, 2, 4, 6;
  EXPECT_TRUE(d == expected);
}

TEST_F(Io, MatrixMarketRoundTripAndErrors) {
  Rng rng(2);
  Matrix m = testutil::uniform_matrix(5, 6, rng);
  m(1, 2) = 0.0;
  io::write_matrix_market(path("w.mtx"), m);
  EXPECT_TRUE(io::read_data_matrix(path("w.mtx")) == m);

  write("bad1.mtx", "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
  EXPECT_THROW(io::read_matrix_market(path("bad1.mtx")), Error);
  write("bad2.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n");
  EXPECT_THROW(io::read_matrix_market(path("bad2.mtx")), Error);
  write("bad3.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
  EXPECT_THROW(io::read_matrix_market(path("bad3.mtx")), Error);
}

TEST_F(Io, LabelsRoundTrip) {
  const std::vector<int> labels = {0, 3, 1, 1, 2};
  io::write_labels(path("l.labels"), labels);
  EXPECT_EQ(io::read_labels(path("l.labels")), labels);
  write("bad.labels", "1\n2.5\n");
  EXPECT_THROW(io::read_labels(path("bad.labels")), Error);
}

TEST(KeyValues, ParseCommentsAndOverrides) {
  std::istringstream in(
      "# experiment\n"
      "F = 1600\n"
      "  K=40   # cones\n"
      "\n"
      "alpha = 0.2\n"
      "K = 41\n");
  const auto kv = io::parse_key_values(in, "test");
  EXPECT_EQ(kv.at("F"), "1600");
  EXPECT_EQ(kv.at("K"), "41");
  EXPECT_EQ(kv.at("alpha"), "0.2");
  EXPECT_EQ(kv.size(), 3u);
  std::istringstream bad("F 1600\n");
  EXPECT_THROW(io::parse_key_values(bad, "test"), Error);
}

TEST_F(Io, KeyValuesRoundTrip) {
  const io::KeyValues kv = {{"F", "10"}, {"alpha", "0.1,0.2"}, {"bases", "positive"}};
  io::write_key_values(path("c.config"), kv);
  EXPECT_EQ(io::read_key_values(path("c.config")), kv);
}

TEST_F(Io, MetaRoundTripPreservesCones) {
  const io::KeyValues kv = {{"F", "1600"}, {"N", "10"}, {"K", "40"}, {"alpha", "0.2"}, {"seed", "5"}};
  const auto spec = experiment::dataset_spec(kv);
  io::write_json(path("m.json"), io::dataset_meta(spec.generator, kv));
  const auto meta = io::read_json(path("m.json"));
  const ConeSet set = io::cone_set_from_meta(meta);
  ASSERT_EQ(set.size(), 40u);
  for (std::size_t k = 0; k < 40; ++k) {
    EXPECT_TRUE(set[k].basis == spec.generator.cones[k].basis);
    EXPECT_EQ(set[k].angle, 0.2);
  }
  const auto check = check_geometric_assumption(set);
  EXPECT_TRUE(check.holds);
  EXPECT_NEAR(check.margin, 0.01, 1e-9);
  EXPECT_EQ(meta.at("seed").get<std::uint64_t>(), 5u);
  EXPECT_EQ(meta.at("lambdas").size(), 40u);
}

TEST(DatasetSpec, KeysAndDefaults) {
  io::KeyValues kv = {{"F", "20"}, {"N", "50"}, {"K", "3"}};
  auto s = experiment::dataset_spec(kv);
  EXPECT_EQ(s.generator.cones.angles(), std::vector<double>(3, 0.2));
  EXPECT_NEAR(s.generator.cones.beta()(0, 1), 0.81, 1e-12);
  EXPECT_EQ(s.generator.lambdas, inverse_index_rates(3));
  EXPECT_TRUE(s.generator.project);
  EXPECT_EQ(s.noise, 0.0);

  kv["alpha"] = "0.1,0.05,0.1";
  kv["bases"] = "positive";
  kv["lambda"] = "2";
  kv["mixing"] = "0.2,0.3,0.5";
  kv["project"] = "false";
  kv["noise"] = "0.1";
  s = experiment::dataset_spec(kv);
  EXPECT_EQ(s.generator.cones.angles(), (std::vector<double>{0.1, 0.05, 0.1}));
  EXPECT_NEAR(s.generator.cones.beta()(0, 2), 0.41, 1e-10);
  EXPECT_GT(s.generator.cones[0].basis.minCoeff(), 0.0);
  EXPECT_EQ(s.generator.lambdas, std::vector<double>(3, 2.0));
  EXPECT_EQ(s.generator.mixing.size(), 3u);
  EXPECT_FALSE(s.generator.project);
  EXPECT_EQ(s.noise, 0.1);

  for (auto [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"bases", "round"}, {"alpha", "0.1,0.2"}, {"project", "maybe"}, {"noise", "-1"}, {"F", "x"}}) {
    io::KeyValues bad = kv;
    bad[key] = value;
    EXPECT_THROW(experiment::dataset_spec(bad), Error) << key;
  }
  io::KeyValues missing = {{"F", "20"}, {"K", "3"}};
  EXPECT_THROW(experiment::dataset_spec(missing), Error);
}

TEST(Benchmark, RowsSortedAndTargetsConsistent) {
  const io::KeyValues kv = {{"F", "30"},       {"N", "400,200"}, {"K", "4"},
                            {"seeds", "9,3"},  {"solvers", "hals,cr1,mult"}, {"inits", "rand,nndsvd"},
                            {"iterations", "30"}};
  const auto s = experiment::benchmark_settings(kv);
  const auto report = experiment::run_benchmark(s);
  ASSERT_EQ(report.rows.size(), 2u * 2u * (1u + 2u * 2u));
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    EXPECT_LT(report.rows[i - 1].key(), report.rows[i].key());
  }
  EXPECT_EQ(report.rows.front().n, 200);
  EXPECT_EQ(report.rows.front().seed, 3u);
  for (const auto& r : report.rows) {
    if (r.solver == "cr1") {
      EXPECT_EQ(r.relative_error, r.cr1_error);
      continue;
    }
    EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
    if (r.time_to_cr1_error) {
      EXPECT_LE(r.relative_error, r.cr1_error);
      EXPECT_EQ(*r.iterations_to_cr1_error, r.iterations);
    } else {
      EXPECT_EQ(r.iterations, 30);
    }
  }
}

TEST(Benchmark, ThreadCountDoesNotChangeErrors) {
  const io::KeyValues kv = {{"F", "30"}, {"N", "150"}, {"K", "3"}, {"runs", "3"},
                            {"solvers", "mult,cr1"}, {"iterations", "20"}, {"stop_at_cr1", "false"}};
  const auto s = experiment::benchmark_settings(kv);
  ::setenv("CONIC_NMF_THREADS", "1", 1);
  const auto a = experiment::run_benchmark(s);
  ::setenv("CONIC_NMF_THREADS", "3", 1);
  const auto b = experiment::run_benchmark(s);
  ::unsetenv("CONIC_NMF_THREADS");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].key(), b.rows[i].key());
    EXPECT_EQ(a.rows[i].trace, b.rows[i].trace);
    EXPECT_EQ(a.rows[i].relative_error, b.rows[i].relative_error);
  }
}

TEST(Benchmark, SettingsValidation) {
  io::KeyValues kv = {{"F", "30"}, {"N", "150"}, {"K", "3"}, {"solvers", ""}};
  EXPECT_THROW(experiment::benchmark_settings(kv), Error);
  kv["solvers"] = "nnlsb";
  EXPECT_THROW(experiment::benchmark_settings(kv), Error);
  kv["solvers"] = "mult";
  kv["inits"] = "magic";
  EXPECT_THROW(experiment::benchmark_settings(kv), Error);
  kv["inits"] = "rand";
  kv["N"] = "";
  EXPECT_THROW(experiment::benchmark_settings(kv), Error);
}

TEST(WorkerCount, EnvironmentCap) {
  ::setenv("CONIC_NMF_THREADS", "2", 1);
  EXPECT_EQ(experiment::worker_count(10), 2u);
  EXPECT_EQ(experiment::worker_count(1), 1u);
  ::setenv("CONIC_NMF_THREADS", "garbage", 1);
  EXPECT_GE(experiment::worker_count(10), 1u);
  ::unsetenv("CONIC_NMF_THREADS");
}
