#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "netmark/netlist.hpp"
#include "support/oracles.hpp"

namespace netmark {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("netmark_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + std::string(NETMARK_CLI) + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

TEST_F(Cli, SignPrintsGateDeltaAndIsDeterministic) {
  const std::string in = (oracle::corpus_dir() / "c880.bench").string();
  const auto a = run("sign --in " + in + " --out a.bench --db a.json --vectors 3000");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("gates: 323 -> 351 (+28)"), std::string::npos) << a.out;
  EXPECT_NE(a.out.find("seeds: vector 1, select 2"), std::string::npos);
  const auto b = run("sign --in " + in + " --out b.bench --db b.json --vectors 3000");
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(dir_ / "a.bench"), slurp(dir_ / "b.bench"));
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
}

TEST_F(Cli, SignDefaultOutputNames) {
  const auto r = run("sign --in " + (oracle::corpus_dir() / "c432.bench").string() + " --vectors 1000 --json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "c432.signed.bench"));
  EXPECT_TRUE(fs::exists(dir_ / "c432.crp.json"));
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("delta"), 28);
}

TEST_F(Cli, MissingInputIsUsageError) {
  const auto r = run("sign --in /no/such/file.bench");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/such/file.bench"), std::string::npos);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("sign").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, ParseErrorIsUsageError) {
  const auto bad = write("bad.bench", "INPUT(a)\ny = FOO(a)\n");
  const auto r = run("sign --in " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":2:5:"), std::string::npos) << r.err;
}

TEST_F(Cli, HelpListsDefaults) {
  const auto r = run("sign --help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"--digest-bits", "4", "--group-size", "8", "--challenges", "100", "--vectors", "10000",
                        "--threshold", "0.1", "--vector-seed", "--select-seed"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(Cli, VerifyExitCodes) {
  const std::string in = (oracle::corpus_dir() / "c880.bench").string();
  ASSERT_EQ(run("sign --in " + in + " --out s.bench --db s.json --vectors 3000").code, 0);
  const auto golden = run("verify --in s.bench --db s.json");
  EXPECT_EQ(golden.code, 0) << golden.out;
  EXPECT_NE(golden.out.find("verdict: AUTHENTIC"), std::string::npos);

  int tampered = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    ASSERT_EQ(run("mutate --in s.bench --out m.bench --magnitude 5 --seed " + std::to_string(seed)).code, 0);
    const auto v = run("verify --in m.bench --db s.json --json");
    ASSERT_TRUE(v.code == 0 || v.code == 1);
    const auto doc = nlohmann::json::parse(v.out);
    EXPECT_EQ(v.code == 1, doc.at("verdict") == "TAMPERED");
    EXPECT_NE(v.err.find("circuit_id differs"), std::string::npos);
    tampered += v.code == 1;
  }
  EXPECT_GE(tampered, 1);

  const auto removed = run("verify --in " + in + " --db s.json");
  EXPECT_EQ(removed.code, 1);
  EXPECT_NE(removed.out.find("removal evidence"), std::string::npos);

  const auto wrong = run("verify --in " + (oracle::corpus_dir() / "c432.bench").string() + " --db s.json");
  EXPECT_EQ(wrong.code, 2);
}

TEST_F(Cli, CircuitIdMismatchWarnsButVerifies) {
  const std::string in = (oracle::corpus_dir() / "c432.bench").string();
  ASSERT_EQ(run("sign --in " + in + " --out s.bench --db s.json --vectors 1000").code, 0);
  auto doc = nlohmann::json::parse(slurp(dir_ / "s.json"));
  doc["circuit_id"] = "00";
  write("s2.json", doc.dump());
  const auto r = run("verify --in s.bench --db s2.json");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(Cli, MutateIsDeterministicAndLeavesInputAlone) {
  const std::string in = (oracle::corpus_dir() / "c1355.bench").string();
  const std::string before = slurp(in);
  ASSERT_EQ(run("mutate --in " + in + " --magnitude 5 --seed 7 --out x.bench --record x.jsonl").code, 0);
  ASSERT_EQ(run("mutate --in " + in + " --magnitude 5 --seed 7 --out y.bench --record y.jsonl").code, 0);
  EXPECT_EQ(slurp(dir_ / "x.bench"), slurp(dir_ / "y.bench"));
  EXPECT_EQ(slurp(dir_ / "x.jsonl"), slurp(dir_ / "y.jsonl"));
  EXPECT_EQ(slurp(in), before);
  const std::string log = slurp(dir_ / "x.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
  EXPECT_EQ(run("mutate --in " + in + " --magnitude 0").code, 2);
  EXPECT_EQ(run("mutate --in " + in + " --kinds nonsense").code, 2);
  const auto copy = write("self.bench", before);
  EXPECT_EQ(run("mutate --in self.bench --out self.bench").code, 2);
  EXPECT_EQ(slurp(copy), before);
}

TEST_F(Cli, MutateProtectsDigestByDefault) {
  const std::string in = (oracle::corpus_dir() / "c432.bench").string();
  ASSERT_EQ(run("sign --in " + in + " --out s.bench --db s.json --vectors 1000").code, 0);
  for (int seed = 0; seed < 10; ++seed) {
    ASSERT_EQ(run("mutate --in s.bench --out m.bench --magnitude 20 --record m.jsonl --seed " +
                  std::to_string(seed))
                  .code,
              0);
    const std::string log = slurp(dir_ / "m.jsonl");
    std::istringstream lines(log);
    std::string line;
    while (std::getline(lines, line)) {
      for (const auto& t : nlohmann::json::parse(line).at("targets")) {
        EXPECT_FALSE(t.get<std::string>().starts_with("SIGNED_DIGEST_"));
      }
    }
  }
}

TEST_F(Cli, SimulateAndGate) {
  write("and.bench", oracle::kAndCircuit);
  const auto r = run("simulate --in and.bench --vectors 16 --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,b,y");
  int rows = 0;
  while (std::getline(in, line)) {
    ASSERT_EQ(line.size(), 5u);
    EXPECT_EQ(line[4] == '1', line[0] == '1' && line[2] == '1') << line;
    ++rows;
  }
  EXPECT_EQ(rows, 16);
  ASSERT_EQ(run("simulate --in and.bench --vectors 16 --seed 1 --dump t.bin").code, 0);
  EXPECT_EQ(fs::file_size(dir_ / "t.bin"), 24u + 16u);
}

TEST_F(Cli, BenchWritesOneRowPerCell) {
  write("plan.json", R"({"corpus": [")" + (oracle::corpus_dir() / "c432.bench").string() +
                         R"("], "trials": 3, "magnitudes": [1, 2], "challenges": [1, 10],
      "digest_bits": [4], "kinds": ["mixed", "substitution"], "vectors": 1000, "seed": 3})");
  const auto a = run("bench --plan plan.json --out a.csv");
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string csv = slurp(dir_ / "a.csv");
  // 1 benchmark x 3 magnitudes (with control) x 2 counts x 1 width x 2 kinds
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 12);
  EXPECT_TRUE(fs::exists(dir_ / "a.csv.meta.json"));
  ASSERT_EQ(run("bench --plan plan.json --out b.csv").code, 0);
  EXPECT_EQ(csv, slurp(dir_ / "b.csv"));
  ASSERT_EQ(run("bench --plan plan.json --out o.csv --overhead").code, 0);
  EXPECT_NE(slurp(dir_ / "o.csv").find("c432,171,199,28,28"), std::string::npos);
  EXPECT_EQ(run("bench --plan missing.json").code, 2);
}

}  // namespace
}  // namespace netmark
