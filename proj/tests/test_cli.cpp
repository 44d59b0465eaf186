#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "bimech/io.hpp"

using namespace bimech;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string(BIMECH_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) throw std::runtime_error("popen failed");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  int status = pclose(f);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("bimech_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

std::size_t max_denominator(const Json& j) {
  std::size_t best = 1;
  if (j.is_string()) {
    Rational q = parse_rational(j.get<std::string>());
    best = q.get_den().get_ui();
  } else if (j.is_array() || j.is_object()) {
    for (const auto& e : j) best = std::max(best, max_denominator(e));
  }
  return best;
}

}  // namespace

TEST_F(Cli, GenIsDeterministic) {
  auto a = cli("gen scheduling --k 3 --m 5 --seed 11");
  auto b = cli("gen scheduling --k 3 --m 5 --seed 11");
  auto c = cli("gen scheduling --k 3 --m 5 --seed 12");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  auto inst = scheduling_from_json(Json::parse(a.out));
  EXPECT_EQ(inst.k, 3u);
  EXPECT_EQ(inst.m, 5u);
  auto gj = Json::parse(a.out);
  EXPECT_LE(std::max(max_denominator(gj["p"]), max_denominator(gj["c"])), 100u);
  auto d = cli("gen bmed --k 2 --m 3 --types 3 --objective fairness --seed 4 --max-den 7");
  ASSERT_EQ(d.code, 0);
  auto bi = bmed_from_json(Json::parse(d.out));
  EXPECT_EQ(bi.objective, Objective::fairness);
  EXPECT_EQ(bi.num_types(1), 3u);
  for (const auto& ts : bi.types)
    for (const auto& t : ts)
      for (const auto& q : t) EXPECT_LE(q.get_den().get_ui(), 7u);
}

TEST_F(Cli, SolveSingleTypeBmed) {
  ASSERT_EQ(cli("gen bmed --k 1 --m 2 --types 1 --seed 3 -o " + path("b.json")).code, 0);
  auto r = cli("solve --goop makespan --verify -i " + path("b.json"));
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_EQ(j["kind"], "solve-report");
  EXPECT_TRUE(j["result"]["certificate"]["passed"].get<bool>());
  for (const auto& o : j["result"]["assignment"]) EXPECT_EQ(o, 0);
}

TEST_F(Cli, MakespanOneMachineTakesEverything) {
  ASSERT_EQ(cli("gen scheduling --k 1 --m 4 --seed 9 -o " + path("s.json")).code, 0);
  auto r = cli("solve --goop makespan --verify -i " + path("s.json"));
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  for (const auto& o : j["result"]["assignment"]) EXPECT_EQ(o, 0);
  EXPECT_TRUE(j["result"]["certificate"]["passed"].get<bool>());
}

TEST_F(Cli, FairnessCertificates) {
  ASSERT_EQ(cli("gen scheduling --k 2 --m 4 --seed 5 -o " + path("s.json")).code, 0);
  auto bd = cli("solve --goop fairness-bd --verify -i " + path("s.json"));
  ASSERT_EQ(bd.code, 0);
  EXPECT_TRUE(Json::parse(bd.out)["result"]["certificate"]["passed"].get<bool>());
  auto a = cli("solve --goop fairness-as --seed 8 -i " + path("s.json"));
  auto b = cli("solve --goop fairness-as --seed 8 -i " + path("s.json"));
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, MechanismAndVerify) {
  ASSERT_EQ(cli("gen bmed --k 2 --m 2 --types 2 --seed 7 -o " + path("b.json")).code, 0);
  auto m = cli("mechanism --goop makespan --eps 1/20 --seed 1 -i " + path("b.json") + " -o " + path("m.json"));
  ASSERT_EQ(m.code, 0);
  auto mech = mechanism_from_json(read_json_file(path("m.json")));
  EXPECT_EQ(mech.eps, Rational(1, 20));
  auto v = cli("verify --runs 20000 --seed 2 -i " + path("m.json"));
  ASSERT_EQ(v.code, 0);
  auto j = Json::parse(v.out);
  auto opt = brute_bmed(mech.inst).value;
  double mean = parse_rational(j["verification"]["objective_mean"].get<std::string>()).get_d();
  double se = parse_rational(j["verification"]["objective_stderr"].get<std::string>()).get_d();
  EXPECT_LE(mean, 2 * opt.get_d() + 0.05 + 3 * se);
  EXPECT_TRUE(j["comparison"]["passed"].get<bool>());
  EXPECT_EQ(j["verification"]["ir_violations"], 0);
  EXPECT_EQ(cli("verify --runs 20000 --seed 2 -i " + path("m.json")).out, v.out);
}

TEST_F(Cli, VerifySingleTypeHasNoRegret) {
  ASSERT_EQ(cli("gen bmed --k 2 --m 2 --types 1 --seed 2 -o " + path("b.json")).code, 0);
  ASSERT_EQ(cli("mechanism --goop makespan --eps 1/10 --seed 1 -i " + path("b.json") + " -o " + path("m.json")).code, 0);
  auto v = cli("verify --runs 2000 --seed 2 -i " + path("m.json"));
  ASSERT_EQ(v.code, 0);
  auto j = Json::parse(v.out);
  EXPECT_EQ(parse_rational(j["verification"]["max_regret"].get<std::string>()), 0);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("gen scheduling --k 2").code, 1);
  EXPECT_EQ(cli("solve -i " + path("missing.json")).code, 1);
  ASSERT_EQ(cli("gen scheduling --k 2 --m 3 --seed 1 -o " + path("s.json")).code, 0);
  EXPECT_EQ(cli("solve --goop fairness-as -i " + path("s.json")).code, 1);
  ASSERT_EQ(cli("gen scheduling --k 4 --m 14 --seed 1 -o " + path("big.json")).code, 0);
  EXPECT_EQ(cli("brute -i " + path("big.json")).code, 2);
  ASSERT_EQ(cli("gen bmed --k 2 --m 2 --seed 1 -o " + path("b.json")).code, 0);
  EXPECT_EQ(cli("mechanism --eps -1 --seed 1 -i " + path("b.json")).code, 1);
}
