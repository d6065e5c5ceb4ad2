#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qstrat/example_fields.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Output {
  int status = -1;
  std::string out;
};

Output run(const std::string& args) {
  const std::string cmd = std::string("'") + QSTRAT_CLI_PATH + "' " + args + " 2>/dev/null";
  Output o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) o.out.append(buf, got);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

class Scratch {
 public:
  Scratch() : dir_(fs::temp_directory_path() / ("qstrat-cli-" + std::to_string(::getpid()))) { fs::create_directories(dir_); }
  ~Scratch() { fs::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

const char* kFiveCenters = R"([field]
kind = riesz_sum
n = 3
p = 3
centers = "0,0,0; 0.5,0,0; -0.45,0.2,0; 0,0.5,0.3; 0.1,-0.4,-0.3"
weights = "1, 1.2, 1.5, 1.8, 2"

[analysis]
c = 0.9
step = 0.04
)";

}  // namespace

TEST(Cli, CountFiveCenters) {
  Scratch tmp;
  const auto cfg = tmp.write("five.ini", kFiveCenters);
  const auto o = run("count --config '" + cfg + "'");
  ASSERT_EQ(o.status, 0);
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["result"]["components"], 5);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["command"], "count");
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["quadrature"]["sphere_nodes"], 2048);
  EXPECT_EQ(j["seeds"]["quadrature"], 1);
}

TEST(Cli, FlagsOverrideConfigAndChangeHash) {
  Scratch tmp;
  const auto cfg = tmp.write("five.ini", kFiveCenters);
  const auto a = run("density --config '" + cfg + "' --analysis.points '0.2,0.2,0.2'");
  const auto b = run("density --config '" + cfg + "' --analysis.points '0.2,0.2,0.2' --field.p 2.5");
  ASSERT_EQ(a.status, 0);
  ASSERT_EQ(b.status, 0);
  const auto ja = json::parse(a.out), jb = json::parse(b.out);
  EXPECT_EQ(ja["config"]["field"]["p"], 3.0);
  EXPECT_EQ(jb["config"]["field"]["p"], 2.5);
  EXPECT_EQ(jb["config"]["field"]["kind"], "riesz_sum");
  EXPECT_NE(ja["config_hash"], jb["config_hash"]);
}

TEST(Cli, ReportsAreByteIdentical) {
  const std::string args = "energy --field.centers '0.3,0,0; -0.2,0.4,0' --field.weights '1,0.7' --field.p 2 "
                           "--analysis.radii 0.1,0.3 --analysis.samples 8 --quadrature.seed 5";
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.status, 0);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(json::parse(a.out)["seeds"]["grassmannian"], 5);
}

TEST(Cli, EnergyOfConstantHasZeroGRows) {
  const auto o = run("energy --field.kind constant --field.value 2.5 --field.p 3 --analysis.radii 0.1,0.2,0.4 "
                     "--analysis.samples 8 --analysis.points '0,0,0; 0.3,0,0'");
  ASSERT_EQ(o.status, 0);
  const auto j = json::parse(o.out);
  const auto& pts = j["result"]["points"];
  ASSERT_EQ(pts.size(), 2u);
  for (const auto& p : pts) {
    ASSERT_EQ(p["theta_G"].size(), 3u);
    for (const auto& row : p["theta_G"]) EXPECT_EQ(row["value"].get<double>(), 0.0);
    EXPECT_TRUE(p["theta_G_monotone"].get<bool>());
    EXPECT_TRUE(p["theta_F_monotone"].get<bool>());
  }
}

TEST(Cli, MinkowskiSlopeOfPlaneKernel) {
  const auto o = run("minkowski --field.kind plane_kernel --field.n 4 --field.p 3 --field.plane 1 --analysis.eta 0.5 "
                     "--analysis.radii 0.05,0.1,0.2 --quadrature.sphere_nodes 512");
  ASSERT_EQ(o.status, 0);
  const auto j = json::parse(o.out);
  EXPECT_NEAR(j["result"]["slope"].get<double>(), 3.0, 0.3);
  EXPECT_TRUE(j["result"]["bounded"].get<bool>());
}

TEST(Cli, CsvOutputs) {
  Scratch tmp;
  const auto prefix = tmp.path("out");
  const auto o = run("count --field.centers '0,0,0' --field.weights 2 --analysis.c 1 --output.csv '" + prefix + "'");
  ASSERT_EQ(o.status, 0);
  std::ifstream in(prefix + "_representatives.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "x1,x2,x3");
  EXPECT_FALSE(row.empty());
  const auto e = run("energy --field.centers '0,0,0' --analysis.radii 0.1,0.2 --analysis.samples 8 --output.csv '" + prefix + "'");
  ASSERT_EQ(e.status, 0);
  std::ifstream prof(prefix + "_theta_G_0.csv");
  std::getline(prof, header);
  EXPECT_EQ(header, "r,value");
}

TEST(Cli, GridIngestion) {
  Scratch tmp;
  using namespace qstrat;
  const auto g = grid_sample(riesz_sum({Point{}}, {1.0}, 3.0, 3), 24, Ball{Point{}, 1.0});
  std::ostringstream os;
  write_grid_csv(*g.grid(), os);
  const auto path = tmp.write("grid.csv", os.str());
  const auto o = run("density --field.kind grid --field.grid '" + path + "' --analysis.points '0.5,0,0'");
  ASSERT_EQ(o.status, 0);
  const auto j = json::parse(o.out);
  EXPECT_EQ(j["field"]["n"], 3);
  EXPECT_EQ(j["field"]["p"], 3.0);
}

TEST(Cli, JsonToFile) {
  Scratch tmp;
  const auto path = tmp.path("r.json");
  const auto o = run("density --output.json '" + path + "'");
  ASSERT_EQ(o.status, 0);
  EXPECT_TRUE(o.out.empty());
  std::ifstream in(path);
  EXPECT_EQ(json::parse(in)["command"], "density");
}

TEST(Cli, UsageErrorsExitTwo) {
  Scratch tmp;
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("count --field.kind nope").status, 2);
  EXPECT_EQ(run("count --field.centers '0,0'").status, 2);
  EXPECT_EQ(run("count --field.p abc").status, 2);
  EXPECT_EQ(run("count --config '" + tmp.write("a.ini", "[field]\nbogus = 1\n") + "'").status, 2);
  EXPECT_EQ(run("count --config '" + tmp.write("b.ini", "orphan = 1\n") + "'").status, 2);
  EXPECT_EQ(run("count --config '" + tmp.path("missing.ini") + "'").status, 2);
  EXPECT_EQ(run("verify --verify.criteria 14").status, 2);
}

TEST(Cli, InfeasibleAnalysisExitsThree) {
  EXPECT_EQ(run("density --analysis.points '2.5,0,0'").status, 3);
  EXPECT_EQ(run("cover --analysis.gamma 0.3").status, 3);
  EXPECT_EQ(run("strata --analysis.r 0.01 --analysis.step 0.02 --analysis.search_radius 0").status, 0);
}

TEST(Cli, VerifySubset) {
  const auto o = run("verify --verify.criteria 1,10");
  EXPECT_EQ(o.status, 0);
  const auto j = json::parse(o.out);
  ASSERT_EQ(j["criteria"].size(), 2u);
  EXPECT_EQ(j["criteria"][1]["id"], 10);
  EXPECT_TRUE(j["passed"].get<bool>());
}
