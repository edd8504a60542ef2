#include "ivmono/io.hpp"

#include <cmath>
#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using ivmono::io::json;

namespace {

const fs::path root = fs::temp_directory_path() / ("ivmono_cli_" + std::to_string(::getpid()));

struct Cleanup
{
  ~Cleanup() { fs::remove_all(root); }
} cleanup;

int
run(const std::string& args)
{
  fs::create_directories(root);
  const std::string cmd = std::string(IVMONO_CLI_PATH) + " " + args + " >" + (root / "stdout.txt").string() +
                          " 2>" + (root / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string
dir(const std::string& name)
{
  return (root / name).string();
}

json
load(const std::string& name, const std::string& file)
{
  return ivmono::io::read_json(root / name / file);
}

} // namespace

TEST_CASE("simulate is byte-reproducible")
{
  REQUIRE(run("simulate --preset example_I --k 2 --n 3000 --seed 7 --out " + dir("a")) == 0);
  REQUIRE(run("simulate --preset example_I --k 2 --n 3000 --seed 7 --out " + dir("b")) == 0);
  for (const char* f : { "data.csv", "latent.csv", "manifest.json" })
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  const auto m = load("a", "manifest.json");
  CHECK(m["seed"] == 7);
  CHECK(m["command"] == "simulate");
  CHECK(m["files"] == json({ "data.csv", "latent.csv", "manifest.json" }));
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);

  REQUIRE(run("simulate --preset example_I --k 2 --n 3000 --seed 8 --out " + dir("c")) == 0);
  CHECK(slurp(root / "a" / "data.csv") != slurp(root / "c" / "data.csv"));

  REQUIRE(run("simulate --preset example_I --k 2 --n 100 --seed 7 --no-latent --out " + dir("d")) == 0);
  CHECK_FALSE(fs::exists(root / "d" / "latent.csv"));
  CHECK(load("d", "manifest.json")["files"] == json({ "data.csv", "manifest.json" }));
}

TEST_CASE("configuration errors exit with 2")
{
  CHECK(run("simulate --preset example_I --n 10 --out " + dir("x")) == 2);
  CHECK(run("simulate --preset nowhere --n 10 --seed 1 --out " + dir("x")) == 2);
  CHECK(run("simulate --n 10 --seed 1 --out " + dir("x")) == 2);
  CHECK(run("estimate --data " + dir("missing.csv") + " --out " + dir("x")) == 2);
  CHECK(run("bogus") == 2);
  std::ofstream(root / "bad.json") << R"({"preset":"example_I","k":2,"assignment_probs":[1,1,1]})";
  CHECK(run("simulate --config " + dir("bad.json") + " --n 10 --seed 1 --out " + dir("x")) == 2);
}

TEST_CASE("estimate writes a report, maps and QTE table")
{
  REQUIRE(run("simulate --preset example_I --k 2 --n 20000 --seed 3 --no-latent --out " + dir("e")) == 0);
  REQUIRE(run("estimate --data " + dir("e/data.csv") + " --tau 0.25,0.5,0.75 --out " + dir("e/out")) == 0);
  const auto r = load("e/out", "report.json");
  CHECK(r["command"] == "estimate");
  CHECK(r["identification"]["failure"].is_null());
  const double ate = r["effects"]["ate"]["ate_2_0"].get<double>();
  CHECK(std::abs(ate - 2.0) < 0.15);
  const auto maps = slurp(root / "e/out/maps.csv");
  CHECK(maps.rfind("s,t,y,phi\n", 0) == 0);
  const auto qte = slurp(root / "e/out/qte.csv");
  CHECK(qte.rfind("s,t,tau,qte\n", 0) == 0);
  const auto m = load("e/out", "manifest.json");
  CHECK(m["seed"].is_null());
  CHECK(m["files"] == json({ "report.json", "maps.csv", "qte.csv", "manifest.json" }));

  // Same inputs, same bytes.
  REQUIRE(run("estimate --data " + dir("e/data.csv") + " --tau 0.25,0.5,0.75 --out " + dir("e/again")) == 0);
  CHECK(slurp(root / "e/out/report.json") == slurp(root / "e/again/report.json"));
}

TEST_CASE("shared sign treatments stop identification with exit 3")
{
  REQUIRE(run("simulate --preset shared_sign --k 2 --n 20000 --seed 5 --no-latent --out " + dir("s")) == 0);
  CHECK(run("estimate --data " + dir("s/data.csv") + " --out " + dir("s/out")) == 3);
  const auto r = load("s/out", "report.json");
  CHECK(r["identification"]["failure"]["kind"] == "AssumptionThreeViolated");
  CHECK(r["identification"]["assumption3"]["satisfied"] == false);
  CHECK(slurp(root / "stderr.txt").find("AssumptionThreeViolated") != std::string::npos);
  CHECK_FALSE(fs::exists(root / "s/out/maps.csv"));
}

TEST_CASE("MTO design with declared pairs labels the local groups")
{
  REQUIRE(run("simulate --preset mto --n 30000 --seed 11 --no-latent --out " + dir("m")) == 0);
  REQUIRE(run("estimate --data " + dir("m/data.csv") + " --pairs c:a,b:c --out " + dir("m/out")) == 0);
  const auto r = load("m/out", "report.json");
  bool found = false;
  for (const auto& g : r["effects"]["local"])
    found = found || g["group"] == "D^0_a=1,D^2_c=1";
  CHECK(found);
}

TEST_CASE("data errors exit with 4")
{
  std::ofstream(root / "nan.csv") << "y,t,z\n1,0,0\nnan,1,1\n";
  CHECK(run("estimate --data " + dir("nan.csv") + " --out " + dir("x")) == 4);
  REQUIRE(run("simulate --preset example_I --k 2 --n 3000 --seed 1 --no-latent --out " + dir("f")) == 0);
  // A declared instrument value without observations.
  CHECK(run("estimate --data " + dir("f/data.csv") + " --labels 0,1,2,3 --out " + dir("x")) == 4);
}

TEST_CASE("diagnose the golden propensity matrix")
{
  REQUIRE(run("diagnose --propensity \"0.3125,0.4375,0.25;0.25,0.375,0.375;0.125,0.3125,0.5625\" --out " +
              dir("g")) == 0);
  const auto r = load("g", "diagnose.json");
  CHECK(r["propensity_determinant_exact"] == "-1/256");
  CHECK(r["assumption3"]["satisfied"] == false);
  for (const auto& p : r["sign_treatments"])
    CHECK(p["sign_treatment"] == 2);
  for (const auto& row : r["determinant_sweep"]) {
    CHECK(row["direct"].get<double>() < 0.0);
    CHECK(std::abs(row["ratio"].get<double>() + 0.00390625) < 1e-12);
  }
  CHECK(slurp(root / "stderr.txt").find("sign treatments are not distinct") != std::string::npos);
}

TEST_CASE("oracle on analytic Example I")
{
  REQUIRE(run("oracle --preset example_I --k 2 --check-points 3 --oracle-nodes 101 --grid-nodes 256 --out " +
              dir("o")) == 0);
  const auto r = load("o", "oracle.json");
  CHECK(r["all_within"] == true);
  CHECK(r["solver_check"]["points"].size() == 3);
}
