#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "json.hpp"
#include "lsainfer/errors.hpp"

namespace fs = std::filesystem;
using namespace lsa;
using namespace lsa::cli;

namespace {

fs::path tmp_root() {
  const char* env = std::getenv("LSA_TEST_TMP");
  fs::path p = env ? fs::path(env) : fs::temp_directory_path() / "lsainfer_cli_test";
  fs::create_directories(p);
  return p;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = tmp_root() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kBase = R"({
  "seed": 7,
  "instance": {"kind": "random_hurwitz", "d": 2},
  "schedule": {"c0": 0.3, "gamma": 0.7, "k0": 0},
  "experiment": {"n": 256, "n_grid": [64, 128, 256, 512]}
})";

}  // namespace

TEST_CASE("defaults after parsing") {
  const auto cfg = parse_config(kBase);
  CHECK(cfg.seed == 7);
  CHECK(cfg.n == 256);
  CHECK(cfg.M == 200);
  CHECK(cfg.level == doctest::Approx(0.9));
  CHECK(cfg.K == 32);
  CHECK(cfg.weights == WeightKind::two_point);
  CHECK(cfg.n_grid.size() == 4);
  CHECK(cfg.workers == 1);
  CHECK(cfg.config_hash == fnv1a_hex(kBase));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("schema errors") {
  try {
    parse_config(R"({"seed": 1, "instance": {"kind": "random_hurwitz", "d": 2},
                     "schedule": {"c0": 16, "gamma": 0.5, "k0": 0}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma must lie in (1/2, 1)") != std::string::npos);
  }
  try {
    parse_config(R"({"seed": 1, "stepsize": 0.1})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("did you mean 'schedule.c0'") != std::string::npos);
  }
  CHECK(suggest_key("gama") == "schedule.gamma");
  CHECK(suggest_key("zzzzzzzz").empty());
  try {
    parse_config("{\n  \"seed\": 1,\n  oops\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"seed": 1, "instance": {"kind": "random_hurwitz", "d": 2},
                                   "schedule": {"c0": 0.3, "gamma": 0.7}})"),
                  ConfigError);
}

TEST_CASE("config errors exit with code 1") {
  const auto bad = write_file("bad_gamma.json", R"({"seed": 1, "instance": {"kind": "random_hurwitz", "d": 2},
    "schedule": {"c0": 16, "gamma": 0.5, "k0": 0}})");
  const auto r = invoke({"simulate", "--config", bad, "--out", (tmp_root() / "bad").string()});
  CHECK(r.code == kConfigError);
  CHECK(r.err.find("gamma must lie in (1/2, 1)") != std::string::npos);
  CHECK(invoke({"simulate", "--config", (tmp_root() / "missing.json").string()}).code == kConfigError);
}

TEST_CASE("simulate is reproducible and writes a manifest") {
  const auto cfg = write_file("base.json", kBase);
  const auto a = tmp_root() / "sim_a";
  const auto b = tmp_root() / "sim_b";
  REQUIRE(invoke({"simulate", "--config", cfg, "--out", a.string()}).code == kOk);
  REQUIRE(invoke({"simulate", "--config", cfg, "--out", b.string()}).code == kOk);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(fs::exists(a / "summary.json"));
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["config_hash"] == fnv1a_hex(kBase));
  CHECK(m["subcommand"] == "simulate");
  CHECK(m["seeds"]["effective"] == 7);
  CHECK(m["config"]["schedule"]["gamma"] == 0.7);

  // The manifest replays the same run.
  const auto c = tmp_root() / "sim_c";
  REQUIRE(invoke({"simulate", "--config", (a / "manifest.json").string(), "--out", c.string()}).code == kOk);
  CHECK(slurp(a / "trajectory.csv") == slurp(c / "trajectory.csv"));
}

TEST_CASE("seed override from the environment") {
  const auto cfg = write_file("base.json", kBase);
  ::setenv("LSA_INFER_SEED", "99", 1);
  const auto dir = tmp_root() / "sim_env";
  const auto r = invoke({"simulate", "--config", cfg, "--out", dir.string()});
  ::unsetenv("LSA_INFER_SEED");
  REQUIRE(r.code == kOk);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["seeds"]["effective"] == 99);
  CHECK(m["seeds"]["config"] == 7);
  CHECK(m["seeds"]["from_env"] == true);
}

TEST_CASE("check-assumptions always exits 0") {
  const auto cfg = write_file("assume.json", R"({"seed": 1, "instance": {"kind": "random_hurwitz", "d": 2},
    "schedule": {"c0": 5.0, "gamma": 0.7, "k0": 0}})");
  const auto r = invoke({"check-assumptions", "--config", cfg, "--out", (tmp_root() / "assume").string()});
  CHECK(r.code == kOk);
  CHECK(fs::exists(tmp_root() / "assume" / "assumptions.json"));
  CHECK_FALSE(r.out.empty());
}

TEST_CASE("assert bands drive exit code 3") {
  const auto ok = write_file("gap.json", kBase);
  CHECK(invoke({"covariance-gap", "--config", ok, "--out", (tmp_root() / "gap").string()}).code == kOk);
  const auto strict = write_file("gap_strict.json", R"({
    "seed": 7,
    "instance": {"kind": "random_hurwitz", "d": 2},
    "schedule": {"c0": 0.3, "gamma": 0.7, "k0": 0},
    "experiment": {"n_grid": [64, 128, 256, 512]},
    "assert": {"min": 5.0, "max": 6.0}
  })");
  const auto r = invoke({"covariance-gap", "--config", strict, "--out", (tmp_root() / "gap_s").string(), "--assert"});
  CHECK(r.code == kAssertionFailed);
  const auto m = nlohmann::json::parse(slurp(tmp_root() / "gap_s" / "manifest.json"));
  CHECK(m["assertion"]["passed"] == false);
  // Without --assert the band is ignored.
  CHECK(invoke({"covariance-gap", "--config", strict, "--out", (tmp_root() / "gap_n").string()}).code == kOk);
}

TEST_CASE("divergence exits with code 2") {
  const auto cfg = write_file("diverge.json", R"({
    "seed": 1,
    "instance": {"kind": "custom_atoms", "atoms": [{"A": [[1.0]], "b": [1.0]}]},
    "schedule": {"c0": 50.0, "gamma": 0.6, "k0": 0},
    "experiment": {"n": 500}
  })");
  CHECK(invoke({"simulate", "--config", cfg, "--out", (tmp_root() / "div").string()}).code == kDivergence);
}
