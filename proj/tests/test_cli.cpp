#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = VNET_CLI_PATH;
const std::string kConfig = VNET_CONFIG_PATH;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "vnet_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t line_count(const std::string& text) {
  size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

std::string train_args(const fs::path& out, int seed) {
  return "train --config " + kConfig + " --profile smoke --seed " +
         std::to_string(seed) + " --out " + out.string();
}

}  // namespace

TEST_CASE("missing config file exits with code 2") {
  CHECK(run("train --config /nonexistent.json --seed 1 --out " +
            (work_dir() / "x").string()) == 2);
  CHECK(run("evaluate --config /nonexistent.json --random --seed 1 --out " +
            (work_dir() / "x2").string()) == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("train") == 2);  // --config and --out are required
  CHECK(run("frobnicate --config " + kConfig) == 2);
}

TEST_CASE("unknown profile and unknown variant are rejected") {
  CHECK(run("train --config " + kConfig + " --profile bogus --out " +
            (work_dir() / "p").string()) == 2);
  CHECK(run(train_args(work_dir() / "v", 1) + " --variant bogus") == 2);
}

TEST_CASE("smoke training produces metrics, checkpoint, and manifest") {
  const fs::path out = work_dir() / "train1";
  REQUIRE(run(train_args(out, 7)) == 0);
  CHECK(fs::exists(out / "metrics.csv"));
  CHECK(fs::exists(out / "checkpoint.json"));
  CHECK(fs::exists(out / "run_manifest.json"));
  // Header plus one line per episode (smoke profile: 6 episodes).
  CHECK(line_count(slurp(out / "metrics.csv")) == 7);
}

TEST_CASE("rerunning the same training command is byte-identical") {
  const fs::path a = work_dir() / "rep_a";
  const fs::path b = work_dir() / "rep_b";
  REQUIRE(run(train_args(a, 11)) == 0);
  REQUIRE(run(train_args(b, 11)) == 0);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "checkpoint.json") == slurp(b / "checkpoint.json"));

  const fs::path c = work_dir() / "rep_c";
  REQUIRE(run(train_args(c, 12)) == 0);
  CHECK(slurp(a / "metrics.csv") != slurp(c / "metrics.csv"));
}

TEST_CASE("evaluate compares the random baseline and a checkpoint") {
  const fs::path train_out = work_dir() / "train_eval";
  REQUIRE(run(train_args(train_out, 3)) == 0);

  const fs::path out = work_dir() / "eval1";
  REQUIRE(run("evaluate --config " + kConfig +
              " --profile smoke --seed 5 --out " + out.string() +
              " --random --checkpoint smoke=" +
              (train_out / "checkpoint.json").string() +
              " --episodes 3 --steps 10 --trajectories") == 0);
  const std::string table = slurp(out / "comparison.csv");
  CHECK(line_count(table) == 3);  // header + random + smoke
  CHECK(table.find("random") != std::string::npos);
  CHECK(table.find("smoke") != std::string::npos);
  CHECK(fs::exists(out / "trajectories_random.csv"));
  CHECK(fs::exists(out / "trajectories_smoke.csv"));
  CHECK(fs::exists(out / "run_manifest.json"));

  // Requesting nothing is an error.
  CHECK(run("evaluate --config " + kConfig + " --seed 5 --out " +
            (work_dir() / "eval_none").string()) == 2);
}

TEST_CASE("explain emits per-state, averaged, and top-10 tables") {
  const fs::path train_out = work_dir() / "train_explain";
  REQUIRE(run(train_args(train_out, 4)) == 0);

  const fs::path out = work_dir() / "explain1";
  REQUIRE(run("explain --config " + kConfig +
              " --profile smoke --seed 6 --out " + out.string() +
              " --checkpoint " + (train_out / "checkpoint.json").string() +
              " --samples 2 --states 2") == 0);
  // 2 states x 93 features plus header.
  CHECK(line_count(slurp(out / "explain.csv")) == 1 + 2 * 93);
  CHECK(line_count(slurp(out / "alpha_mean.csv")) == 1 + 93);
  CHECK(line_count(slurp(out / "top10.csv")) == 11);
}

TEST_CASE("fidelity compares two checkpoints on a shared state set") {
  const fs::path ck1 = work_dir() / "train_fid_a";
  const fs::path ck2 = work_dir() / "train_fid_b";
  REQUIRE(run(train_args(ck1, 8)) == 0);
  REQUIRE(run(train_args(ck2, 9) + " --variant attention") == 0);

  const fs::path out = work_dir() / "fid1";
  REQUIRE(run("fidelity --config " + kConfig +
              " --profile smoke --seed 10 --out " + out.string() +
              " --checkpoint-sverl " + (ck1 / "checkpoint.json").string() +
              " --checkpoint-attention " + (ck2 / "checkpoint.json").string() +
              " --states 5 --steps 5") == 0);
  CHECK(line_count(slurp(out / "fidelity_summary.csv")) == 3);
  CHECK(fs::exists(out / "fidelity.csv"));
}

TEST_CASE("missing checkpoint file exits with code 2") {
  CHECK(run("explain --config " + kConfig + " --seed 1 --out " +
            (work_dir() / "nock").string() +
            " --checkpoint /nonexistent_checkpoint.json") == 2);
}
