#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nco/problems.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = NCO_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("nco_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// wallclock is a measurement, not an output; drop the trailing column when
// comparing runs for determinism
std::string drop_wallclock(const std::string& csv) {
  std::istringstream lines(csv);
  std::string line, out;
  while (std::getline(lines, line)) {
    auto last = line.rfind(',');
    out += (last == std::string::npos ? line : line.substr(0, last)) + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("generate is deterministic and writes a manifest") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 8 --count 6 --seed 7 --out " + (tmp / "a.txt")) == 0);
  REQUIRE(run("generate --problem tsp -n 8 --count 6 --seed 7 --out " + (tmp / "b.txt")) == 0);
  CHECK(nco::file_hash(tmp / "a.txt") == nco::file_hash(tmp / "b.txt"));
  CHECK(fs::exists(tmp / "a.txt.manifest.json"));
  auto manifest = slurp(tmp / "a.txt.manifest.json");
  CHECK(manifest.find("content_hash") != std::string::npos);
  // refuses to clobber without --overwrite
  CHECK(run("generate --problem tsp -n 8 --count 6 --seed 7 --out " + (tmp / "a.txt")) == 2);
  CHECK(run("generate --problem tsp -n 8 --count 6 --seed 7 --overwrite --out " +
            (tmp / "a.txt")) == 0);
}

TEST_CASE("usage errors exit nonzero, data errors exit 2") {
  TempDir tmp;
  CHECK(run("frobnicate") != 0);
  CHECK(run("generate --seed 1") != 0);  // missing --out
  CHECK(run("generate --problem tsp -n 8 --count 0 --seed 1 --out " + (tmp / "x.txt")) == 2);
  CHECK(run("oracle --dataset " + (tmp / "missing.txt")) == 2);
}

TEST_CASE("oracle runs are cached") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 9 --count 4 --seed 3 --out " + (tmp / "d.txt")) == 0);
  REQUIRE(run("oracle --dataset " + (tmp / "d.txt")) == 0);
  std::string cache = tmp / "d.txt.held_karp.oracle";
  REQUIRE(fs::exists(cache));
  auto before = slurp(cache);
  REQUIRE(run("oracle --dataset " + (tmp / "d.txt")) == 0);  // hit
  CHECK(slurp(cache) == before);
  // cache keyed to content: regenerate with a new seed, stale cache refused
  REQUIRE(run("generate --problem tsp -n 9 --count 4 --seed 4 --overwrite --out " +
              (tmp / "d.txt")) == 0);
  CHECK(run("oracle --dataset " + (tmp / "d.txt")) == 2);
}

TEST_CASE("train writes metrics and checkpoints; resume matches the full run bit for bit") {
  TempDir tmp;
  std::string base = "train --problem tsp -n 5 --batch 4 --hidden 8 --seed 9";
  REQUIRE(run(base + " --steps 6 --out " + (tmp / "full")) == 0);
  REQUIRE(fs::exists(tmp / "full/metrics.csv"));
  REQUIRE(fs::exists(tmp / "full/ckpt_final_actor.bin"));
  REQUIRE(fs::exists(tmp / "full/ckpt_final_critic.bin"));

  REQUIRE(run(base + " --steps 3 --out " + (tmp / "half")) == 0);
  REQUIRE(run(base + " --steps 6 --out " + (tmp / "rest") + " --resume " +
              (tmp / "half/ckpt_final")) == 0);
  CHECK(slurp(tmp / "full/ckpt_final_actor.bin") == slurp(tmp / "rest/ckpt_final_actor.bin"));
  CHECK(slurp(tmp / "full/ckpt_final_critic.bin") == slurp(tmp / "rest/ckpt_final_critic.bin"));
}

TEST_CASE("end-to-end determinism: identical seeds, identical reports") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 6 --count 3 --seed 11 --out " + (tmp / "eval.txt")) == 0);
  std::string train = "train --problem tsp -n 6 --batch 4 --hidden 8 --steps 5 --seed 12 --out ";
  REQUIRE(run(train + (tmp / "r1")) == 0);
  REQUIRE(run(train + (tmp / "r2")) == 0);
  CHECK(drop_wallclock(slurp(tmp / "r1/metrics.csv")) ==
        drop_wallclock(slurp(tmp / "r2/metrics.csv")));
  CHECK(slurp(tmp / "r1/ckpt_final_actor.bin") == slurp(tmp / "r2/ckpt_final_actor.bin"));

  std::string eval = "eval --dataset " + (tmp / "eval.txt") + " --strategy sampling --budget 16" +
                     " --batch 4 -T 2.0 --seed 13 --checkpoint " + (tmp / "r1/ckpt_final_actor.bin");
  REQUIRE(run(eval + " --out " + (tmp / "e1")) == 0);
  REQUIRE(run(eval + " --out " + (tmp / "e2")) == 0);
  CHECK(drop_wallclock(slurp(tmp / "e1/per_instance.csv")) ==
        drop_wallclock(slurp(tmp / "e2/per_instance.csv")));
  CHECK(slurp(tmp / "e1/aggregate.json") == slurp(tmp / "e2/aggregate.json"));
  CHECK(fs::exists(tmp / "e1/sorted_ratios.csv"));

  // ratios reference the exact oracle and can't beat it
  auto csv = slurp(tmp / "e1/per_instance.csv");
  CHECK(csv.find("instance_id,strategy,budget,best_objective,optimal_objective,ratio,wallclock_ms") !=
        std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // comment
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    auto last_comma = line.rfind(',');
    auto prev_comma = line.rfind(',', last_comma - 1);
    double ratio = std::stod(line.substr(prev_comma + 1, last_comma - prev_comma - 1));
    CHECK(ratio >= 1.0 - 1e-12);
  }
}

TEST_CASE("search subcommand writes monotone trace files") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 6 --count 2 --seed 21 --out " + (tmp / "d.txt")) == 0);
  REQUIRE(run("train --problem tsp -n 6 --batch 4 --hidden 8 --steps 3 --seed 22 --out " +
              (tmp / "m")) == 0);
  REQUIRE(run("search --dataset " + (tmp / "d.txt") + " --strategy active_search --budget 24" +
              " --batch 4 --active-lr 0.001 --seed 23 --checkpoint " +
              (tmp / "m/ckpt_final_actor.bin") + " --out " + (tmp / "traces")) == 0);
  REQUIRE(fs::exists(tmp / "traces/trace_0.csv"));
  auto csv = slurp(tmp / "traces/trace_1.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // comment
  std::getline(lines, line);  // header
  double last = 1e18;
  int rows = 0;
  while (std::getline(lines, line)) {
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    auto c3 = line.find(',', c2 + 1);
    auto c4 = line.find(',', c3 + 1);
    double best = std::stod(line.substr(c3 + 1, c4 - c3 - 1));
    CHECK(best <= last);
    last = best;
    ++rows;
  }
  CHECK(rows >= 2);
}

TEST_CASE("render produces byte-identical SVG and rejects knapsack datasets") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 5 --count 1 --seed 31 --out " + (tmp / "d.txt")) == 0);
  std::string tour = "0,2,4,1,3";
  REQUIRE(run("render --dataset " + (tmp / "d.txt") + " --index 0 --tour " + tour + " --out " +
              (tmp / "a.svg")) == 0);
  REQUIRE(run("render --dataset " + (tmp / "d.txt") + " --index 0 --tour " + tour + " --out " +
              (tmp / "b.svg")) == 0);
  auto svg = slurp(tmp / "a.svg");
  CHECK(svg == slurp(tmp / "b.svg"));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("n=5") != std::string::npos);

  REQUIRE(run("generate --problem knapsack -n 5 --count 1 --seed 32 --out " + (tmp / "k.txt")) ==
          0);
  CHECK(run("render --dataset " + (tmp / "k.txt") + " --index 0 --tour " + tour + " --out " +
            (tmp / "k.svg")) == 2);
  CHECK(run("render --dataset " + (tmp / "d.txt") + " --index 9 --tour " + tour + " --out " +
            (tmp / "x.svg")) == 2);
}

TEST_CASE("eval refuses a checkpoint that is not a policy") {
  TempDir tmp;
  REQUIRE(run("generate --problem tsp -n 5 --count 1 --seed 41 --out " + (tmp / "d.txt")) == 0);
  std::ofstream junk(tmp / "junk.bin", std::ios::binary);
  junk << "not a checkpoint";
  junk.close();
  CHECK(run("eval --dataset " + (tmp / "d.txt") + " --strategy greedy --seed 42 --checkpoint " +
            (tmp / "junk.bin") + " --out " + (tmp / "e")) == 2);
}
