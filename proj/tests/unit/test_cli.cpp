#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "folk/annotation.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int folk_cli(const std::string& args) {
  std::string cmd = std::string(FOLK_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("folk_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return folk::read_file(p); }

}  // namespace

TEST_CASE("cli synth is deterministic") {
  auto d = scratch("synth");
  REQUIRE(folk_cli("synth --rng 7 --out " + (d / "a").string()) == 0);
  REQUIRE(folk_cli("synth --rng 7 --out " + (d / "b").string()) == 0);
  for (const char* f : {"corpus.jsonl", "truth.tsv", "labels.csv", "seed.txt", "spec.json", "manifest.json"})
    CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
  REQUIRE(folk_cli("synth --rng 8 --out " + (d / "c").string()) == 0);
  CHECK(slurp(d / "a" / "corpus.jsonl") != slurp(d / "c" / "corpus.jsonl"));
}

TEST_CASE("cli learn on the africa fixture") {
  auto d = scratch("learn");
  std::string base = "learn " + testing::test_data("africa.jsonl") + " --seed Africa --experts " +
                     testing::test_data("africa_experts.txt");
  REQUIRE(folk_cli(base + " --strategy m1 --out " + (d / "m1").string()) == 0);
  REQUIRE(folk_cli(base + " --strategy m3 --out " + (d / "m3").string()) == 0);
  auto m1 = slurp(d / "m1" / "folksonomy.txt"), m3 = slurp(d / "m3" / "folksonomy.txt");
  auto popular = [](const std::string& text) { return text.substr(0, text.find("# tree 2")); };
  CHECK(popular(m1).find("christma") != std::string::npos);
  CHECK(popular(m3).find("christma") == std::string::npos);
  CHECK(m3.find("holidai") != std::string::npos);

  // Self-evaluation.
  REQUIRE(folk_cli("evaluate " + (d / "m3" / "folksonomy.json").string() + " " + (d / "m3" / "folksonomy.json").string() +
                   " --out " + (d / "eval").string()) == 0);
  auto report = slurp(d / "eval" / "report.csv");
  CHECK(report.find(",1.000000,1.000000,1.000000,") != std::string::npos);

  // Replaying the manifest reproduces every artifact.
  REQUIRE(folk_cli("rerun " + (d / "m3" / "manifest.json").string() + " --out " + (d / "again").string()) == 0);
  for (const char* f : {"folksonomy.json", "folksonomy.txt", "diagnostics.csv", "summary.json", "manifest.json"})
    CHECK(slurp(d / "m3" / f) == slurp(d / "again" / f));
}

TEST_CASE("cli exit codes") {
  auto d = scratch("errors");
  CHECK(folk_cli("learn /nonexistent.jsonl --seed x --out " + d.string()) == 2);
  CHECK(folk_cli("no-such-command") == 2);
  fs::create_directories(d);
  folk::write_file(d / "bad.jsonl", "{\"user_id\": 3}\n");
  CHECK(folk_cli("ingest " + (d / "bad.jsonl").string()) == 2);
  CHECK(folk_cli("learn " + testing::test_data("africa.jsonl") + " --seed africa --strategy m3 --out " + (d / "x").string()) == 2);
  CHECK(folk_cli("learn " + testing::test_data("africa.jsonl") + " --seed africa --strategy m1 --max-sweeps 1 --stable-window 5 --out " +
                 (d / "y").string()) == 3);
  CHECK(folk_cli("--help") == 0);
}
