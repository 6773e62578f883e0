#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "zggp/cli.hpp"
#include "zggp/neural/model_io.hpp"

using namespace zggp;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json manifest(const std::string& artifact) {
  std::ifstream in(manifest_path(artifact));
  return nlohmann::json::parse(in);
}

// Re-runs the command recorded in a manifest and returns the exit code.
int rerun(const nlohmann::json& m) {
  return run(m["args"].get<std::vector<std::string>>()).code;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1 with documentation") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"generate", "--game", "chess", "--out", "x.bin"},
           {"generate", "--game", "tictactoe"},
           {"generate", "--game", "tictactoe", "--out", "x.bin", "--bogus"},
           {"train", "--dataset", "x.bin", "--out", "m.bin", "--preset", "huge"},
           {"train", "--dataset", "x.bin", "--out", "m.bin", "--arch", "mlp"},
           {"eval", "--game", "nope"},
           {"eval", "--game", "tictactoe", "--games", "3"},
           {"gradcheck", "--game", "chess"},
           {"play", "--game", "go"},
       }) {
    const Run r = run(args);
    INFO(args.size());
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
    CHECK(r.err.find("--") != std::string::npos);
  }
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"generate", "--help"}).out.find("--plays") != std::string::npos);
  CHECK(run({"--version"}).out.find(kToolVersion) != std::string::npos);
}

TEST_CASE("runtime failures exit 2") {
  const Run r = run({"train", "--dataset", "cli_missing.bin", "--out", "cli_m.bin"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"eval", "--game", "tictactoe", "--model", "cli_missing.mdl", "--games", "2",
             "--iterations", "5"}).code == 2);
}

TEST_CASE("gradcheck") {
  const Run r = run({"gradcheck", "--arch", "conv", "--game", "connect4", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(run({"gradcheck", "--arch", "attention", "--game", "hex-4"}).code == 0);
}

TEST_CASE("pipeline with manifests") {
  // generate
  const Run g = run({"generate", "--game", "breakthrough-5", "--plays", "6",
                     "--iterations", "40", "--seed", "7", "--workers", "1",
                     "--out", "cli_d.bin"});
  REQUIRE(g.code == 0);
  const auto gm = manifest("cli_d.bin");
  CHECK(gm["subcommand"] == "generate");
  CHECK(gm["version"] == kToolVersion);
  CHECK(gm["config"]["seed"] == 7);
  CHECK(gm["config"]["temperature_plies"] == 4);
  CHECK(gm["config"]["exploration_c"].get<double>() == doctest::Approx(1.414));
  CHECK(gm["config"]["permute_seed"].is_null());
  const auto first = file_bytes("cli_d.bin");
  std::filesystem::remove("cli_d.bin");
  CHECK(rerun(gm) == 0);
  CHECK(file_bytes("cli_d.bin") == first);

  // multi-worker generation writes the same bytes
  REQUIRE(run({"generate", "--game", "breakthrough-5", "--plays", "6",
               "--iterations", "40", "--seed", "7", "--workers", "8",
               "--out", "cli_d8.bin"}).code == 0);
  CHECK(file_bytes("cli_d8.bin") == first);

  // train
  const Run t = run({"train", "--dataset", "cli_d.bin", "--arch", "attention",
                     "--preset", "small", "--epochs", "2", "--workers", "1",
                     "--out", "cli_m.bin"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("train_loss") != std::string::npos);
  const auto tm = manifest("cli_m.bin");
  CHECK(tm["config"]["preset"] == "small");
  CHECK(tm["config"]["batch_size"] == 128);
  const auto model = file_bytes("cli_m.bin");
  std::filesystem::remove("cli_m.bin");
  CHECK(rerun(tm) == 0);
  CHECK(file_bytes("cli_m.bin") == model);
  CHECK(load_model("cli_m.bin").architecture() == Architecture::kAttention);

  // eval
  const Run e = run({"eval", "--game", "breakthrough-5", "--model", "cli_m.bin",
                     "--opponent", "uct", "--iterations", "20", "--games", "4",
                     "--seed", "11", "--workers", "1", "--out", "cli_r.txt"});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("%") != std::string::npos);
  CHECK(e.out.find("±") != std::string::npos);
  std::ifstream jl("cli_r.txt.jsonl");
  std::string line;
  REQUIRE(std::getline(jl, line));
  const auto rec = nlohmann::json::parse(line);
  CHECK(rec["n"] == 4);
  const auto em = manifest("cli_r.txt");
  CHECK(em["subcommand"] == "eval");
  const auto report = file_bytes("cli_r.txt");
  CHECK(rerun(em) == 0);
  CHECK(file_bytes("cli_r.txt") == report);

  // a game mismatch between model and eval game is a runtime failure
  CHECK(run({"eval", "--game", "reversi", "--model", "cli_m.bin", "--games", "2",
             "--iterations", "5"}).code == 2);
}

TEST_CASE("permuted pipeline") {
  REQUIRE(run({"generate", "--game", "hex-4", "--plays", "4", "--iterations", "30",
               "--permute-seed", "5", "--workers", "1", "--out", "cli_p.bin"}).code == 0);
  CHECK(manifest("cli_p.bin")["config"]["permute_seed"] == 5);
  REQUIRE(run({"train", "--dataset", "cli_p.bin", "--arch", "conv", "--preset", "small",
               "--epochs", "1", "--out", "cli_pm.bin"}).code == 0);
  const Run e = run({"eval", "--game", "hex-4", "--model", "cli_pm.bin", "--permute-seed",
                     "5", "--iterations", "10", "--games", "2"});
  CHECK(e.code == 0);
  CHECK(e.out.find("%") != std::string::npos);
}

TEST_CASE("play traces a game") {
  const Run r = run({"play", "--game", "tictactoe", "--a-iterations", "200",
                     "--b-iterations", "50", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ply   0") != std::string::npos);
  CHECK(r.out.find("root n=") != std::string::npos);
  CHECK(r.out.find("result") != std::string::npos);
}

}
