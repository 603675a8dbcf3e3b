// Drives the installed binary end to end through std::system. The binary
// path is injected by the build as PROV_CLI_PATH.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const auto out_path = fs::temp_directory_path() /
                        ("prov_cli_out_" + std::to_string(counter) + ".txt");
  const auto err_path = fs::temp_directory_path() /
                        ("prov_cli_err_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(PROV_CLI_PATH) + " " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.stdout_text = slurp(out_path);
  result.stderr_text = slurp(err_path);
  fs::remove(out_path);
  fs::remove(err_path);
  return result;
}

// One shared scratch dir; a small corpus keeps the suite quick.
class Workspace {
 public:
  Workspace() : root_(fs::temp_directory_path() / "prov_cli_ws") {
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream spec(root_ / "spec.json");
    spec << R"({
      "seed": 5,
      "benign": {"n_processes": 40, "n_files": 90, "n_sockets": 20, "n_events": 700},
      "attack": {"n_attack_nodes": 8}
    })";
  }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

 private:
  fs::path root_;
};

Workspace& ws() {
  static Workspace instance;
  return instance;
}

std::string train_flags() {
  return " --lr 0.01 --epochs 40 --seed 5 --hidden1 64 --hidden2 32 --dropout 0.25";
}

}  // namespace

TEST_CASE("no arguments yields usage and exit code 2") {
  const auto r = run_cli("");
  CHECK(r.exit_code == 2);
  CHECK(r.stderr_text.find("Usage") != std::string::npos);
}

TEST_CASE("help exits zero") {
  const auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("parse") != std::string::npos);
  CHECK(r.stdout_text.find("fed-train") != std::string::npos);
}

TEST_CASE("full chain: synth, parse, build-graph, train, score") {
  auto r = run_cli("synth --spec " + ws().path("spec.json") + " --out " +
                   ws().path("corpus.jsonl") + " --labels " + ws().path("labels.tsv") +
                   " --manifest " + ws().path("manifest.json"));
  REQUIRE(r.exit_code == 0);

  r = run_cli("parse --input " + ws().path("corpus.jsonl") + " --report " +
              ws().path("parse_report.json"));
  REQUIRE(r.exit_code == 0);
  const json parse_report = json::parse(slurp(ws().path("parse_report.json")));
  CHECK(parse_report.at("rejected").get<int>() == 0);
  CHECK(parse_report.at("accepted").get<int>() > 0);
  CHECK(parse_report.contains("rejects"));

  r = run_cli("build-graph --records " + ws().path("corpus.jsonl") + " --out " +
              ws().path("graph.json"));
  REQUIRE(r.exit_code == 0);

  r = run_cli("train --graph " + ws().path("graph.json") + " --labels " +
              ws().path("labels.tsv") + " --out " + ws().path("ckpt.json") +
              train_flags());
  REQUIRE(r.exit_code == 0);

  r = run_cli("score --graph " + ws().path("graph.json") + " --ckpt " +
              ws().path("ckpt.json") + " --labels " + ws().path("labels.tsv") +
              " --strategy f1 --out " + ws().path("report.json"));
  REQUIRE(r.exit_code == 0);
  const json report = json::parse(slurp(ws().path("report.json")));
  CHECK(report.contains("threshold"));
  CHECK(report.contains("flags"));
  CHECK(report.at("metrics").is_object());
  CHECK(report.at("flags").size() > 0);
}

TEST_CASE("trace and export-dot emit valid artifacts") {
  auto r = run_cli("trace --graph " + ws().path("graph.json") + " --report " +
                   ws().path("report.json") + " --depth 8 --out " +
                   ws().path("traces.json") + " --dot " + ws().path("traces.dot"));
  REQUIRE(r.exit_code == 0);
  const json traces = json::parse(slurp(ws().path("traces.json")));
  CHECK(traces.at("traces").is_array());
  CHECK(oracle::DotChecker(slurp(ws().path("traces.dot"))).valid());

  r = run_cli("export-dot --graph " + ws().path("graph.json") + " --report " +
              ws().path("report.json") + " --out " + ws().path("graph.dot"));
  REQUIRE(r.exit_code == 0);
  const std::string dot = slurp(ws().path("graph.dot"));
  CHECK(oracle::DotChecker(dot).valid());
  CHECK(dot.find("color=red") != std::string::npos);
  CHECK(dot.find("color=blue") != std::string::npos);
}

TEST_CASE("metrics subcommand recomputes from report plus labels") {
  const auto r = run_cli("metrics --report " + ws().path("report.json") +
                         " --labels " + ws().path("labels.tsv") + " --out " +
                         ws().path("metrics.json"));
  REQUIRE(r.exit_code == 0);
  const json metrics = json::parse(slurp(ws().path("metrics.json")));
  CHECK(metrics.contains("tp"));
  CHECK(metrics.contains("fpr"));
  CHECK(metrics.at("tp").get<int>() + metrics.at("fn").get<int>() == 8);
}

TEST_CASE("mismatched checkpoint dimensions exit 1 with a shape error") {
  // A checkpoint trained on a different type universe cannot score this
  // graph: the corpus here has no attack, so it lacks the rare edge types.
  auto r = run_cli("synth --out " + ws().path("benign.jsonl") + " --no-attack --seed 6");
  REQUIRE(r.exit_code == 0);
  r = run_cli("build-graph --records " + ws().path("benign.jsonl") + " --out " +
              ws().path("benign_graph.json"));
  REQUIRE(r.exit_code == 0);
  r = run_cli("--json-errors score --graph " + ws().path("benign_graph.json") +
              " --ckpt " + ws().path("ckpt.json") + " --strategy quantile:0.95 --out " +
              ws().path("bad_report.json"));
  CHECK(r.exit_code == 1);
  const json err = json::parse(r.stderr_text);
  CHECK(err.at("error").get<std::string>() == "ShapeMismatch");
}

TEST_CASE("identical seeds produce byte-identical artifacts") {
  auto r = run_cli("synth --spec " + ws().path("spec.json") + " --out " +
                   ws().path("corpus2.jsonl") + " --labels " + ws().path("labels2.tsv"));
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(ws().path("corpus2.jsonl")) == slurp(ws().path("corpus.jsonl")));
  CHECK(slurp(ws().path("labels2.tsv")) == slurp(ws().path("labels.tsv")));

  r = run_cli("build-graph --records " + ws().path("corpus2.jsonl") + " --out " +
              ws().path("graph2.json"));
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(ws().path("graph2.json")) == slurp(ws().path("graph.json")));

  r = run_cli("train --graph " + ws().path("graph2.json") + " --labels " +
              ws().path("labels2.tsv") + " --out " + ws().path("ckpt2.json") +
              train_flags());
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(ws().path("ckpt2.json")) == slurp(ws().path("ckpt.json")));
}

TEST_CASE("config file supplies defaults that flags override") {
  std::ofstream cfg(ws().path("synth_config.json"));
  cfg << R"({"synth": {"out": ")" << ws().path("cfg_corpus.jsonl")
      << R"(", "seed": 9, "no-attack": true}})";
  cfg.close();
  auto r = run_cli("--config " + ws().path("synth_config.json") + " synth");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(ws().path("cfg_corpus.jsonl")));

  // Explicit flag wins over the config value.
  r = run_cli("--config " + ws().path("synth_config.json") + " synth --out " +
              ws().path("cfg_corpus_b.jsonl"));
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(ws().path("cfg_corpus_b.jsonl")));
  CHECK(slurp(ws().path("cfg_corpus_b.jsonl")) == slurp(ws().path("cfg_corpus.jsonl")));
}

TEST_CASE("environment variable supplies the seed") {
  auto r = run_cli("synth --out " + ws().path("env_a.jsonl"));
  REQUIRE(r.exit_code == 0);
  const auto default_seed = slurp(ws().path("env_a.jsonl"));

  setenv("PROV_SENTINEL_SEED", "31337", 1);
  r = run_cli("synth --out " + ws().path("env_b.jsonl"));
  unsetenv("PROV_SENTINEL_SEED");
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(ws().path("env_b.jsonl")) != default_seed);
}

TEST_CASE("fed-train runs a small plaintext and encrypted federation") {
  std::ofstream cfg(ws().path("fed.json"));
  cfg << R"({
    "k_orgs": 2, "rounds": 2, "local_epochs": 2,
    "key_bits": 128, "frac_bits": 40, "entropy_seed": 99,
    "gcn": {"hidden1": 8, "hidden2": 8, "learning_rate": 0.01,
            "dropout_rate": 0.0, "seed": 3},
    "orgs": [
      {"synth": {"seed": 11, "benign": {"n_processes": 10, "n_files": 20,
                 "n_sockets": 5, "n_events": 120}}},
      {"synth": {"seed": 12, "benign": {"n_processes": 10, "n_files": 20,
                 "n_sockets": 5, "n_events": 120}}}
    ]
  })";
  cfg.close();

  auto r = run_cli("fed-train --config " + ws().path("fed.json") +
                   " --mode plaintext --out " + ws().path("fed_plain.json") +
                   " --history " + ws().path("fed_hist.json"));
  REQUIRE(r.exit_code == 0);
  const json hist = json::parse(slurp(ws().path("fed_hist.json")));
  REQUIRE(hist.is_array());
  CHECK(hist.size() == 2);
  CHECK(hist[0].at("client_losses").size() == 2);
  CHECK(hist[0].contains("u_global_linf"));

  r = run_cli("fed-train --config " + ws().path("fed.json") +
              " --mode encrypted --out " + ws().path("fed_enc.json") +
              " --history " + ws().path("fed_hist_enc.json") + " --transcript-dir " +
              ws().path("transcript"));
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(ws().path("transcript") + "/server/public_key.json"));
  CHECK(!fs::exists(ws().path("transcript") + "/server/private_key.json"));
  CHECK(fs::exists(ws().path("transcript") + "/clients/private_key.json"));

  // Encrypted and plaintext global models agree on this tiny fixture.
  const json a = json::parse(slurp(ws().path("fed_plain.json")));
  const json b = json::parse(slurp(ws().path("fed_enc.json")));
  const auto va = a.at("params").at("w1").at("data").get<std::vector<double>>();
  const auto vb = b.at("params").at("w1").at("data").get<std::vector<double>>();
  REQUIRE(va.size() == vb.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    CHECK(std::fabs(va[i] - vb[i]) < 1e-6);
  }
}

TEST_CASE("pipeline produces a summary consistent with its artifacts") {
  const auto workdir = ws().path("pipe");
  auto r = run_cli("pipeline --synth-spec " + ws().path("spec.json") +
                   " --workdir " + workdir + train_flags() + " --strategy f1 --depth 8");
  REQUIRE(r.exit_code == 0);
  const json summary = json::parse(slurp(workdir + "/summary.json"));
  CHECK(summary.at("parse").at("rejected").get<int>() == 0);
  CHECK(summary.at("graph").at("nodes").get<int>() > 0);
  CHECK(summary.contains("threshold"));
  CHECK(summary.at("metrics").is_object());

  const json report = json::parse(slurp(workdir + "/report.json"));
  CHECK(summary.at("flagged").get<std::size_t>() == report.at("flags").size());
  CHECK(summary.at("threshold").get<double>() ==
        report.at("threshold").get<double>());

  const json traces = json::parse(slurp(workdir + "/traces.json"));
  CHECK(summary.at("trace_count").get<std::size_t>() == traces.at("traces").size());
  CHECK(oracle::DotChecker(slurp(workdir + "/graph.dot")).valid());

  // Summary metrics match an independent recomputation path.
  CHECK(summary.at("metrics").contains("recall"));
}
