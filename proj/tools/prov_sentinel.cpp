// prov-sentinel: provenance-graph anomaly detection toolkit.
//
// Subcommands cover the full pipeline (parse -> build-graph -> train ->
// score -> trace/export-dot), the synthetic corpus generator, offline
// metric computation, and the encrypted federation simulator. All
// artifacts are plain JSON/JSONL/TSV/DOT.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "prov/anomaly.hpp"
#include "prov/federation.hpp"
#include "prov/gcn.hpp"
#include "prov/graph.hpp"
#include "prov/paillier.hpp"
#include "prov/records.hpp"
#include "prov/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --config accepts a JSON object whose keys mirror the long option names;
// nested objects become dotted sections. Command-line values take
// precedence over config-file values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc = json::parse(input, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw CLI::FileError("config file is not a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static void flatten(const json& node, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : node.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        flatten(value, deeper, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) {
          item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
      } else {
        item.inputs.push_back(value.is_string() ? value.get<std::string>()
                                                : value.dump());
      }
      out.push_back(std::move(item));
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) prov::raise(prov::Errc::io_failure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) prov::raise(prov::Errc::io_failure, "cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

prov::ThresholdSpec parse_strategy(const std::string& text) {
  if (text == "f1") return prov::ThresholdSpec::f1_sweep();
  if (text.rfind("quantile:", 0) == 0) {
    const double q = std::stod(text.substr(9));
    return prov::ThresholdSpec::quantile(q);
  }
  prov::raise(prov::Errc::config_error,
              "strategy must be 'f1' or 'quantile:<q>', got '" + text + "'");
}

struct GcnFlags {
  double lr = 0.5;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  double dropout = 0.5;
  std::size_t hidden1 = 256;
  std::size_t hidden2 = 128;

  void attach(CLI::App* cmd, double default_lr) {
    lr = default_lr;
    cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
    cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed (env PROV_SENTINEL_SEED)")
        ->envname("PROV_SENTINEL_SEED")
        ->capture_default_str();
    cmd->add_option("--dropout", dropout, "dropout rate")->capture_default_str();
    cmd->add_option("--hidden1", hidden1, "first hidden width")->capture_default_str();
    cmd->add_option("--hidden2", hidden2, "second hidden width")->capture_default_str();
  }

  prov::GcnConfig to_config(std::size_t input_dim, std::size_t output_dim) const {
    prov::GcnConfig cfg;
    cfg.layer_dims = {input_dim, hidden1, hidden2, output_dim};
    cfg.dropout_rate = dropout;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
  }
};

// ---------------------------------------------------------------------
// Command bodies. Each returns the process exit code.

int cmd_parse(const std::string& input, const std::string& report_path,
              const std::string& out_path) {
  const auto [records, report] = prov::parse_file(input);
  write_file(report_path, prov::report_to_json(report));
  if (!out_path.empty()) {
    std::ostringstream lines;
    for (const auto& r : records) lines << prov::record_to_json(r) << '\n';
    write_file(out_path, lines.str());
  }
  std::cout << "accepted " << report.accepted << ", rejected " << report.rejected
            << '\n';
  return 0;
}

int cmd_build_graph(const std::string& records_path, const std::string& out_path,
                    bool strict) {
  const auto [records, report] = prov::parse_file(records_path);
  const auto graph = prov::build_graph(records, strict);
  prov::save_graph(graph, out_path);
  std::cout << "graph: " << graph.node_count() << " nodes, " << graph.edge_count()
            << " edges, " << graph.type_maps.n_v << " node types, "
            << graph.type_maps.n_e << " edge types\n";
  return 0;
}

int cmd_train(const std::string& graph_path, const std::string& out_path,
              const std::string& labels_path, const GcnFlags& flags) {
  const auto graph = prov::load_graph(graph_path);
  const auto x = prov::one_hot_node_types(graph);
  const auto target = prov::node_features(graph);
  const auto adj = prov::normalized_adjacency(graph);

  std::optional<std::vector<std::uint8_t>> labels;
  if (!labels_path.empty()) {
    labels = prov::label_vector(graph, prov::load_labels(labels_path));
  }
  const auto masks = prov::split_masks(graph.node_count(), {0.6, 0.2, 0.2},
                                       prov::derive_seed(flags.seed, "split"),
                                       labels ? &*labels : nullptr);

  auto cfg = flags.to_config(x.cols(), target.cols());
  auto model = prov::init_model(cfg);
  const auto result = prov::train(model, adj, x, target, masks, cfg);
  prov::save_checkpoint(model, out_path);
  std::cout << "trained " << cfg.epochs << " epochs; final train loss "
            << (result.loss_history.empty() ? 0.0 : result.loss_history.back())
            << '\n';
  return 0;
}

int cmd_score(const std::string& graph_path, const std::string& ckpt_path,
              const std::string& labels_path, std::string strategy,
              bool strategy_given, const std::string& out_path,
              const std::string& norm_name, std::uint64_t seed_override,
              bool has_seed_override) {
  const auto graph = prov::load_graph(graph_path);
  auto model = prov::load_checkpoint(ckpt_path);
  const auto x = prov::one_hot_node_types(graph);
  const auto target = prov::node_features(graph);
  const auto adj = prov::normalized_adjacency(graph);

  const auto [pred, cache] = prov::forward(model, adj, x, prov::RunMode::eval);
  const auto norm = norm_name == "l1" ? prov::ErrorNorm::l1 : prov::ErrorNorm::l2;
  const auto errors = prov::node_errors(pred, target, norm);

  std::optional<std::vector<std::uint8_t>> labels;
  if (!labels_path.empty()) {
    labels = prov::label_vector(graph, prov::load_labels(labels_path));
  }
  // Default strategy: sweep for the best F1 when labels exist, otherwise
  // the 0.95 validation quantile.
  if (!strategy_given) strategy = labels ? "f1" : "quantile:0.95";
  const std::uint64_t split_seed = prov::derive_seed(
      has_seed_override ? seed_override : model.config.seed, "split");
  const auto masks = prov::split_masks(graph.node_count(), {0.6, 0.2, 0.2},
                                       split_seed, labels ? &*labels : nullptr);

  std::vector<double> val_errors;
  std::vector<std::uint8_t> val_labels;
  for (std::size_t v = 0; v < errors.size(); ++v) {
    if (masks.val[v]) {
      val_errors.push_back(errors[v]);
      if (labels) val_labels.push_back((*labels)[v]);
    }
  }
  const auto spec = parse_strategy(strategy);
  if (spec.kind == prov::ThresholdSpec::Kind::f1_sweep && !labels) {
    prov::raise(prov::Errc::degenerate_labels,
                "f1 strategy needs --labels for the validation sweep");
  }
  const auto threshold =
      prov::select_threshold(val_errors, labels ? &val_labels : nullptr, spec);

  auto result = prov::flag_nodes(errors, threshold);
  if (labels) {
    // Detection quality is judged on held-out test nodes.
    std::vector<std::uint8_t> test_flags, test_labels;
    for (std::size_t v = 0; v < errors.size(); ++v) {
      if (masks.test[v]) {
        test_flags.push_back(result.flags[v]);
        test_labels.push_back((*labels)[v]);
      }
    }
    result.metrics = prov::compute_metrics(test_flags, test_labels);
  }
  write_file(out_path, prov::report_to_json(graph, threshold, result));
  std::cout << "threshold " << threshold.value << " (" << threshold.strategy
            << "); flagged "
            << std::count(result.flags.begin(), result.flags.end(), 1) << " of "
            << result.flags.size() << " nodes\n";
  return 0;
}

std::vector<std::uint32_t> flagged_from_report(const prov::ProvGraph& graph,
                                               const std::string& report_path) {
  const json doc = json::parse(read_file(report_path));
  std::vector<std::uint32_t> flagged;
  for (const auto& uuid : doc.at("flags")) {
    if (const auto idx = graph.find(uuid.get<std::string>())) {
      flagged.push_back(*idx);
    }
  }
  return flagged;
}

int cmd_trace(const std::string& graph_path, const std::string& report_path,
              std::size_t depth, const std::string& out_path,
              const std::string& dot_path) {
  const auto graph = prov::load_graph(graph_path);
  const auto flagged = flagged_from_report(graph, report_path);
  const auto traces = prov::trace_attack(graph, flagged, depth);
  if (!out_path.empty()) {
    write_file(out_path, prov::traces_to_json(graph, traces));
  }
  if (!dot_path.empty()) {
    std::vector<std::uint8_t> flags(graph.node_count(), 0);
    for (auto v : flagged) flags[v] = 1;
    write_file(dot_path, prov::export_dot(graph, flags, traces));
  }
  std::cout << traces.size() << " trace(s) from " << flagged.size()
            << " flagged node(s)\n";
  return 0;
}

int cmd_export_dot(const std::string& graph_path, const std::string& report_path,
                   std::size_t depth, bool with_traces,
                   const std::string& out_path) {
  const auto graph = prov::load_graph(graph_path);
  std::vector<std::uint8_t> flags(graph.node_count(), 0);
  std::vector<prov::AttackTrace> traces;
  if (!report_path.empty()) {
    const auto flagged = flagged_from_report(graph, report_path);
    for (auto v : flagged) flags[v] = 1;
    if (with_traces) traces = prov::trace_attack(graph, flagged, depth);
  }
  write_file(out_path, prov::export_dot(graph, flags, traces));
  return 0;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, bool has_seed,
              bool no_attack, const std::string& out_path,
              const std::string& labels_path, const std::string& manifest_path) {
  prov::SynthSpec spec;
  if (!spec_path.empty()) {
    spec = prov::synth_spec_from_json(read_file(spec_path));
  } else {
    spec.benign = prov::BenignSpec::defaults();
    spec.attack = prov::AttackScenario::default_five_phase();
  }
  if (has_seed) {
    spec.seed = seed;
    spec.benign.seed = seed;
  }
  if (no_attack) spec.attack.reset();

  const auto corpus = prov::generate(spec);
  prov::save_corpus(corpus.records, out_path);
  if (!labels_path.empty()) prov::save_labels(corpus.labels, labels_path);
  if (!manifest_path.empty()) prov::save_manifest(corpus.manifest, manifest_path);
  std::cout << corpus.records.size() << " records ("
            << corpus.manifest.n_attack_records << " injected)\n";
  return 0;
}

int cmd_metrics(const std::string& report_path, const std::string& labels_path,
                const std::string& out_path) {
  const json doc = json::parse(read_file(report_path));
  std::set<std::string> flagged;
  for (const auto& uuid : doc.at("flags")) flagged.insert(uuid.get<std::string>());
  const auto labels = prov::load_labels(labels_path);

  // Deterministic order: sort label uuids before building the vectors.
  std::map<std::string, bool> sorted(labels.begin(), labels.end());
  std::vector<std::uint8_t> flag_vec, label_vec;
  for (const auto& [uuid, anomalous] : sorted) {
    flag_vec.push_back(flagged.contains(uuid) ? 1 : 0);
    label_vec.push_back(anomalous ? 1 : 0);
  }
  const auto m = prov::compute_metrics(flag_vec, label_vec);
  const auto text = prov::metrics_to_json(m);
  if (!out_path.empty()) write_file(out_path, text);
  std::cout << text << '\n';
  return 0;
}

// Federation config file: k_orgs, rounds, local_epochs, key_bits,
// frac_bits, mode, gcn{...}, orgs[{graph|synth, labels?}].
struct FedSetup {
  prov::FederationConfig config;
  std::vector<prov::OrgDataset> datasets;
};

FedSetup load_federation(const std::string& config_path) {
  const json doc = json::parse(read_file(config_path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    prov::raise(prov::Errc::config_error, "federation config is not a JSON object");
  }
  FedSetup setup;
  auto& cfg = setup.config;
  cfg.k_orgs = doc.value("k_orgs", cfg.k_orgs);
  cfg.rounds = doc.value("rounds", cfg.rounds);
  cfg.local_epochs = doc.value("local_epochs", cfg.local_epochs);
  cfg.key_bits = doc.value("key_bits", cfg.key_bits);
  cfg.frac_bits = doc.value("frac_bits", cfg.frac_bits);
  cfg.entropy_seed = doc.value("entropy_seed", cfg.entropy_seed);
  cfg.early_stop_linf = doc.value("early_stop_linf", cfg.early_stop_linf);
  if (doc.contains("mode")) {
    cfg.mode = doc.at("mode").get<std::string>() == "plaintext"
                   ? prov::FedMode::plaintext
                   : prov::FedMode::encrypted;
  }
  cfg.gcn.layer_dims = {0, 256, 128, 0};
  if (doc.contains("gcn")) {
    const auto& g = doc.at("gcn");
    cfg.gcn.layer_dims[1] = g.value("hidden1", cfg.gcn.layer_dims[1]);
    cfg.gcn.layer_dims[2] = g.value("hidden2", cfg.gcn.layer_dims[2]);
    cfg.gcn.dropout_rate = g.value("dropout_rate", cfg.gcn.dropout_rate);
    cfg.gcn.learning_rate = g.value("learning_rate", cfg.gcn.learning_rate);
    cfg.gcn.seed = g.value("seed", cfg.gcn.seed);
  }

  if (!doc.contains("orgs") || !doc.at("orgs").is_array()) {
    prov::raise(prov::Errc::config_error, "federation config needs an orgs array");
  }
  int k = 0;
  for (const auto& org : doc.at("orgs")) {
    prov::ProvGraph graph;
    std::optional<std::vector<std::uint8_t>> labels;
    if (org.contains("graph")) {
      graph = prov::load_graph(org.at("graph").get<std::string>());
      if (org.contains("labels")) {
        labels = prov::label_vector(
            graph, prov::load_labels(org.at("labels").get<std::string>()));
      }
    } else if (org.contains("synth")) {
      auto spec = prov::synth_spec_from_json(org.at("synth").dump());
      spec.benign.org_id = k;
      const auto corpus = prov::generate(spec);
      graph = prov::build_graph(corpus.records);
      labels = prov::label_vector(graph, corpus.labels);
    } else {
      prov::raise(prov::Errc::config_error,
                  "each org needs either a graph path or a synth spec");
    }
    const auto split_seed =
        prov::derive_seed(cfg.gcn.seed, "split-org:" + std::to_string(k));
    setup.datasets.push_back(prov::make_org_dataset(
        std::move(graph), labels ? &*labels : nullptr, split_seed));
    ++k;
  }
  if (static_cast<int>(setup.datasets.size()) != cfg.k_orgs) {
    prov::raise(prov::Errc::config_error, "orgs array size does not match k_orgs");
  }
  return setup;
}

int cmd_fed_train(const std::string& config_path, const std::string& mode,
                  const std::string& out_path, const std::string& history_path,
                  const std::string& transcript_dir) {
  auto setup = load_federation(config_path);
  if (mode == "plaintext") setup.config.mode = prov::FedMode::plaintext;
  if (mode == "encrypted") setup.config.mode = prov::FedMode::encrypted;
  if (!transcript_dir.empty()) setup.config.transcript_dir = transcript_dir;

  const auto result = prov::run_federation(setup.config, setup.datasets);
  if (!out_path.empty()) prov::save_checkpoint(result.global_model, out_path);
  if (!history_path.empty()) {
    write_file(history_path, prov::history_to_json(result.history));
  }
  std::cout << "federation of " << setup.config.k_orgs << " orgs, "
            << result.history.size() << " round(s) completed\n";
  return 0;
}

int cmd_pipeline(const std::string& synth_spec_path, const std::string& workdir,
                 const GcnFlags& flags, const std::string& strategy,
                 std::size_t depth) {
  fs::create_directories(workdir);
  const auto path = [&](const char* name) {
    return (fs::path(workdir) / name).string();
  };

  // Generation phase.
  prov::SynthSpec spec;
  if (!synth_spec_path.empty()) {
    spec = prov::synth_spec_from_json(read_file(synth_spec_path));
  } else {
    spec.benign = prov::BenignSpec::defaults();
    spec.attack = prov::AttackScenario::default_five_phase();
  }
  spec.seed = flags.seed;
  spec.benign.seed = flags.seed;
  const auto corpus = prov::generate(spec);
  prov::save_corpus(corpus.records, path("corpus.jsonl"));
  prov::save_labels(corpus.labels, path("labels.tsv"));
  prov::save_manifest(corpus.manifest, path("manifest.json"));

  // Extraction phase.
  const auto [records, report] = prov::parse_file(path("corpus.jsonl"));
  write_file(path("parse_report.json"), prov::report_to_json(report));

  // Representation phase.
  const auto graph = prov::build_graph(records);
  prov::save_graph(graph, path("graph.json"));
  const auto x = prov::one_hot_node_types(graph);
  const auto target = prov::node_features(graph);
  const auto adj = prov::normalized_adjacency(graph);
  const auto labels = prov::label_vector(graph, corpus.labels);
  const auto masks = prov::split_masks(graph.node_count(), {0.6, 0.2, 0.2},
                                       prov::derive_seed(flags.seed, "split"),
                                       &labels);

  // Training phase.
  auto cfg = flags.to_config(x.cols(), target.cols());
  auto model = prov::init_model(cfg);
  const auto train_result = prov::train(model, adj, x, target, masks, cfg);
  prov::save_checkpoint(model, path("model.json"));

  // Identification phase.
  const auto [pred, cache] = prov::forward(model, adj, x, prov::RunMode::eval);
  const auto errors = prov::node_errors(pred, target);
  std::vector<double> val_errors;
  std::vector<std::uint8_t> val_labels;
  for (std::size_t v = 0; v < errors.size(); ++v) {
    if (masks.val[v]) {
      val_errors.push_back(errors[v]);
      val_labels.push_back(labels[v]);
    }
  }
  const auto threshold =
      prov::select_threshold(val_errors, &val_labels, parse_strategy(strategy));
  auto detection = prov::flag_nodes(errors, threshold);
  std::vector<std::uint8_t> test_flags, test_labels;
  for (std::size_t v = 0; v < errors.size(); ++v) {
    if (masks.test[v]) {
      test_flags.push_back(detection.flags[v]);
      test_labels.push_back(labels[v]);
    }
  }
  detection.metrics = prov::compute_metrics(test_flags, test_labels);
  write_file(path("report.json"), prov::report_to_json(graph, threshold, detection));

  std::vector<std::uint32_t> flagged;
  for (std::size_t v = 0; v < detection.flags.size(); ++v) {
    if (detection.flags[v]) flagged.push_back(static_cast<std::uint32_t>(v));
  }
  const auto traces = prov::trace_attack(graph, flagged, depth);
  write_file(path("traces.json"), prov::traces_to_json(graph, traces));
  write_file(path("graph.dot"), prov::export_dot(graph, detection.flags, traces));

  json summary;
  summary["parse"] = {{"accepted", report.accepted}, {"rejected", report.rejected}};
  summary["graph"] = {{"nodes", graph.node_count()},
                      {"edges", graph.edge_count()},
                      {"node_types", graph.type_maps.n_v},
                      {"edge_types", graph.type_maps.n_e}};
  summary["train"] = {
      {"epochs", cfg.epochs},
      {"final_loss",
       train_result.loss_history.empty() ? 0.0 : train_result.loss_history.back()}};
  summary["threshold"] = threshold.value;
  summary["strategy"] = threshold.strategy;
  summary["flagged"] = flagged.size();
  summary["trace_count"] = traces.size();
  summary["metrics"] = json::parse(prov::metrics_to_json(*detection.metrics));
  write_file(path("summary.json"), summary.dump(2));
  std::cout << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"provenance-graph anomaly detection toolkit"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());

  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "emit errors as JSON objects on stderr");
  app.set_config("--config", "",
                 "JSON config file; subcommand options sit under a key named "
                 "after the subcommand");

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "validate a JSON-lines audit log");
  std::string parse_input, parse_report, parse_out;
  parse_cmd->add_option("--input", parse_input, "input JSONL file")->required();
  parse_cmd->add_option("--report", parse_report, "parse report output")->required();
  parse_cmd->add_option("--out", parse_out, "optional normalized records output");

  // build-graph
  auto* graph_cmd =
      app.add_subcommand("build-graph", "build a typed graph from records");
  std::string bg_records, bg_out;
  bool bg_strict = false;
  graph_cmd->add_option("--records", bg_records, "records JSONL file")->required();
  graph_cmd->add_option("--out", bg_out, "graph JSON output")->required();
  graph_cmd->add_flag("--strict", bg_strict, "fail on undeclared uuids");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the reconstruction model");
  std::string tr_graph, tr_out, tr_labels;
  GcnFlags tr_flags;
  train_cmd->add_option("--graph", tr_graph, "graph JSON input")->required();
  train_cmd->add_option("--out", tr_out, "checkpoint output")->required();
  train_cmd->add_option("--labels", tr_labels,
                        "labels TSV (keeps the train mask benign)");
  tr_flags.attach(train_cmd, 0.5);

  // score
  auto* score_cmd =
      app.add_subcommand("score", "score nodes and select a threshold");
  std::string sc_graph, sc_ckpt, sc_labels, sc_out, sc_norm = "l2";
  std::string sc_strategy = "quantile:0.95";
  std::uint64_t sc_seed = 0;
  score_cmd->add_option("--graph", sc_graph, "graph JSON input")->required();
  score_cmd->add_option("--ckpt", sc_ckpt, "checkpoint input")->required();
  score_cmd->add_option("--labels", sc_labels, "labels TSV");
  auto* sc_strategy_opt =
      score_cmd->add_option("--strategy", sc_strategy,
                            "quantile:<q> or f1 (default: f1 with labels, "
                            "quantile:0.95 without)");
  score_cmd->add_option("--out", sc_out, "report JSON output")->required();
  score_cmd->add_option("--norm", sc_norm, "error norm: l2 or l1")
      ->check(CLI::IsMember({"l2", "l1"}))
      ->capture_default_str();
  auto* sc_seed_opt = score_cmd->add_option(
      "--seed", sc_seed, "split seed override (default: checkpoint seed)");

  // trace
  auto* trace_cmd =
      app.add_subcommand("trace", "trace neighborhoods of flagged nodes");
  std::string trc_graph, trc_report, trc_out, trc_dot;
  std::size_t trc_depth = 3;
  trace_cmd->add_option("--graph", trc_graph, "graph JSON input")->required();
  trace_cmd->add_option("--report", trc_report, "detection report input")->required();
  trace_cmd->add_option("--depth", trc_depth, "traversal depth limit")
      ->capture_default_str();
  trace_cmd->add_option("--out", trc_out, "traces JSON output");
  trace_cmd->add_option("--dot", trc_dot, "DOT output with trace clusters");

  // export-dot
  auto* dot_cmd = app.add_subcommand("export-dot", "render the graph as DOT");
  std::string dot_graph, dot_report, dot_out;
  std::size_t dot_depth = 3;
  bool dot_traces = false;
  dot_cmd->add_option("--graph", dot_graph, "graph JSON input")->required();
  dot_cmd->add_option("--report", dot_report,
                      "detection report (colors flagged nodes red)");
  dot_cmd->add_option("--out", dot_out, "DOT output path")->required();
  dot_cmd->add_flag("--with-traces", dot_traces, "emit trace clusters");
  dot_cmd->add_option("--depth", dot_depth, "trace depth when --with-traces")
      ->capture_default_str();

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "generate a labeled synthetic corpus");
  std::string sy_spec, sy_out, sy_labels, sy_manifest;
  std::uint64_t sy_seed = 1;
  bool sy_no_attack = false;
  synth_cmd->add_option("--spec", sy_spec, "generator spec JSON");
  synth_cmd->add_option("--out", sy_out, "corpus JSONL output")->required();
  synth_cmd->add_option("--labels", sy_labels, "labels TSV output");
  synth_cmd->add_option("--manifest", sy_manifest, "scenario manifest output");
  auto* sy_seed_opt = synth_cmd->add_option("--seed", sy_seed, "generator seed")
                          ->envname("PROV_SENTINEL_SEED");
  synth_cmd->add_flag("--no-attack", sy_no_attack, "benign corpus only");

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "compute detection metrics");
  std::string me_report, me_labels, me_out;
  metrics_cmd->add_option("--report", me_report, "detection report input")->required();
  metrics_cmd->add_option("--labels", me_labels, "labels TSV input")->required();
  metrics_cmd->add_option("--out", me_out, "metrics JSON output");

  // fed-train
  auto* fed_cmd = app.add_subcommand("fed-train", "run the federation simulator");
  std::string fd_config, fd_mode, fd_out, fd_history, fd_transcript;
  fed_cmd->add_option("--config", fd_config, "federation config JSON")->required();
  fed_cmd->add_option("--mode", fd_mode, "encrypted or plaintext")
      ->check(CLI::IsMember({"encrypted", "plaintext"}));
  fed_cmd->add_option("--out", fd_out, "global model checkpoint output");
  fed_cmd->add_option("--history", fd_history, "per-round history output");
  fed_cmd->add_option("--transcript-dir", fd_transcript,
                      "write role-scoped message files under this directory");

  // pipeline
  auto* pipe_cmd = app.add_subcommand(
      "pipeline", "synth -> parse -> graph -> train -> score -> trace");
  std::string pl_spec, pl_workdir = "pipeline-out", pl_strategy = "f1";
  std::size_t pl_depth = 5;
  GcnFlags pl_flags;
  pipe_cmd->add_option("--synth-spec", pl_spec, "generator spec JSON");
  pipe_cmd->add_option("--workdir", pl_workdir, "artifact directory")
      ->capture_default_str();
  pipe_cmd->add_option("--strategy", pl_strategy, "thresholding strategy")
      ->capture_default_str();
  pipe_cmd->add_option("--depth", pl_depth, "trace depth")->capture_default_str();
  pl_flags.attach(pipe_cmd, 0.01);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "Usage:\n" << app.help();
    return 2;
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(parse_input, parse_report, parse_out);
    if (graph_cmd->parsed()) return cmd_build_graph(bg_records, bg_out, bg_strict);
    if (train_cmd->parsed()) return cmd_train(tr_graph, tr_out, tr_labels, tr_flags);
    if (score_cmd->parsed()) {
      return cmd_score(sc_graph, sc_ckpt, sc_labels, sc_strategy,
                       sc_strategy_opt->count() > 0, sc_out, sc_norm, sc_seed,
                       sc_seed_opt->count() > 0);
    }
    if (trace_cmd->parsed()) {
      return cmd_trace(trc_graph, trc_report, trc_depth, trc_out, trc_dot);
    }
    if (dot_cmd->parsed()) {
      return cmd_export_dot(dot_graph, dot_report, dot_depth, dot_traces, dot_out);
    }
    if (synth_cmd->parsed()) {
      return cmd_synth(sy_spec, sy_seed, sy_seed_opt->count() > 0, sy_no_attack,
                       sy_out, sy_labels, sy_manifest);
    }
    if (metrics_cmd->parsed()) return cmd_metrics(me_report, me_labels, me_out);
    if (fed_cmd->parsed()) {
      return cmd_fed_train(fd_config, fd_mode, fd_out, fd_history, fd_transcript);
    }
    if (pipe_cmd->parsed()) {
      return cmd_pipeline(pl_spec, pl_workdir, pl_flags, pl_strategy, pl_depth);
    }
  } catch (const prov::Error& e) {
    if (json_errors) {
      json err{{"error", e.code_name()}, {"message", e.what()}};
      std::cerr << err.dump() << '\n';
    } else {
      std::cerr << "error (" << e.code_name() << "): " << e.what() << '\n';
    }
    return 1;
  } catch (const std::exception& e) {
    if (json_errors) {
      json err{{"error", "Internal"}, {"message", e.what()}};
      std::cerr << err.dump() << '\n';
    } else {
      std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
  }
  return 0;
}
