#include "prov/federation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace prov {

using nlohmann::json;
namespace fs = std::filesystem;

void FederationConfig::validate() const {
  if (k_orgs < 1) raise(Errc::config_error, "k_orgs must be >= 1");
  if (rounds < 0) raise(Errc::config_error, "rounds must be >= 0");
  if (local_epochs < 0) raise(Errc::config_error, "local_epochs must be >= 0");
  if (frac_bits < 1) raise(Errc::config_error, "frac_bits must be >= 1");
}

OrgDataset make_org_dataset(ProvGraph graph,
                            const std::vector<std::uint8_t>* labels,
                            std::uint64_t split_seed) {
  OrgDataset d;
  d.x = one_hot_node_types(graph);
  d.target = node_features(graph);
  d.masks = split_masks(graph.node_count(), {0.6, 0.2, 0.2}, split_seed, labels);
  d.graph = std::move(graph);
  return d;
}

KeyMaterial kga_setup(int key_bits, Entropy& entropy) {
  Keypair kp = keygen(key_bits, entropy);
  return KeyMaterial{std::move(kp.pub), std::move(kp.priv)};
}

std::string round_message_to_json(const RoundMessage& m) {
  json doc;
  doc["round"] = m.round;
  doc["sender"] = m.sender;
  if (!m.ciphertexts.empty()) {
    doc["payload_kind"] = "ciphertext";
    json values = json::array();
    for (const auto& c : m.ciphertexts) values.push_back(c.value.get_str());
    doc["ciphertexts"] = std::move(values);
    doc["fingerprint"] = m.ciphertexts.front().fingerprint;
  } else {
    doc["payload_kind"] = "plaintext";
    doc["values"] = m.values;
  }
  return doc.dump();
}

RoundMessage round_message_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "round message is not a JSON object");
  }
  RoundMessage m;
  m.round = doc.at("round").get<int>();
  m.sender = doc.at("sender").get<std::string>();
  if (doc.at("payload_kind").get<std::string>() == "ciphertext") {
    const std::string fingerprint = doc.at("fingerprint").get<std::string>();
    for (const auto& v : doc.at("ciphertexts")) {
      Ciphertext c;
      c.value = mpz_class(v.get<std::string>());
      c.fingerprint = fingerprint;
      m.ciphertexts.push_back(std::move(c));
    }
  } else {
    m.values = doc.at("values").get<std::vector<double>>();
  }
  return m;
}

AggregationServer::AggregationServer(PublicKey pk, int k_expected)
    : pk_(std::move(pk)), k_expected_(k_expected) {}

void AggregationServer::check_submissions(
    const std::vector<RoundMessage>& submissions, bool encrypted) const {
  if (static_cast<int>(submissions.size()) != k_expected_) {
    raise(Errc::incomplete_round,
          "expected " + std::to_string(k_expected_) + " submissions, got " +
              std::to_string(submissions.size()));
  }
  const std::size_t len = submissions.front().payload_size();
  for (const auto& m : submissions) {
    if (m.payload_size() != len) {
      raise(Errc::length_mismatch, "submissions have differing lengths");
    }
    if (encrypted && m.ciphertexts.empty()) {
      raise(Errc::bad_value, "plaintext submission in encrypted round");
    }
    if (!encrypted && m.values.empty() && len != 0) {
      raise(Errc::bad_value, "encrypted submission in plaintext round");
    }
  }
}

std::vector<Ciphertext> AggregationServer::aggregate(
    const std::vector<RoundMessage>& submissions) {
  check_submissions(submissions, /*encrypted=*/true);
  std::vector<std::vector<Ciphertext>> vectors;
  vectors.reserve(submissions.size());
  for (const auto& m : submissions) vectors.push_back(m.ciphertexts);
  auto result = aggregate_vectors(pk_, vectors);
  ++completed_rounds_;
  return result;
}

std::vector<double> AggregationServer::average(
    const std::vector<RoundMessage>& submissions) {
  check_submissions(submissions, /*encrypted=*/false);
  const std::size_t len = submissions.front().payload_size();
  std::vector<double> mean(len, 0.0);
  for (const auto& m : submissions) {
    for (std::size_t i = 0; i < len; ++i) mean[i] += m.values[i];
  }
  const double k = static_cast<double>(submissions.size());
  for (double& v : mean) v /= k;
  ++completed_rounds_;
  return mean;
}

OrgClient::OrgClient(int id, KeyMaterial keys, const OrgDataset* data,
                     GcnModel model, int frac_bits, int k_orgs)
    : id_(id),
      keys_(std::move(keys)),
      codec_(frac_bits, k_orgs, keys_.pub.n),
      k_orgs_(k_orgs),
      data_(data),
      model_(std::move(model)),
      w_old_(flatten(model_)) {}

void OrgClient::apply_global(const std::vector<double>& u_global) {
  if (u_global.size() != w_old_.values.size()) {
    raise(Errc::length_mismatch, "global update length does not match parameters");
  }
  for (std::size_t i = 0; i < u_global.size(); ++i) {
    w_old_.values[i] += u_global[i];
  }
  unflatten(w_old_, model_);
}

std::vector<double> OrgClient::local_round(int round, int epochs,
                                           double learning_rate,
                                           double* final_loss) {
  GcnConfig cfg = model_.config;
  cfg.epochs = static_cast<std::size_t>(epochs);
  cfg.learning_rate = learning_rate;
  // Same derivation on every client: two clients with identical data and
  // seed produce identical updates.
  cfg.seed = derive_seed(model_.config.seed, "round:" + std::to_string(round));
  const NormAdj adj = normalized_adjacency(data_->graph);
  TrainResult result = train(model_, adj, data_->x, data_->target, data_->masks, cfg);
  if (final_loss != nullptr) {
    *final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
  }
  FlatParams w_new = flatten(model_);
  std::vector<double> u(w_new.values.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = w_new.values[i] - w_old_.values[i];
  }
  // The next round's base is W_old + U_global, not W_new.
  unflatten(w_old_, model_);
  return u;
}

RoundMessage OrgClient::encrypt_update(int round, const std::vector<double>& u,
                                       Entropy& entropy) const {
  std::vector<double> scaled(u.size());
  const double k = static_cast<double>(k_orgs_);
  for (std::size_t i = 0; i < u.size(); ++i) scaled[i] = u[i] / k;
  RoundMessage m;
  m.round = round;
  m.sender = "client:" + std::to_string(id_);
  m.ciphertexts = encrypt_vector(keys_.pub, codec_, scaled, entropy);
  return m;
}

RoundMessage OrgClient::plain_update(int round, const std::vector<double>& u) const {
  RoundMessage m;
  m.round = round;
  m.sender = "client:" + std::to_string(id_);
  m.values = u;
  return m;
}

std::vector<double> OrgClient::decrypt_global(
    const std::vector<Ciphertext>& aggregate) const {
  return decrypt_vector(keys_.priv, keys_.pub, codec_, aggregate);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double linf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

FedRunResult run_federation(const FederationConfig& config,
                            const std::vector<OrgDataset>& datasets) {
  config.validate();
  if (static_cast<int>(datasets.size()) != config.k_orgs) {
    raise(Errc::config_error, "need one dataset per organization");
  }

  // Resolve data-dependent layer dimensions and check the orgs agree.
  GcnConfig gcn = config.gcn;
  const std::size_t n_v = datasets.front().x.cols();
  const std::size_t out_dim = datasets.front().target.cols();
  for (const auto& d : datasets) {
    if (d.x.cols() != n_v || d.target.cols() != out_dim) {
      raise(Errc::config_error,
            "organizations disagree on node/edge type dimensions");
    }
  }
  if (gcn.layer_dims[0] == 0) gcn.layer_dims[0] = n_v;
  if (gcn.layer_dims[3] == 0) gcn.layer_dims[3] = out_dim;
  if (gcn.layer_dims[0] != n_v || gcn.layer_dims[3] != out_dim) {
    raise(Errc::config_error, "configured layer dims do not match the data");
  }

  Entropy entropy = config.entropy_seed != 0 ? Entropy::seeded(config.entropy_seed)
                                             : Entropy::os();
  KeyMaterial keys = kga_setup(config.key_bits, entropy);

  const bool encrypted = config.mode == FedMode::encrypted;
  const bool transcript = config.transcript_dir.has_value();
  fs::path root = transcript ? fs::path(*config.transcript_dir) : fs::path();

  FedRunResult result;
  AggregationServer server(keys.pub, config.k_orgs);
  if (transcript) {
    // The server's directory only ever receives the public half.
    write_text(root / "server" / "public_key.json", public_key_to_json(keys.pub));
    write_text(root / "clients" / "public_key.json", public_key_to_json(keys.pub));
    write_text(root / "clients" / "private_key.json", private_key_to_json(keys.priv));
    result.server_inputs.push_back((root / "server" / "public_key.json").string());
  }

  // Shared initialization: every client starts from the same seeded model.
  std::vector<OrgClient> clients;
  clients.reserve(datasets.size());
  for (int k = 0; k < config.k_orgs; ++k) {
    clients.emplace_back(k, keys, &datasets[k], init_model(gcn), config.frac_bits,
                         config.k_orgs);
  }

  const std::size_t n_params = clients.front().w_old().values.size();
  std::vector<double> u_global(n_params, 0.0);

  for (int round = 1; round <= config.rounds; ++round) {
    for (auto& client : clients) client.apply_global(u_global);

    RoundRecord record;
    record.round = round;
    std::vector<std::vector<double>> updates;
    updates.reserve(clients.size());
    for (auto& client : clients) {
      double loss = 0.0;
      updates.push_back(client.local_round(round, config.local_epochs,
                                           gcn.learning_rate, &loss));
      record.client_losses.push_back(loss);
    }

    std::vector<RoundMessage> submissions;
    submissions.reserve(clients.size());
    for (std::size_t k = 0; k < clients.size(); ++k) {
      RoundMessage m = encrypted
                           ? clients[k].encrypt_update(round, updates[k], entropy)
                           : clients[k].plain_update(round, updates[k]);
      if (transcript) {
        const fs::path path = root / "server" / "inbox" /
                              ("round" + std::to_string(round) + "_client" +
                               std::to_string(k) + ".json");
        write_text(path, round_message_to_json(m));
        result.server_inputs.push_back(path.string());
        m = round_message_from_json(read_text(path));
      }
      submissions.push_back(std::move(m));
    }

    if (encrypted) {
      std::vector<Ciphertext> aggregate = server.aggregate(submissions);
      if (transcript) {
        RoundMessage broadcast;
        broadcast.round = round;
        broadcast.sender = "server";
        broadcast.ciphertexts = aggregate;
        const fs::path path = root / "clients" / "inbox" /
                              ("round" + std::to_string(round) + "_global.json");
        write_text(path, round_message_to_json(broadcast));
        aggregate = round_message_from_json(read_text(path)).ciphertexts;
      }
      // Every client decrypts the same ciphertexts with the same key; use
      // each client's own decryption and require agreement.
      u_global = clients.front().decrypt_global(aggregate);
      for (std::size_t k = 1; k < clients.size(); ++k) {
        if (clients[k].decrypt_global(aggregate) != u_global) {
          raise(Errc::invalid_ciphertext, "clients decoded differing globals");
        }
      }
    } else {
      u_global = server.average(submissions);
    }

    record.u_global_linf = linf_norm(u_global);
    result.history.push_back(std::move(record));

    if (config.early_stop_linf > 0.0 &&
        result.history.back().u_global_linf < config.early_stop_linf) {
      break;
    }
  }

  for (auto& client : clients) client.apply_global(u_global);
  for (std::size_t k = 1; k < clients.size(); ++k) {
    if (clients[k].w_old().values != clients.front().w_old().values) {
      raise(Errc::bad_value, "clients desynchronized after final round");
    }
  }
  result.global_model = clients.front().model();
  result.final_params = clients.front().w_old();
  return result;
}

std::string history_to_json(const std::vector<RoundRecord>& history) {
  json arr = json::array();
  for (const auto& r : history) {
    arr.push_back({{"round", r.round},
                   {"client_losses", r.client_losses},
                   {"u_global_linf", r.u_global_linf}});
  }
  return arr.dump(2);
}

}  // namespace prov
