#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prov/gcn.hpp"
#include "prov/graph.hpp"
#include "prov/paillier.hpp"

namespace prov {

// Simulated federation: a key authority, K organization clients that train
// the graph model on their own data, and an aggregation server that only
// ever sees the public key and ciphertexts. Clients pre-scale updates by
// 1/K before encrypting so the server's homomorphic product decrypts to
// the federated average. A plaintext mode runs the identical loop without
// encryption and serves as the correctness oracle.

enum class FedMode { encrypted, plaintext };

struct FederationConfig {
  int k_orgs = 3;
  int rounds = 3;
  int local_epochs = 100;
  int key_bits = 1024;
  int frac_bits = 40;
  FedMode mode = FedMode::encrypted;
  GcnConfig gcn;  // layer_dims[0]/layer_dims[3] may be 0 = derive from data
  double early_stop_linf = 0.0;  // 0 disables early stopping
  std::uint64_t entropy_seed = 0;  // 0 = OS entropy (test runs pass a seed)
  std::optional<std::string> transcript_dir;  // file transport, when set

  void validate() const;
};

struct OrgDataset {
  ProvGraph graph;
  Matrix x;       // one-hot node types
  Matrix target;  // edge-type count features
  SplitMasks masks;
};

OrgDataset make_org_dataset(ProvGraph graph,
                            const std::vector<std::uint8_t>* labels,
                            std::uint64_t split_seed);

struct KeyMaterial {
  PublicKey pub;
  PrivateKey priv;
};

// One federation run uses one keypair: clients receive both halves, the
// server only the public key.
KeyMaterial kga_setup(int key_bits, Entropy& entropy);

struct RoundMessage {
  int round = 0;
  std::string sender;
  std::vector<Ciphertext> ciphertexts;  // encrypted mode
  std::vector<double> values;           // plaintext mode
  std::size_t payload_size() const {
    return ciphertexts.empty() ? values.size() : ciphertexts.size();
  }
};

std::string round_message_to_json(const RoundMessage& m);
RoundMessage round_message_from_json(const std::string& text);

// Holds the public key only; there is no code path through which this
// type can decrypt. Completed-round bookkeeping advances only when an
// aggregation succeeds.
class AggregationServer {
 public:
  AggregationServer(PublicKey pk, int k_expected);

  // Componentwise homomorphic sum. Raises Errc::incomplete_round unless
  // exactly k_expected submissions arrive.
  std::vector<Ciphertext> aggregate(const std::vector<RoundMessage>& submissions);
  // Plaintext-mode federated mean over k_expected submissions.
  std::vector<double> average(const std::vector<RoundMessage>& submissions);

  const PublicKey& public_key() const { return pk_; }
  int completed_rounds() const { return completed_rounds_; }

 private:
  void check_submissions(const std::vector<RoundMessage>& submissions,
                         bool encrypted) const;

  PublicKey pk_;
  int k_expected_;
  int completed_rounds_ = 0;
};

class OrgClient {
 public:
  OrgClient(int id, KeyMaterial keys, const OrgDataset* data, GcnModel model,
            int frac_bits, int k_orgs);

  // W_old <- W_old + u_global (elementwise), then into the model.
  void apply_global(const std::vector<double>& u_global);

  // Local training for `epochs` epochs; returns the parameter delta and
  // restores the model to W_old afterwards.
  std::vector<double> local_round(int round, int epochs, double learning_rate,
                                  double* final_loss = nullptr);

  // FedAvg pre-scaling by 1/K, fixed-point encode, encrypt.
  RoundMessage encrypt_update(int round, const std::vector<double>& u,
                              Entropy& entropy) const;
  RoundMessage plain_update(int round, const std::vector<double>& u) const;

  std::vector<double> decrypt_global(const std::vector<Ciphertext>& aggregate) const;

  const FlatParams& w_old() const { return w_old_; }
  const GcnModel& model() const { return model_; }
  int id() const { return id_; }

 private:
  int id_;
  KeyMaterial keys_;
  FixedPointCodec codec_;
  int k_orgs_;
  const OrgDataset* data_;
  GcnModel model_;
  FlatParams w_old_;
};

struct RoundRecord {
  int round = 0;
  std::vector<double> client_losses;
  double u_global_linf = 0.0;
};

struct FedRunResult {
  GcnModel global_model;
  FlatParams final_params;
  std::vector<RoundRecord> history;
  // Artifacts the server consumed; populated in transcript mode so the
  // key-confinement property can be audited from the filesystem.
  std::vector<std::string> server_inputs;
};

FedRunResult run_federation(const FederationConfig& config,
                            const std::vector<OrgDataset>& datasets);

std::string history_to_json(const std::vector<RoundRecord>& history);

}  // namespace prov
