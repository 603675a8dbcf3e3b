#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "prov/records.hpp"

namespace prov {

// Synthetic audit-log corpora: benign background activity over processes,
// files and sockets, plus an injected multi-phase attack chain with
// node-level ground truth. Stands in for real engagement data at desk
// scale; everything it emits parses cleanly through the ingest schema.

struct BenignSpec {
  int n_processes = 120;
  int n_files = 300;
  int n_sockets = 60;
  int n_events = 4000;
  // Probabilities by event type name; must sum to 1. Types absent from
  // this table never occur in benign traffic.
  std::map<std::string, double> event_type_weights;
  std::uint64_t seed = 1;
  int org_id = 0;  // namespaces uuids so per-org corpora stay disjoint

  static BenignSpec defaults();
  void validate() const;
};

struct AttackPhase {
  std::string name;
  std::string event_type;
  std::string actor_role;   // "process"
  std::string target_role;  // "process" | "file" | "socket" | "principal"
};

struct AttackScenario {
  std::vector<AttackPhase> phases;
  int n_attack_nodes = 20;
  // Rare-type edges emitted per chain hop; repetition is what makes the
  // chain's feature signature stand out from benign nodes.
  int events_per_hop = 10;

  static AttackScenario default_five_phase();
  void validate() const;
};

struct CorpusManifest {
  std::vector<AttackPhase> phases;
  std::vector<std::string> attack_uuids;  // in chain order
  std::string anchor_uuid;                // benign entry point
  std::size_t n_benign_records = 0;
  std::size_t n_attack_records = 0;
};

struct LabeledCorpus {
  std::vector<ParsedRecord> records;
  std::unordered_map<std::string, bool> labels;  // uuid -> anomalous
  CorpusManifest manifest;
};

// Deterministic per (spec.seed, spec.org_id). Entity declarations come
// first, then events with strictly increasing timestamps; event endpoints
// follow a preferential-attachment draw so degrees are heavy-tailed.
std::vector<ParsedRecord> gen_benign(const BenignSpec& spec);

// Appends a connected attack chain anchored at one benign process. Raises
// Errc::invalid_scenario unless at least one phase event type has zero
// benign probability mass.
LabeledCorpus inject_attack(std::vector<ParsedRecord> benign,
                            const BenignSpec& benign_spec,
                            const AttackScenario& scenario, std::uint64_t seed);

// K independent corpora with disjoint uuid namespaces; org k uses seed
// derive_seed(seed, "org:k"). Without a scenario the corpora are benign.
std::vector<LabeledCorpus> gen_org_partition(
    const BenignSpec& base, const std::optional<AttackScenario>& scenario,
    int k_orgs, std::uint64_t seed);

void save_corpus(const std::vector<ParsedRecord>& records, const std::string& path);
std::string manifest_to_json(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

// Generator spec files: {"benign": {...}, "attack": {...}|absent, "seed": n}.
struct SynthSpec {
  BenignSpec benign;
  std::optional<AttackScenario> attack;
  std::uint64_t seed = 1;
};

SynthSpec synth_spec_from_json(const std::string& text);
std::string synth_spec_to_json(const SynthSpec& spec);
LabeledCorpus generate(const SynthSpec& spec);

}  // namespace prov
