#include "prov/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "prov/rng.hpp"

namespace prov {

using nlohmann::json;

BenignSpec BenignSpec::defaults() {
  BenignSpec spec;
  spec.event_type_weights = {
      {"EVENT_READ", 0.30},   {"EVENT_WRITE", 0.25},  {"EVENT_EXECUTE", 0.12},
      {"EVENT_FORK", 0.10},   {"EVENT_CONNECT", 0.10}, {"EVENT_SENDTO", 0.08},
      {"EVENT_RECVFROM", 0.05},
  };
  return spec;
}

void BenignSpec::validate() const {
  if (n_processes < 1 || n_files < 1 || n_sockets < 1) {
    raise(Errc::bad_value, "entity counts must be positive");
  }
  if (n_events < 0) raise(Errc::bad_value, "n_events must be non-negative");
  if (n_events > 0) {
    double sum = 0.0;
    for (const auto& [name, w] : event_type_weights) {
      if (w < 0.0) raise(Errc::bad_value, "weights must be non-negative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      raise(Errc::bad_value, "event type weights must sum to 1");
    }
  }
}

AttackScenario AttackScenario::default_five_phase() {
  AttackScenario s;
  s.phases = {
      {"initial-compromise", "EVENT_READ", "process", "file"},
      {"establish-foothold", "EVENT_MODIFY_PROCESS", "process", "process"},
      {"escalate-privileges", "EVENT_CHANGE_PRINCIPAL", "process", "principal"},
      {"internal-reconnaissance", "EVENT_READ", "process", "file"},
      {"maintain-presence", "EVENT_EXECUTE", "process", "file"},
  };
  return s;
}

void AttackScenario::validate() const {
  if (phases.empty()) raise(Errc::invalid_scenario, "scenario has no phases");
  if (n_attack_nodes < 2) {
    raise(Errc::invalid_scenario, "scenario needs at least two attack nodes");
  }
  if (events_per_hop < 1) {
    raise(Errc::invalid_scenario, "events_per_hop must be >= 1");
  }
  for (const auto& p : phases) {
    if (p.event_type.empty()) {
      raise(Errc::invalid_scenario, "phase " + p.name + " has no event type");
    }
  }
}

namespace {

std::string make_uuid(Rng& rng, int org_id, std::uint64_t counter) {
  // First group namespaces the organization; the trailing group is a
  // counter so uuids are unique by construction.
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(org_id),
                static_cast<unsigned>(rng.next_u64() & 0xffff),
                static_cast<unsigned>(rng.next_u64() & 0xffff),
                static_cast<unsigned>(rng.next_u64() & 0xffff),
                static_cast<unsigned long long>(counter & 0xffffffffffffULL));
  return buf;
}

ParsedRecord entity_record(RecordKind kind, std::string uuid) {
  ParsedRecord r;
  r.record_kind = kind;
  r.uuid = std::move(uuid);
  r.timestamp_ns = 0;
  return r;
}

ParsedRecord event_record(std::string uuid, const std::string& type,
                          std::string subject, std::string object,
                          std::uint64_t ts) {
  ParsedRecord r;
  r.record_kind = RecordKind::event;
  r.uuid = std::move(uuid);
  r.event_type = EventType::from_name(type);
  r.subject_uuid = std::move(subject);
  r.object_uuid = std::move(object);
  r.timestamp_ns = ts;
  return r;
}

// Preferential-attachment pool: entities re-enter the pool every time they
// participate, so popular endpoints keep getting picked.
class AttachmentPool {
 public:
  explicit AttachmentPool(std::size_t n) {
    pool_.reserve(n * 4);
    for (std::size_t i = 0; i < n; ++i) pool_.push_back(i);
  }

  std::size_t pick(Rng& rng) {
    const std::size_t i = pool_[static_cast<std::size_t>(rng.below(pool_.size()))];
    pool_.push_back(i);
    return i;
  }

 private:
  std::vector<std::size_t> pool_;
};

enum class TargetRole { process, file, socket, principal };

TargetRole role_for_event(const std::string& type) {
  const EventType et = EventType::from_name(type);
  switch (et.kind) {
    case EventKind::read:
    case EventKind::write:
    case EventKind::execute:
      return TargetRole::file;
    case EventKind::fork:
    case EventKind::modify_process:
      return TargetRole::process;
    case EventKind::connect:
    case EventKind::sendto:
    case EventKind::recvfrom:
      return TargetRole::socket;
    case EventKind::change_principal:
      return TargetRole::principal;
    case EventKind::other:
      return TargetRole::file;
  }
  return TargetRole::file;
}

TargetRole role_from_name(const std::string& name) {
  if (name == "process") return TargetRole::process;
  if (name == "file") return TargetRole::file;
  if (name == "socket") return TargetRole::socket;
  if (name == "principal") return TargetRole::principal;
  raise(Errc::invalid_scenario, "unknown role: " + name);
}

RecordKind kind_for_role(TargetRole role) {
  switch (role) {
    case TargetRole::process: return RecordKind::subject;
    case TargetRole::file: return RecordKind::file_object;
    case TargetRole::socket: return RecordKind::netflow_object;
    case TargetRole::principal: return RecordKind::principal;
  }
  return RecordKind::file_object;
}

constexpr std::uint64_t kEventSpacingNs = 1000;

}  // namespace

std::vector<ParsedRecord> gen_benign(const BenignSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "benign"));
  std::uint64_t counter = 0;

  std::vector<std::string> processes, files, sockets, principals;
  std::vector<ParsedRecord> records;
  const bool wants_principals =
      spec.event_type_weights.contains("EVENT_CHANGE_PRINCIPAL") &&
      spec.event_type_weights.at("EVENT_CHANGE_PRINCIPAL") > 0.0;

  for (int i = 0; i < spec.n_processes; ++i) {
    processes.push_back(make_uuid(rng, spec.org_id, counter++));
    records.push_back(entity_record(RecordKind::subject, processes.back()));
  }
  for (int i = 0; i < spec.n_files; ++i) {
    files.push_back(make_uuid(rng, spec.org_id, counter++));
    records.push_back(entity_record(RecordKind::file_object, files.back()));
  }
  for (int i = 0; i < spec.n_sockets; ++i) {
    sockets.push_back(make_uuid(rng, spec.org_id, counter++));
    records.push_back(entity_record(RecordKind::netflow_object, sockets.back()));
  }
  if (wants_principals) {
    const int n = std::max(1, spec.n_processes / 20);
    for (int i = 0; i < n; ++i) {
      principals.push_back(make_uuid(rng, spec.org_id, counter++));
      records.push_back(entity_record(RecordKind::principal, principals.back()));
    }
  }

  if (spec.n_events == 0) return records;

  std::vector<std::string> type_names;
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& [name, w] : spec.event_type_weights) {
    if (w <= 0.0) continue;
    type_names.push_back(name);
    weights.push_back(w);
    total += w;
  }
  if (type_names.empty()) {
    raise(Errc::bad_value, "no event type has positive weight");
  }

  AttachmentPool proc_pool(processes.size());
  AttachmentPool file_pool(files.size());
  AttachmentPool sock_pool(sockets.size());
  AttachmentPool principal_pool(principals.empty() ? 1 : principals.size());

  for (int i = 0; i < spec.n_events; ++i) {
    const std::string& type = type_names[rng.weighted_pick(weights, total)];
    const std::string& subject = processes[proc_pool.pick(rng)];
    std::string object;
    switch (role_for_event(type)) {
      case TargetRole::process:
        object = processes[proc_pool.pick(rng)];
        break;
      case TargetRole::file:
        object = files[file_pool.pick(rng)];
        break;
      case TargetRole::socket:
        object = sockets[sock_pool.pick(rng)];
        break;
      case TargetRole::principal:
        object = principals.empty() ? files[file_pool.pick(rng)]
                                    : principals[principal_pool.pick(rng)];
        break;
    }
    const std::uint64_t ts = static_cast<std::uint64_t>(i + 1) * kEventSpacingNs;
    records.push_back(event_record(make_uuid(rng, spec.org_id, counter++), type,
                                   subject, std::move(object), ts));
  }
  return records;
}

LabeledCorpus inject_attack(std::vector<ParsedRecord> benign,
                            const BenignSpec& benign_spec,
                            const AttackScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  if (benign.empty()) {
    raise(Errc::invalid_scenario, "benign corpus is empty");
  }

  // Detectability constraint: some phase type must be impossible in the
  // benign distribution.
  std::string rare_type;
  for (const auto& phase : scenario.phases) {
    const auto it = benign_spec.event_type_weights.find(phase.event_type);
    if (it == benign_spec.event_type_weights.end() || it->second == 0.0) {
      rare_type = phase.event_type;
      break;
    }
  }
  if (rare_type.empty()) {
    raise(Errc::invalid_scenario,
          "every phase event type has benign probability mass");
  }

  LabeledCorpus corpus;
  corpus.manifest.phases = scenario.phases;
  corpus.manifest.n_benign_records = benign.size();

  // Ground truth: every declared benign entity is labeled benign.
  std::vector<std::string> benign_processes;
  std::uint64_t max_ts = 0;
  for (const auto& r : benign) {
    if (r.record_kind != RecordKind::event) {
      corpus.labels.emplace(r.uuid, false);
      if (r.record_kind == RecordKind::subject) benign_processes.push_back(r.uuid);
    }
    max_ts = std::max(max_ts, r.timestamp_ns);
  }
  if (benign_processes.empty()) {
    raise(Errc::invalid_scenario, "benign corpus declares no processes");
  }

  // Class imbalance cap: the chain may not exceed a tenth of the corpus.
  if (static_cast<std::size_t>(scenario.n_attack_nodes) * 10 >
      corpus.labels.size() + static_cast<std::size_t>(scenario.n_attack_nodes)) {
    raise(Errc::invalid_scenario,
          "attack chain would exceed 10% of the corpus entities");
  }

  Rng rng(derive_seed(seed, "attack"));
  std::uint64_t counter = 0x100000000ULL;  // disjoint from gen_benign counters
  const std::string& anchor =
      benign_processes[static_cast<std::size_t>(rng.below(benign_processes.size()))];
  corpus.manifest.anchor_uuid = anchor;

  // Chain nodes: the entry implant is a process; each later node's kind
  // follows the target role of the phase edge leading into it.
  std::vector<ParsedRecord> injected;
  std::vector<std::string> chain;
  chain.push_back(make_uuid(rng, benign_spec.org_id, counter++));
  injected.push_back(entity_record(RecordKind::subject, chain.front()));
  for (int i = 1; i < scenario.n_attack_nodes; ++i) {
    const AttackPhase& phase = scenario.phases[(i - 1) % scenario.phases.size()];
    chain.push_back(make_uuid(rng, benign_spec.org_id, counter++));
    injected.push_back(entity_record(
        kind_for_role(role_from_name(phase.target_role)), chain.back()));
  }

  // Attack events sit inside the benign timestamp range.
  std::uint64_t ts = std::max<std::uint64_t>(1, max_ts / 3);
  auto next_ts = [&ts]() { return ts += kEventSpacingNs / 4 + 1; };

  // Anchor edge uses a benign-weighted type so the entry point itself
  // keeps a benign-looking profile.
  injected.push_back(event_record(make_uuid(rng, benign_spec.org_id, counter++),
                                  "EVENT_EXECUTE", anchor, chain.front(),
                                  next_ts()));

  // Phase edges along the chain, repeated per hop.
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const AttackPhase& phase = scenario.phases[i % scenario.phases.size()];
    for (int rep = 0; rep < scenario.events_per_hop; ++rep) {
      injected.push_back(event_record(make_uuid(rng, benign_spec.org_id, counter++),
                                      phase.event_type, chain[i], chain[i + 1],
                                      next_ts()));
    }
  }

  // Every chain node keeps a channel open to the implant: repeated
  // rare-type events that give each attack node a signature no benign
  // node can exhibit.
  for (std::size_t i = 1; i < chain.size(); ++i) {
    for (int rep = 0; rep < scenario.events_per_hop; ++rep) {
      injected.push_back(event_record(make_uuid(rng, benign_spec.org_id, counter++),
                                      rare_type, chain[i], chain.front(),
                                      next_ts()));
    }
  }

  for (const auto& uuid : chain) corpus.labels[uuid] = true;
  corpus.manifest.attack_uuids = chain;
  corpus.manifest.n_attack_records = injected.size();

  corpus.records = std::move(benign);
  corpus.records.insert(corpus.records.end(),
                        std::make_move_iterator(injected.begin()),
                        std::make_move_iterator(injected.end()));
  return corpus;
}

std::vector<LabeledCorpus> gen_org_partition(
    const BenignSpec& base, const std::optional<AttackScenario>& scenario,
    int k_orgs, std::uint64_t seed) {
  if (k_orgs < 1) raise(Errc::bad_value, "k_orgs must be >= 1");
  std::vector<LabeledCorpus> out;
  out.reserve(static_cast<std::size_t>(k_orgs));
  for (int k = 0; k < k_orgs; ++k) {
    BenignSpec spec = base;
    std::uint64_t attack_seed = seed;
    if (k_orgs > 1) {
      spec.org_id = base.org_id + k;
      spec.seed = derive_seed(seed, "org:" + std::to_string(k));
      attack_seed = derive_seed(seed, "org-attack:" + std::to_string(k));
    }
    std::vector<ParsedRecord> benign = gen_benign(spec);
    if (scenario) {
      out.push_back(inject_attack(std::move(benign), spec, *scenario, attack_seed));
    } else {
      LabeledCorpus corpus;
      for (const auto& r : benign) {
        if (r.record_kind != RecordKind::event) corpus.labels.emplace(r.uuid, false);
      }
      corpus.manifest.n_benign_records = benign.size();
      corpus.records = std::move(benign);
      out.push_back(std::move(corpus));
    }
  }
  return out;
}

void save_corpus(const std::vector<ParsedRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open " + path + " for writing");
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json phases = json::array();
  for (const auto& p : manifest.phases) {
    phases.push_back({{"name", p.name},
                      {"event_type", p.event_type},
                      {"actor", p.actor_role},
                      {"target", p.target_role}});
  }
  json doc;
  doc["phases"] = std::move(phases);
  doc["attack_uuids"] = manifest.attack_uuids;
  doc["anchor_uuid"] = manifest.anchor_uuid;
  doc["n_benign_records"] = manifest.n_benign_records;
  doc["n_attack_records"] = manifest.n_attack_records;
  return doc.dump(2);
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open " + path + " for writing");
  out << manifest_to_json(manifest) << '\n';
}

namespace {

BenignSpec benign_from_json(const json& j) {
  BenignSpec spec = BenignSpec::defaults();
  spec.n_processes = j.value("n_processes", spec.n_processes);
  spec.n_files = j.value("n_files", spec.n_files);
  spec.n_sockets = j.value("n_sockets", spec.n_sockets);
  spec.n_events = j.value("n_events", spec.n_events);
  spec.seed = j.value("seed", spec.seed);
  spec.org_id = j.value("org_id", spec.org_id);
  if (j.contains("event_type_weights")) {
    spec.event_type_weights =
        j.at("event_type_weights").get<std::map<std::string, double>>();
  }
  return spec;
}

AttackScenario attack_from_json(const json& j) {
  AttackScenario s = AttackScenario::default_five_phase();
  s.n_attack_nodes = j.value("n_attack_nodes", s.n_attack_nodes);
  s.events_per_hop = j.value("events_per_hop", s.events_per_hop);
  if (j.contains("phases")) {
    s.phases.clear();
    for (const auto& p : j.at("phases")) {
      s.phases.push_back(AttackPhase{p.at("name").get<std::string>(),
                                     p.at("event_type").get<std::string>(),
                                     p.value("actor", std::string("process")),
                                     p.value("target", std::string("file"))});
    }
  }
  return s;
}

}  // namespace

SynthSpec synth_spec_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "synth spec is not a JSON object");
  }
  SynthSpec spec;
  spec.seed = doc.value("seed", spec.seed);
  if (doc.contains("benign")) {
    spec.benign = benign_from_json(doc.at("benign"));
    if (!doc.at("benign").contains("seed")) spec.benign.seed = spec.seed;
  } else {
    spec.benign = BenignSpec::defaults();
    spec.benign.seed = spec.seed;
  }
  if (doc.contains("attack") && !doc.at("attack").is_null()) {
    spec.attack = attack_from_json(doc.at("attack"));
  }
  return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json doc;
  doc["seed"] = spec.seed;
  doc["benign"] = {{"n_processes", spec.benign.n_processes},
                   {"n_files", spec.benign.n_files},
                   {"n_sockets", spec.benign.n_sockets},
                   {"n_events", spec.benign.n_events},
                   {"event_type_weights", spec.benign.event_type_weights},
                   {"seed", spec.benign.seed},
                   {"org_id", spec.benign.org_id}};
  if (spec.attack) {
    json phases = json::array();
    for (const auto& p : spec.attack->phases) {
      phases.push_back({{"name", p.name},
                        {"event_type", p.event_type},
                        {"actor", p.actor_role},
                        {"target", p.target_role}});
    }
    doc["attack"] = {{"phases", std::move(phases)},
                     {"n_attack_nodes", spec.attack->n_attack_nodes},
                     {"events_per_hop", spec.attack->events_per_hop}};
  }
  return doc.dump(2);
}

LabeledCorpus generate(const SynthSpec& spec) {
  std::vector<ParsedRecord> benign = gen_benign(spec.benign);
  if (spec.attack) {
    return inject_attack(std::move(benign), spec.benign, *spec.attack, spec.seed);
  }
  LabeledCorpus corpus;
  for (const auto& r : benign) {
    if (r.record_kind != RecordKind::event) corpus.labels.emplace(r.uuid, false);
  }
  corpus.manifest.n_benign_records = benign.size();
  corpus.records = std::move(benign);
  return corpus;
}

}  // namespace prov
