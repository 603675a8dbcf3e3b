#include "prov/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prov/rng.hpp"

namespace prov {

using nlohmann::json;

std::optional<std::uint32_t> ProvGraph::find(const std::string& uuid) const {
  const auto it = index_of.find(uuid);
  if (it == index_of.end()) return std::nullopt;
  return it->second;
}

const std::string& ProvGraph::node_type_name(std::uint32_t v) const {
  for (const auto& [name, idx] : type_maps.node_map) {
    if (idx == nodes[v].type) return name;
  }
  raise(Errc::bad_value, "node type index out of range");
}

const std::string& ProvGraph::edge_type_name(int type_index) const {
  for (const auto& [name, idx] : type_maps.edge_map) {
    if (idx == type_index) return name;
  }
  raise(Errc::bad_value, "edge type index out of range");
}

TypeMaps derive_type_maps(const std::vector<std::string>& node_type_names,
                          const std::vector<std::string>& edge_type_names) {
  TypeMaps maps;
  // std::map keeps names sorted; indices follow lexicographic order.
  for (const auto& n : node_type_names) maps.node_map.emplace(n, 0);
  for (const auto& e : edge_type_names) maps.edge_map.emplace(e, 0);
  int i = 0;
  for (auto& [name, idx] : maps.node_map) idx = i++;
  maps.n_v = i;
  i = 0;
  for (auto& [name, idx] : maps.edge_map) idx = i++;
  maps.n_e = i;
  return maps;
}

ProvGraph build_graph(const std::vector<ParsedRecord>& records, bool strict) {
  // Pass 1: collect declared entity kinds and the set of edge type names,
  // so the result does not depend on declaration/event ordering.
  std::unordered_map<std::string, std::string> declared_kind;
  std::vector<std::string> edge_type_names;
  for (const auto& r : records) {
    if (r.record_kind == RecordKind::event) {
      edge_type_names.push_back(r.event_type->name);
    } else {
      declared_kind.emplace(r.uuid, record_kind_name(r.record_kind));
    }
  }

  ProvGraph g;
  auto intern_node = [&](const std::string& uuid) -> std::uint32_t {
    if (auto idx = g.find(uuid)) return *idx;
    const auto it = declared_kind.find(uuid);
    if (it == declared_kind.end() && strict) {
      raise(Errc::dangling_reference, "event references undeclared uuid " + uuid);
    }
    const std::uint32_t idx = static_cast<std::uint32_t>(g.nodes.size());
    g.nodes.push_back(GraphNode{uuid, 0});
    g.index_of.emplace(uuid, idx);
    return idx;
  };

  // Pass 2: create nodes (in first-appearance order) and edges.
  std::vector<std::string> node_type_names;
  for (const auto& r : records) {
    if (r.record_kind == RecordKind::event) {
      if (r.subject_uuid) intern_node(*r.subject_uuid);
      if (!r.subject_uuid || !r.object_uuid) continue;  // no edge without both ends
      if (*r.subject_uuid == *r.object_uuid) continue;  // events never self-loop
      const auto src = *g.find(*r.subject_uuid);
      const auto dst = intern_node(*r.object_uuid);
      g.edges.push_back(GraphEdge{src, dst, 0, r.timestamp_ns});
    } else {
      intern_node(r.uuid);
    }
  }

  for (const auto& node : g.nodes) {
    const auto it = declared_kind.find(node.uuid);
    node_type_names.push_back(it != declared_kind.end() ? it->second
                                                        : kUnknownNodeType);
  }

  g.type_maps = derive_type_maps(node_type_names, edge_type_names);
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    g.nodes[v].type = g.type_maps.node_map.at(node_type_names[v]);
  }
  std::size_t e = 0;
  for (const auto& r : records) {
    if (r.record_kind != RecordKind::event || !r.subject_uuid || !r.object_uuid ||
        *r.subject_uuid == *r.object_uuid) {
      continue;
    }
    g.edges[e++].type = g.type_maps.edge_map.at(r.event_type->name);
  }
  return g;
}

Matrix node_features(const ProvGraph& g) {
  const std::size_t n_e = static_cast<std::size_t>(g.type_maps.n_e);
  Matrix f(g.node_count(), 2 * n_e);
  for (const auto& e : g.edges) {
    f(e.dst, static_cast<std::size_t>(e.type)) += 1.0;        // incoming at dst
    f(e.src, static_cast<std::size_t>(e.type) + n_e) += 1.0;  // outgoing at src
  }
  return f;
}

Matrix one_hot_node_types(const ProvGraph& g) {
  Matrix x(g.node_count(), static_cast<std::size_t>(g.type_maps.n_v));
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    x(v, static_cast<std::size_t>(g.nodes[v].type)) = 1.0;
  }
  return x;
}

NormAdj normalized_adjacency(const ProvGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) {
    raise(Errc::empty_input, "normalized_adjacency: graph has no nodes");
  }
  // Symmetrized binary neighbor sets plus self-loops.
  std::vector<std::set<std::uint32_t>> nbr(n);
  for (std::size_t v = 0; v < n; ++v) {
    nbr[v].insert(static_cast<std::uint32_t>(v));
  }
  for (const auto& e : g.edges) {
    if (e.src == e.dst) continue;
    nbr[e.src].insert(e.dst);
    nbr[e.dst].insert(e.src);
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t v = 0; v < n; ++v) {
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(nbr[v].size()));
  }

  NormAdj adj;
  adj.n = n;
  adj.row_ptr.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    adj.row_ptr[v + 1] = adj.row_ptr[v] + nbr[v].size();
  }
  adj.col.reserve(adj.row_ptr[n]);
  adj.val.reserve(adj.row_ptr[n]);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::uint32_t u : nbr[v]) {
      adj.col.push_back(u);
      adj.val.push_back(inv_sqrt_deg[v] * inv_sqrt_deg[u]);
    }
  }
  return adj;
}

Matrix spmm(const NormAdj& adj, const Matrix& x) {
  if (adj.n != x.rows()) {
    raise(Errc::shape_mismatch, "spmm: operator size does not match row count");
  }
  Matrix y(adj.n, x.cols());
  for (std::size_t i = 0; i < adj.n; ++i) {
    double* yi = y.data() + i * y.cols();
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const double a = adj.val[k];
      const double* xr = x.data() + static_cast<std::size_t>(adj.col[k]) * x.cols();
      for (std::size_t j = 0; j < x.cols(); ++j) {
        yi[j] += a * xr[j];
      }
    }
  }
  return y;
}

SplitMasks split_masks(std::size_t n_nodes, std::array<double, 3> ratios,
                       std::uint64_t seed,
                       const std::vector<std::uint8_t>* labels) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::fabs(sum - 1.0) > 1e-9) {
    raise(Errc::bad_value, "split ratios must sum to 1");
  }
  if (labels && labels->size() != n_nodes) {
    raise(Errc::length_mismatch, "label vector length does not match node count");
  }

  const std::size_t n_train = static_cast<std::size_t>(ratios[0] * static_cast<double>(n_nodes));
  const std::size_t n_val = static_cast<std::size_t>(ratios[1] * static_cast<double>(n_nodes));
  const std::size_t n_test = n_nodes - n_train - n_val;

  std::vector<std::uint32_t> benign, anomalous;
  for (std::size_t v = 0; v < n_nodes; ++v) {
    if (labels && (*labels)[v]) {
      anomalous.push_back(static_cast<std::uint32_t>(v));
    } else {
      benign.push_back(static_cast<std::uint32_t>(v));
    }
  }
  if (anomalous.size() > n_val + n_test) {
    raise(Errc::infeasible_split,
          "anomalous nodes exceed val+test capacity");
  }

  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(benign);
  rng.shuffle(anomalous);

  SplitMasks masks;
  masks.train.assign(n_nodes, 0);
  masks.val.assign(n_nodes, 0);
  masks.test.assign(n_nodes, 0);

  // Anomalous nodes alternate val/test (val first); benign nodes fill the
  // remaining capacity in train, then val, then test.
  std::size_t val_used = 0, test_used = 0;
  for (std::size_t i = 0; i < anomalous.size(); ++i) {
    const bool to_val = (i % 2 == 0 && val_used < n_val) || test_used >= n_test;
    if (to_val) {
      masks.val[anomalous[i]] = 1;
      ++val_used;
    } else {
      masks.test[anomalous[i]] = 1;
      ++test_used;
    }
  }
  std::size_t b = 0;
  for (std::size_t i = 0; i < n_train && b < benign.size(); ++i) {
    masks.train[benign[b++]] = 1;
  }
  while (val_used < n_val && b < benign.size()) {
    masks.val[benign[b++]] = 1;
    ++val_used;
  }
  while (b < benign.size()) {
    masks.test[benign[b++]] = 1;
    ++test_used;
  }
  return masks;
}

std::string graph_to_json(const ProvGraph& g) {
  std::vector<std::string> node_type_of(g.type_maps.node_map.size());
  for (const auto& [name, idx] : g.type_maps.node_map) node_type_of[idx] = name;
  std::vector<std::string> edge_type_of(g.type_maps.edge_map.size());
  for (const auto& [name, idx] : g.type_maps.edge_map) edge_type_of[idx] = name;

  json doc;
  json nodes = json::array();
  for (const auto& node : g.nodes) {
    nodes.push_back({{"uuid", node.uuid}, {"type", node_type_of[node.type]}});
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"src", e.src},
                     {"dst", e.dst},
                     {"type", edge_type_of[e.type]},
                     {"ts", e.ts}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  doc["type_maps"] = {{"node_map", g.type_maps.node_map},
                      {"edge_map", g.type_maps.edge_map},
                      {"n_v", g.type_maps.n_v},
                      {"n_e", g.type_maps.n_e}};
  return doc.dump(2);
}

ProvGraph graph_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    raise(Errc::malformed_json, "graph file is not a JSON object");
  }
  ProvGraph g;
  const auto& tm = doc.at("type_maps");
  g.type_maps.node_map = tm.at("node_map").get<std::map<std::string, int>>();
  g.type_maps.edge_map = tm.at("edge_map").get<std::map<std::string, int>>();
  g.type_maps.n_v = tm.at("n_v").get<int>();
  g.type_maps.n_e = tm.at("n_e").get<int>();
  for (const auto& n : doc.at("nodes")) {
    GraphNode node;
    node.uuid = n.at("uuid").get<std::string>();
    node.type = g.type_maps.node_map.at(n.at("type").get<std::string>());
    g.index_of.emplace(node.uuid, static_cast<std::uint32_t>(g.nodes.size()));
    g.nodes.push_back(std::move(node));
  }
  for (const auto& e : doc.at("edges")) {
    GraphEdge edge;
    edge.src = e.at("src").get<std::uint32_t>();
    edge.dst = e.at("dst").get<std::uint32_t>();
    edge.type = g.type_maps.edge_map.at(e.at("type").get<std::string>());
    edge.ts = e.at("ts").get<std::uint64_t>();
    if (edge.src >= g.nodes.size() || edge.dst >= g.nodes.size()) {
      raise(Errc::bad_value, "edge endpoint out of range");
    }
    g.edges.push_back(edge);
  }
  return g;
}

void save_graph(const ProvGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open " + path + " for writing");
  out << graph_to_json(g) << '\n';
}

ProvGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

std::unordered_map<std::string, bool> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  std::unordered_map<std::string, bool> labels;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab + 1 >= line.size()) {
      raise(Errc::bad_value,
            "labels line " + std::to_string(line_number) + ": expected <uuid>\\t<0|1>");
    }
    const std::string uuid = line.substr(0, tab);
    const char flag = line[tab + 1];
    if (flag != '0' && flag != '1') {
      raise(Errc::bad_value,
            "labels line " + std::to_string(line_number) + ": flag must be 0 or 1");
    }
    labels[uuid] = (flag == '1');
  }
  return labels;
}

void save_labels(const std::unordered_map<std::string, bool>& labels,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot open " + path + " for writing");
  // Sorted for reproducible files.
  std::map<std::string, bool> sorted(labels.begin(), labels.end());
  for (const auto& [uuid, anomalous] : sorted) {
    out << uuid << '\t' << (anomalous ? '1' : '0') << '\n';
  }
}

std::vector<std::uint8_t> label_vector(
    const ProvGraph& g, const std::unordered_map<std::string, bool>& labels) {
  std::vector<std::uint8_t> v(g.node_count(), 0);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto it = labels.find(g.nodes[i].uuid);
    if (it != labels.end() && it->second) v[i] = 1;
  }
  return v;
}

}  // namespace prov
