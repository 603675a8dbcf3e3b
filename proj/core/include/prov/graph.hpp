#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "prov/matrix.hpp"
#include "prov/records.hpp"

namespace prov {

// Typed directed multigraph of system entities (processes, files, sockets)
// connected by event edges, plus the derived numeric views the training
// engine consumes: per-node edge-type count features and the symmetric
// degree-normalized adjacency operator.

struct TypeMaps {
  // Ordered maps so that iteration (and therefore serialization) is
  // deterministic; indices are assigned in lexicographic name order.
  std::map<std::string, int> node_map;
  std::map<std::string, int> edge_map;
  int n_v = 0;
  int n_e = 0;

  friend bool operator==(const TypeMaps&, const TypeMaps&) = default;
};

struct GraphNode {
  std::string uuid;
  int type = 0;  // index into type_maps.node_map

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  int type = 0;  // index into type_maps.edge_map
  std::uint64_t ts = 0;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct ProvGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  TypeMaps type_maps;
  std::unordered_map<std::string, std::uint32_t> index_of;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
  std::optional<std::uint32_t> find(const std::string& uuid) const;
  const std::string& node_type_name(std::uint32_t v) const;
  const std::string& edge_type_name(int type_index) const;
};

// Node type name used for uuids that appear only as event endpoints and
// were never declared by an entity record (non-strict mode).
inline constexpr const char* kUnknownNodeType = "Unknown";

// Builds the graph from parsed records. Every Event with both subject and
// object yields one directed edge subject -> object typed by the event
// name; entity records declare node types. In strict mode an event that
// references an undeclared uuid raises Errc::dangling_reference.
ProvGraph build_graph(const std::vector<ParsedRecord>& records, bool strict = false);

TypeMaps derive_type_maps(const std::vector<std::string>& node_type_names,
                          const std::vector<std::string>& edge_type_names);

// |V| x 2*N_e count matrix: column i is the number of incoming edges of
// type i at the node, column i + N_e the number of outgoing ones.
Matrix node_features(const ProvGraph& g);

// |V| x N_v one-hot encoding of node types; the training input.
Matrix one_hot_node_types(const ProvGraph& g);

// Sparse symmetric operator holding the degree-normalized adjacency with
// self-loops: entries 1/sqrt(d~(u) d~(v)) over the symmetrized binary
// edge set plus the identity.
struct NormAdj {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;  // size n+1
  std::vector<std::uint32_t> col;    // sorted within each row
  std::vector<double> val;
};

NormAdj normalized_adjacency(const ProvGraph& g);

// y = adj * x
Matrix spmm(const NormAdj& adj, const Matrix& x);

struct SplitMasks {
  std::vector<std::uint8_t> train, val, test;

  friend bool operator==(const SplitMasks&, const SplitMasks&) = default;
};

// Deterministic node-level split. When labels are supplied, labeled
// anomalous nodes are assigned only to val/test, alternating between them;
// the train mask stays all-benign. Raises Errc::infeasible_split if the
// anomalous nodes cannot fit in val+test.
SplitMasks split_masks(std::size_t n_nodes, std::array<double, 3> ratios,
                       std::uint64_t seed,
                       const std::vector<std::uint8_t>* labels = nullptr);

std::string graph_to_json(const ProvGraph& g);
ProvGraph graph_from_json(const std::string& text);
void save_graph(const ProvGraph& g, const std::string& path);
ProvGraph load_graph(const std::string& path);

// Label files: one "<uuid>\t<0|1>" per line.
std::unordered_map<std::string, bool> load_labels(const std::string& path);
void save_labels(const std::unordered_map<std::string, bool>& labels,
                 const std::string& path);

// Per-node label vector; uuids absent from the map default to benign.
std::vector<std::uint8_t> label_vector(
    const ProvGraph& g, const std::unordered_map<std::string, bool>& labels);

}  // namespace prov
