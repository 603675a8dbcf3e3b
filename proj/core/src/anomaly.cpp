#include "prov/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prov/errors.hpp"

namespace prov {

using nlohmann::json;

std::vector<double> node_errors(const Matrix& pred, const Matrix& target,
                                ErrorNorm norm) {
  if (!pred.same_shape(target)) {
    raise(Errc::shape_mismatch, "node_errors: shapes differ");
  }
  std::vector<double> scores(pred.rows(), 0.0);
  for (std::size_t v = 0; v < pred.rows(); ++v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < pred.cols(); ++j) {
      const double r = pred(v, j) - target(v, j);
      acc += (norm == ErrorNorm::l2) ? r * r : std::fabs(r);
    }
    scores[v] = (norm == ErrorNorm::l2) ? std::sqrt(acc) : acc;
  }
  return scores;
}

namespace {

double interpolated_quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double f1_at(const std::vector<double>& errors,
             const std::vector<std::uint8_t>& labels, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const bool flagged = errors[i] > threshold;
    if (flagged && labels[i]) ++tp;
    if (flagged && !labels[i]) ++fp;
    if (!flagged && labels[i]) ++fn;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

Threshold select_threshold(const std::vector<double>& val_errors,
                           const std::vector<std::uint8_t>* val_labels,
                           ThresholdSpec spec) {
  if (val_errors.empty()) {
    raise(Errc::empty_input, "select_threshold: no validation errors");
  }
  Threshold t;
  t.n_validation = val_errors.size();
  t.val_min = *std::min_element(val_errors.begin(), val_errors.end());
  t.val_max = *std::max_element(val_errors.begin(), val_errors.end());

  if (spec.kind == ThresholdSpec::Kind::quantile) {
    if (spec.q < 0.0 || spec.q > 1.0) {
      raise(Errc::bad_value, "quantile must be in [0, 1]");
    }
    t.value = interpolated_quantile(val_errors, spec.q);
    std::ostringstream name;
    name << "quantile:" << spec.q;
    t.strategy = name.str();
    return t;
  }

  // F1 sweep over midpoints between consecutive distinct sorted errors.
  if (val_labels == nullptr || val_labels->size() != val_errors.size()) {
    raise(Errc::length_mismatch, "f1 sweep needs one label per validation error");
  }
  bool has_pos = false, has_neg = false;
  for (std::uint8_t l : *val_labels) (l ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    raise(Errc::degenerate_labels,
          "f1 sweep needs at least one anomalous and one benign validation node");
  }
  std::vector<double> distinct(val_errors);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  double best_value = distinct.front();
  double best_f1 = -1.0;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double candidate = distinct[i] + 0.5 * (distinct[i + 1] - distinct[i]);
    const double f1 = f1_at(val_errors, *val_labels, candidate);
    if (f1 > best_f1 || (f1 == best_f1 && candidate > best_value)) {
      best_f1 = f1;
      best_value = candidate;
    }
  }
  if (distinct.size() == 1) {
    // Single distinct error value: nothing separates, flag nothing.
    best_value = distinct.front();
  }
  t.value = best_value;
  t.strategy = "f1";
  return t;
}

DetectionResult flag_nodes(const std::vector<double>& errors,
                           const Threshold& threshold) {
  DetectionResult result;
  result.flags.resize(errors.size(), 0);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    result.flags[i] = errors[i] > threshold.value ? 1 : 0;
  }
  return result;
}

Metrics compute_metrics(const std::vector<std::uint8_t>& flags,
                        const std::vector<std::uint8_t>& labels) {
  if (flags.size() != labels.size()) {
    raise(Errc::length_mismatch, "compute_metrics: lengths differ");
  }
  Metrics m;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] && labels[i]) ++m.tp;
    else if (flags[i] && !labels[i]) ++m.fp;
    else if (!flags[i] && labels[i]) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.fpr = ratio(m.fp, m.fp + m.tn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f1 = 2.0 * (*m.precision * *m.recall) / (*m.precision + *m.recall);
  } else if (m.precision && m.recall) {
    m.f1 = 0.0;
  }
  return m;
}

namespace {

// Undirected adjacency lists with the originating edge index kept for
// trace reconstruction.
struct Neighborhood {
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> adj;

  explicit Neighborhood(const ProvGraph& g) : adj(g.node_count()) {
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      adj[g.edges[e].src].emplace_back(g.edges[e].dst, e);
      adj[g.edges[e].dst].emplace_back(g.edges[e].src, e);
    }
  }
};

}  // namespace

std::vector<AttackTrace> trace_attack(const ProvGraph& g,
                                      const std::vector<std::uint32_t>& flagged,
                                      std::size_t depth_limit) {
  Neighborhood nbr(g);
  std::vector<AttackTrace> traces;

  for (std::uint32_t seed : flagged) {
    if (seed >= g.node_count()) {
      raise(Errc::bad_value, "trace_attack: flagged node out of range");
    }
    // Depth-bounded DFS over undirected edges. Nodes may be revisited at a
    // shallower depth so that every node within depth_limit hops is reached.
    std::vector<std::size_t> best_depth(g.node_count(), depth_limit + 1);
    std::set<std::uint32_t> nodes;
    std::set<std::size_t> edges;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{seed, 0}};
    best_depth[seed] = 0;
    nodes.insert(seed);
    while (!stack.empty()) {
      const auto [v, depth] = stack.back();
      stack.pop_back();
      if (depth >= depth_limit) continue;
      for (const auto& [u, e] : nbr.adj[v]) {
        edges.insert(e);
        nodes.insert(u);
        if (depth + 1 < best_depth[u]) {
          best_depth[u] = depth + 1;
          stack.emplace_back(u, depth + 1);
        }
      }
    }

    AttackTrace trace;
    trace.seeds = {seed};
    trace.nodes.assign(nodes.begin(), nodes.end());
    trace.edge_ids.assign(edges.begin(), edges.end());
    trace.depth_limit = depth_limit;

    // Merge with any existing trace sharing a node.
    std::vector<AttackTrace> merged;
    for (auto& existing : traces) {
      const bool overlaps = std::ranges::any_of(existing.nodes, [&](std::uint32_t v) {
        return nodes.contains(v);
      });
      if (overlaps) {
        trace.seeds.insert(trace.seeds.end(), existing.seeds.begin(), existing.seeds.end());
        std::vector<std::uint32_t> n_union;
        std::ranges::set_union(trace.nodes, existing.nodes, std::back_inserter(n_union));
        trace.nodes = std::move(n_union);
        std::vector<std::size_t> e_union;
        std::ranges::set_union(trace.edge_ids, existing.edge_ids, std::back_inserter(e_union));
        trace.edge_ids = std::move(e_union);
      } else {
        merged.push_back(std::move(existing));
      }
    }
    std::sort(trace.seeds.begin(), trace.seeds.end());
    trace.seeds.erase(std::unique(trace.seeds.begin(), trace.seeds.end()),
                      trace.seeds.end());
    merged.push_back(std::move(trace));
    traces = std::move(merged);
  }

  std::ranges::sort(traces, {}, [](const AttackTrace& t) { return t.nodes.front(); });
  return traces;
}

std::vector<std::vector<std::uint32_t>> cluster_anomalies(
    const ProvGraph& g, const std::vector<std::uint8_t>& flags) {
  if (flags.size() != g.node_count()) {
    raise(Errc::length_mismatch, "cluster_anomalies: flag vector length mismatch");
  }
  Neighborhood nbr(g);
  std::vector<std::uint8_t> seen(g.node_count(), 0);
  std::vector<std::vector<std::uint32_t>> clusters;
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    if (!flags[v] || seen[v]) continue;
    std::vector<std::uint32_t> cluster;
    std::vector<std::uint32_t> stack{v};
    seen[v] = 1;
    while (!stack.empty()) {
      const std::uint32_t u = stack.back();
      stack.pop_back();
      cluster.push_back(u);
      for (const auto& entry : nbr.adj[u]) {
        const std::uint32_t w = entry.first;
        if (flags[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    std::sort(cluster.begin(), cluster.end());
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string export_dot(const ProvGraph& g, const std::vector<std::uint8_t>& flags,
                       const std::vector<AttackTrace>& traces) {
  if (!flags.empty() && flags.size() != g.node_count()) {
    raise(Errc::length_mismatch, "export_dot: flag vector length mismatch");
  }
  std::vector<std::string> edge_type_of(g.type_maps.edge_map.size());
  for (const auto& [name, idx] : g.type_maps.edge_map) edge_type_of[idx] = name;

  std::ostringstream out;
  out << "digraph G {\n";
  for (std::uint32_t v = 0; v < g.node_count(); ++v) {
    const bool flagged = !flags.empty() && flags[v];
    out << "  \"" << dot_escape(g.nodes[v].uuid) << "\" [color="
        << (flagged ? "red" : "blue") << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  \"" << dot_escape(g.nodes[e.src].uuid) << "\" -> \""
        << dot_escape(g.nodes[e.dst].uuid) << "\" [label=\""
        << dot_escape(edge_type_of[e.type]) << "\"];\n";
  }
  for (std::size_t t = 0; t < traces.size(); ++t) {
    out << "  subgraph cluster_" << t << " {\n";
    out << "    label=\"trace " << t << "\";\n";
    for (std::uint32_t v : traces[t].nodes) {
      out << "    \"" << dot_escape(g.nodes[v].uuid) << "\";\n";
    }
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

std::string metrics_to_json(const Metrics& m) {
  json doc;
  doc["tp"] = m.tp;
  doc["tn"] = m.tn;
  doc["fp"] = m.fp;
  doc["fn"] = m.fn;
  const auto put = [&doc](const char* key, const std::optional<double>& v) {
    if (v) doc[key] = *v;
    else doc[key] = nullptr;
  };
  put("accuracy", m.accuracy);
  put("precision", m.precision);
  put("recall", m.recall);
  put("f1", m.f1);
  put("fpr", m.fpr);
  return doc.dump(2);
}

std::string report_to_json(const ProvGraph& g, const Threshold& threshold,
                           const DetectionResult& result) {
  json doc;
  doc["threshold"] = threshold.value;
  doc["strategy"] = threshold.strategy;
  json flags = json::array();
  for (std::size_t v = 0; v < result.flags.size(); ++v) {
    if (result.flags[v]) flags.push_back(g.nodes[v].uuid);
  }
  doc["flags"] = std::move(flags);
  if (result.metrics) {
    doc["metrics"] = json::parse(metrics_to_json(*result.metrics));
  } else {
    doc["metrics"] = nullptr;
  }
  return doc.dump(2);
}

std::string traces_to_json(const ProvGraph& g,
                           const std::vector<AttackTrace>& traces) {
  std::vector<std::string> edge_type_of(g.type_maps.edge_map.size());
  for (const auto& [name, idx] : g.type_maps.edge_map) edge_type_of[idx] = name;
  json arr = json::array();
  for (const auto& t : traces) {
    json entry;
    json seeds = json::array();
    for (std::uint32_t v : t.seeds) seeds.push_back(g.nodes[v].uuid);
    json nodes = json::array();
    for (std::uint32_t v : t.nodes) nodes.push_back(g.nodes[v].uuid);
    json edges = json::array();
    for (std::size_t e : t.edge_ids) {
      edges.push_back({{"src", g.nodes[g.edges[e].src].uuid},
                       {"dst", g.nodes[g.edges[e].dst].uuid},
                       {"type", edge_type_of[g.edges[e].type]}});
    }
    entry["seeds"] = std::move(seeds);
    entry["nodes"] = std::move(nodes);
    entry["edges"] = std::move(edges);
    entry["depth_limit"] = t.depth_limit;
    arr.push_back(std::move(entry));
  }
  json doc;
  doc["traces"] = std::move(arr);
  return doc.dump(2);
}

}  // namespace prov
