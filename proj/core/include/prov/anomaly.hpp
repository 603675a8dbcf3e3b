#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prov/graph.hpp"
#include "prov/matrix.hpp"

namespace prov {

// Node scoring by reconstruction error, validation-driven thresholding,
// detection metrics, and the analyst-facing outputs: bounded traces around
// flagged nodes, flagged-subgraph clusters, and DOT rendering.

enum class ErrorNorm { l2, l1 };

// Per-node norm of the reconstruction residual.
std::vector<double> node_errors(const Matrix& pred, const Matrix& target,
                                ErrorNorm norm = ErrorNorm::l2);

struct ThresholdSpec {
  enum class Kind { quantile, f1_sweep };
  Kind kind = Kind::quantile;
  double q = 0.95;  // quantile strategies only

  static ThresholdSpec quantile(double q) { return {Kind::quantile, q}; }
  static ThresholdSpec f1_sweep() { return {Kind::f1_sweep, 0.0}; }
};

struct Threshold {
  double value = 0.0;
  std::string strategy;       // "quantile:<q>" or "f1"
  std::size_t n_validation = 0;
  double val_min = 0.0;
  double val_max = 0.0;
};

// Quantile: linear-interpolation empirical quantile of validation errors.
// F1 sweep: the midpoint between consecutive distinct sorted validation
// errors maximizing F1, ties broken toward the larger threshold; requires
// labels with at least one positive and one negative.
Threshold select_threshold(const std::vector<double>& val_errors,
                           const std::vector<std::uint8_t>* val_labels,
                           ThresholdSpec spec);

struct Metrics {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  // Ratios are absent (not zero) when their denominator is zero.
  std::optional<double> accuracy, precision, recall, f1, fpr;
};

struct DetectionResult {
  std::vector<std::uint8_t> flags;  // flags[v] == 1 iff score(v) > threshold
  std::optional<Metrics> metrics;
};

DetectionResult flag_nodes(const std::vector<double>& errors,
                           const Threshold& threshold);

Metrics compute_metrics(const std::vector<std::uint8_t>& flags,
                        const std::vector<std::uint8_t>& labels);

struct AttackTrace {
  std::vector<std::uint32_t> seeds;     // flagged nodes the trace grew from
  std::vector<std::uint32_t> nodes;     // sorted
  std::vector<std::size_t> edge_ids;    // indices into graph.edges, sorted
  std::size_t depth_limit = 0;
  std::vector<std::string> phase_notes;  // optional, aligned with edge_ids
};

// Depth-bounded DFS from each flagged node following edges in both
// directions; traces with intersecting node sets are merged.
std::vector<AttackTrace> trace_attack(const ProvGraph& g,
                                      const std::vector<std::uint32_t>& flagged,
                                      std::size_t depth_limit);

// Connected components of the subgraph induced by flagged nodes.
std::vector<std::vector<std::uint32_t>> cluster_anomalies(
    const ProvGraph& g, const std::vector<std::uint8_t>& flags);

// DOT digraph: flagged nodes red, benign blue, traces as clusters.
std::string export_dot(const ProvGraph& g, const std::vector<std::uint8_t>& flags,
                       const std::vector<AttackTrace>& traces = {});

std::string metrics_to_json(const Metrics& m);
std::string report_to_json(const ProvGraph& g, const Threshold& threshold,
                           const DetectionResult& result);
std::string traces_to_json(const ProvGraph& g, const std::vector<AttackTrace>& traces);

}  // namespace prov
