#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "prov/anomaly.hpp"
#include "prov/rng.hpp"

using namespace prov;

namespace {

ParsedRecord entity(const char* kind, std::string uuid) {
  ParsedRecord r;
  r.record_kind = *record_kind_from(kind);
  r.uuid = std::move(uuid);
  return r;
}

ParsedRecord event(std::string uuid, const char* type, std::string subj,
                   std::string obj) {
  ParsedRecord r;
  r.record_kind = RecordKind::event;
  r.uuid = std::move(uuid);
  r.event_type = EventType::from_name(type);
  r.subject_uuid = std::move(subj);
  r.object_uuid = std::move(obj);
  return r;
}

std::string uuid_of(int i) {
  char buf[37];
  std::snprintf(buf, sizeof(buf), "00000000-0000-0000-0000-%012x", i);
  return buf;
}

// Path graph 0 -> 1 -> 2 -> ... -> n-1.
ProvGraph chain_graph(int n) {
  std::vector<ParsedRecord> records;
  for (int i = 0; i < n; ++i) records.push_back(entity("Subject", uuid_of(i)));
  for (int i = 0; i + 1 < n; ++i) {
    records.push_back(
        event(uuid_of(1000 + i), "EVENT_READ", uuid_of(i), uuid_of(i + 1)));
  }
  return build_graph(records);
}

}  // namespace

TEST_CASE("node errors: identical matrices give zero scores") {
  Matrix a(3, 2, 1.5);
  const auto scores = node_errors(a, a);
  for (double s : scores) CHECK(s == 0.0);
}

TEST_CASE("node errors: euclidean norm of the residual") {
  Matrix pred(1, 2), target(1, 2);
  pred(0, 0) = 3.0;
  pred(0, 1) = 4.0;
  CHECK(node_errors(pred, target)[0] == doctest::Approx(5.0));
  CHECK(node_errors(pred, target, ErrorNorm::l1)[0] == doctest::Approx(7.0));
}

TEST_CASE("node errors are invariant under column permutation") {
  Rng rng(3);
  Matrix pred(4, 5), target(4, 5);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.data()[i] = rng.uniform(-2, 2);
    target.data()[i] = rng.uniform(-2, 2);
  }
  Matrix pred_p(4, 5), target_p(4, 5);
  const std::size_t perm[5] = {3, 0, 4, 1, 2};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      pred_p(i, perm[j]) = pred(i, j);
      target_p(i, perm[j]) = target(i, j);
    }
  }
  const auto a = node_errors(pred, target);
  const auto b = node_errors(pred_p, target_p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("quantile threshold interpolates linearly") {
  const auto t = select_threshold({1, 2, 3, 4}, nullptr, ThresholdSpec::quantile(0.5));
  CHECK(t.value == doctest::Approx(2.5));
  CHECK(t.n_validation == 4);
  CHECK(t.val_min == 1.0);
  CHECK(t.val_max == 4.0);
  const auto top = select_threshold({1, 2, 3, 4}, nullptr, ThresholdSpec::quantile(1.0));
  CHECK(top.value == doctest::Approx(4.0));
}

TEST_CASE("f1 sweep separates an obvious outlier") {
  const std::vector<double> errors{1, 1, 1, 9};
  const std::vector<std::uint8_t> labels{0, 0, 0, 1};
  const auto t = select_threshold(errors, &labels, ThresholdSpec::f1_sweep());
  CHECK(t.value > 1.0);
  CHECK(t.value < 9.0);
  CHECK(oracle::f1_at_threshold(errors, labels, t.value) == doctest::Approx(1.0));
}

TEST_CASE("f1 sweep requires mixed labels") {
  const std::vector<double> errors{1, 2, 3};
  const std::vector<std::uint8_t> all_benign{0, 0, 0};
  CHECK_THROWS_AS(select_threshold(errors, &all_benign, ThresholdSpec::f1_sweep()),
                  Error);
  const std::vector<std::uint8_t> all_bad{1, 1, 1};
  CHECK_THROWS_AS(select_threshold(errors, &all_bad, ThresholdSpec::f1_sweep()),
                  Error);
}

TEST_CASE("empty validation set raises") {
  CHECK_THROWS_AS(select_threshold({}, nullptr, ThresholdSpec::quantile(0.5)), Error);
}

TEST_CASE("f1 sweep achieves the exhaustive-oracle optimum") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    std::vector<double> errors(n);
    std::vector<std::uint8_t> labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      errors[i] = std::round(rng.uniform(0, 10) * 4.0) / 4.0;  // force ties
      labels[i] = rng.bernoulli(0.3) ? 1 : 0;
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    const auto t = select_threshold(errors, &labels, ThresholdSpec::f1_sweep());
    const double achieved = oracle::f1_at_threshold(errors, labels, t.value);

    std::vector<double> sorted(errors);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const double mid = 0.5 * (sorted[i] + sorted[i + 1]);
      CHECK(achieved >= oracle::f1_at_threshold(errors, labels, mid));
    }
  }
}

TEST_CASE("flagging uses strict inequality") {
  Threshold t;
  t.value = 5.0;
  const auto r = flag_nodes({0.1, 5.0, 5.0001}, t);
  CHECK(r.flags == std::vector<std::uint8_t>{0, 0, 1});

  // Threshold at the max score flags nothing.
  Threshold max_t;
  max_t.value = 5.0001;
  const auto none = flag_nodes({0.1, 5.0, 5.0001}, max_t);
  CHECK(std::count(none.flags.begin(), none.flags.end(), 1) == 0);

  // Negative-zero threshold flags any positive score.
  Threshold zero;
  zero.value = -0.0;
  const auto some = flag_nodes({0.0, 0.2}, zero);
  CHECK(some.flags == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("flagging example") {
  Threshold t;
  t.value = 1.0;
  const auto r = flag_nodes({0.1, 5.0, 0.2}, t);
  CHECK(r.flags == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("raising the threshold never grows the flagged set") {
  Rng rng(11);
  std::vector<double> errors(200);
  for (double& e : errors) e = rng.uniform(0, 3);
  double prev_t = -1.0;
  std::vector<std::uint8_t> prev;
  for (int step = 0; step < 10; ++step) {
    Threshold t;
    t.value = prev_t + rng.uniform(0, 0.5);
    const auto flags = flag_nodes(errors, t).flags;
    if (!prev.empty()) {
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) CHECK(prev[i]);  // subset relation
      }
    }
    prev = flags;
    prev_t = t.value;
  }
}

TEST_CASE("metrics: perfect detector") {
  const std::vector<std::uint8_t> flags{1, 0, 1, 0};
  const auto m = compute_metrics(flags, flags);
  CHECK(m.accuracy == doctest::Approx(1.0));
  CHECK(m.fpr == doctest::Approx(0.0));
  CHECK(m.recall == doctest::Approx(1.0));
  CHECK(m.precision == doctest::Approx(1.0));
}

TEST_CASE("metrics reproduce the documented detection figures") {
  // Counts chosen so precision is exactly 0.73 and recall exactly 0.91;
  // their harmonic mean must come out at 0.81.
  const std::size_t tp = 6643, fn = 657, fp = 2457, tn = 38493;
  std::vector<std::uint8_t> flags, labels;
  auto push = [&](std::size_t k, int f, int l) {
    for (std::size_t i = 0; i < k; ++i) {
      flags.push_back(static_cast<std::uint8_t>(f));
      labels.push_back(static_cast<std::uint8_t>(l));
    }
  };
  push(tp, 1, 1);
  push(fn, 0, 1);
  push(fp, 1, 0);
  push(tn, 0, 0);
  const auto m = compute_metrics(flags, labels);
  CHECK(*m.precision == doctest::Approx(0.73).epsilon(1e-12));
  CHECK(*m.recall == doctest::Approx(0.91).epsilon(1e-12));
  CHECK(std::fabs(*m.f1 - 0.81) < 0.005);
  CHECK(*m.fpr == doctest::Approx(0.06).epsilon(1e-12));
}

TEST_CASE("metrics formula evaluation") {
  std::vector<std::uint8_t> flags, labels;
  // tp=3, fp=1, fn=0, tn=4
  for (int i = 0; i < 3; ++i) { flags.push_back(1); labels.push_back(1); }
  flags.push_back(1); labels.push_back(0);
  for (int i = 0; i < 4; ++i) { flags.push_back(0); labels.push_back(0); }
  const auto m = compute_metrics(flags, labels);
  CHECK(*m.precision == doctest::Approx(0.75));
  CHECK(*m.recall == doctest::Approx(1.0));
  CHECK(*m.accuracy == doctest::Approx(0.875));
  CHECK(*m.fpr == doctest::Approx(0.2));
}

TEST_CASE("metrics identities hold on random inputs") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<std::uint8_t> flags(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      flags[i] = rng.bernoulli(0.4) ? 1 : 0;
      labels[i] = rng.bernoulli(0.2) ? 1 : 0;
    }
    const auto m = compute_metrics(flags, labels);
    const std::size_t positives = std::count(labels.begin(), labels.end(), 1);
    CHECK(m.tp + m.fn == positives);
    CHECK(m.fp + m.tn == n - positives);
    CHECK(*m.accuracy ==
          doctest::Approx(static_cast<double>(m.tp + m.tn) / static_cast<double>(n)));
  }
}

TEST_CASE("metrics reject mismatched lengths") {
  CHECK_THROWS_AS(compute_metrics({1, 0}, {1}), Error);
}

TEST_CASE("metrics report absent ratios on zero denominators") {
  // No positives labeled and nothing flagged: recall and precision are
  // undefined, not zero.
  const std::vector<std::uint8_t> flags{0, 0};
  const std::vector<std::uint8_t> labels{0, 0};
  const auto m = compute_metrics(flags, labels);
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.recall.has_value());
  CHECK(m.accuracy.has_value());
  const auto text = metrics_to_json(m);
  CHECK(text.find("\"precision\": null") != std::string::npos);
}

TEST_CASE("trace: chain around a flagged middle node") {
  const auto g = chain_graph(3);
  const auto traces = trace_attack(g, {1}, 1);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].nodes == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(traces[0].edge_ids.size() == 2);
}

TEST_CASE("trace: no flagged nodes yields no traces") {
  const auto g = chain_graph(4);
  CHECK(trace_attack(g, {}, 2).empty());
}

TEST_CASE("trace: overlapping traces merge") {
  const auto g = chain_graph(5);
  const auto traces = trace_attack(g, {1, 3}, 1);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].nodes == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
  CHECK(traces[0].seeds == std::vector<std::uint32_t>{1, 3});
}

TEST_CASE("trace: disjoint reaches stay separate") {
  const auto g = chain_graph(9);
  const auto traces = trace_attack(g, {0, 8}, 1);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].nodes == std::vector<std::uint32_t>{0, 1});
  CHECK(traces[1].nodes == std::vector<std::uint32_t>{7, 8});
}

TEST_CASE("trace: depth zero keeps only the seed") {
  const auto g = chain_graph(3);
  const auto traces = trace_attack(g, {1}, 0);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].nodes == std::vector<std::uint32_t>{1});
  CHECK(traces[0].edge_ids.empty());
}

TEST_CASE("trace node sets equal the bfs ball oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = oracle::random_multigraph(rng, 4 + rng.below(30), rng.below(80), 3);
    std::vector<std::uint32_t> flagged;
    for (std::uint32_t v = 0; v < g.node_count(); ++v) {
      if (rng.bernoulli(0.15)) flagged.push_back(v);
    }
    const std::size_t depth = rng.below(4);
    const auto traces = trace_attack(g, flagged, depth);

    std::set<std::uint32_t> traced;
    for (const auto& t : traces) traced.insert(t.nodes.begin(), t.nodes.end());
    CHECK(traced == oracle::bfs_ball(g, flagged, depth));

    // Every node in a trace is within depth of one of its seeds.
    for (const auto& t : traces) {
      const auto ball = oracle::bfs_ball(g, t.seeds, depth);
      for (std::uint32_t v : t.nodes) CHECK(ball.contains(v));
    }
  }
}

TEST_CASE("clusters: adjacent flagged nodes join") {
  const auto g = chain_graph(2);
  const auto clusters = cluster_anomalies(g, {1, 1});
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0] == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("clusters: benign gaps split clusters") {
  const auto g = chain_graph(3);
  const auto clusters = cluster_anomalies(g, {1, 0, 1});
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0] == std::vector<std::uint32_t>{0});
  CHECK(clusters[1] == std::vector<std::uint32_t>{2});
}

TEST_CASE("clusters: empty flag set yields no clusters") {
  const auto g = chain_graph(3);
  CHECK(cluster_anomalies(g, {0, 0, 0}).empty());
}

TEST_CASE("dot export: empty graph") {
  ProvGraph g;
  const auto dot = export_dot(g, {});
  CHECK(oracle::DotChecker(dot).valid());
  CHECK(dot.find("digraph G") != std::string::npos);
}

TEST_CASE("dot export: one flagged node carries one red attribute") {
  const auto g = chain_graph(2);
  const auto dot = export_dot(g, {1, 0});
  std::size_t reds = 0, pos = 0;
  while ((pos = dot.find("color=red", pos)) != std::string::npos) {
    ++reds;
    pos += 9;
  }
  CHECK(reds == 1);
  CHECK(oracle::DotChecker(dot).valid());
}

TEST_CASE("dot export passes the grammar checker with traces") {
  const auto g = chain_graph(6);
  const auto traces = trace_attack(g, {2}, 2);
  const auto dot = export_dot(g, {0, 0, 1, 0, 0, 0}, traces);
  CHECK(oracle::DotChecker(dot).valid());
  CHECK(dot.find("subgraph cluster_0") != std::string::npos);
}

TEST_CASE("dot export is deterministic") {
  const auto g = chain_graph(5);
  CHECK(export_dot(g, {1, 0, 1, 0, 0}) == export_dot(g, {1, 0, 1, 0, 0}));
}
