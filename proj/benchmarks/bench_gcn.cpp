#include <benchmark/benchmark.h>

#include "prov/gcn.hpp"
#include "prov/graph.hpp"
#include "prov/synth.hpp"

namespace {

struct Fixture {
  prov::ProvGraph graph;
  prov::NormAdj adj;
  prov::Matrix x, target;
  prov::GcnConfig cfg;
};

Fixture make_fixture(int n_events) {
  prov::BenignSpec spec = prov::BenignSpec::defaults();
  spec.n_processes = 250;
  spec.n_files = 600;
  spec.n_sockets = 150;
  spec.n_events = n_events;
  spec.seed = 7;
  Fixture f;
  f.graph = prov::build_graph(prov::gen_benign(spec));
  f.adj = prov::normalized_adjacency(f.graph);
  f.x = prov::one_hot_node_types(f.graph);
  f.target = prov::node_features(f.graph);
  f.cfg.layer_dims = {f.x.cols(), 256, 128, f.target.cols()};
  f.cfg.dropout_rate = 0.5;
  f.cfg.learning_rate = 0.01;
  f.cfg.seed = 7;
  return f;
}

void BM_ForwardEval(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  const auto model = prov::init_model(f.cfg);
  for (auto _ : state) {
    auto out = prov::forward(model, f.adj, f.x, prov::RunMode::eval);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ForwardEval)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  auto model = prov::init_model(f.cfg);
  prov::SplitMasks masks;
  masks.train.assign(f.x.rows(), 1);
  auto cfg = f.cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    auto result = prov::train(model, f.adj, f.x, f.target, masks, cfg);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_NormalizedAdjacency(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto adj = prov::normalized_adjacency(f.graph);
    benchmark::DoNotOptimize(adj);
  }
}
BENCHMARK(BM_NormalizedAdjacency)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
