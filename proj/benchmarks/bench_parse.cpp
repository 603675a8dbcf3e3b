#include <benchmark/benchmark.h>

#include <sstream>

#include "prov/graph.hpp"
#include "prov/records.hpp"
#include "prov/synth.hpp"

namespace {

std::string make_corpus_text(int n_events) {
  prov::BenignSpec spec = prov::BenignSpec::defaults();
  spec.n_events = n_events;
  spec.seed = 7;
  std::ostringstream out;
  for (const auto& r : prov::gen_benign(spec)) {
    out << prov::record_to_json(r) << '\n';
  }
  return out.str();
}

void BM_ParseLine(benchmark::State& state) {
  const std::string line =
      R"({"record":"Event","uuid":"00000000-0000-0000-0000-000000000001",)"
      R"("type":"EVENT_READ","subject":"00000000-0000-0000-0000-000000000002",)"
      R"("predicateObject":"00000000-0000-0000-0000-000000000003","timestampNanos":12345})";
  for (auto _ : state) {
    auto result = prov::parse_line(prov::RawLine{line, 1});
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_ParseLine);

void BM_ParseStream(benchmark::State& state) {
  const std::string text = make_corpus_text(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    std::istringstream in(text);
    auto result = prov::parse_stream(in);
    benchmark::DoNotOptimize(result);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParseStream)->Arg(1000)->Arg(10000);

void BM_BuildGraph(benchmark::State& state) {
  prov::BenignSpec spec = prov::BenignSpec::defaults();
  spec.n_events = static_cast<int>(state.range(0));
  spec.seed = 7;
  const auto records = prov::gen_benign(spec);
  for (auto _ : state) {
    auto graph = prov::build_graph(records);
    benchmark::DoNotOptimize(graph);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(1000)->Arg(10000);

}  // namespace
