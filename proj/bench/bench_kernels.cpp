// Serial reference kernels against their OpenMP counterparts on the fixture
// manifest. Thread count is the benchmark argument; 0 runs the serial kernel.

#include <benchmark/benchmark.h>

#include "dialectid/agent/graph.hpp"
#include "dialectid/batch.hpp"
#include "dialectid/dataset.hpp"
#include "dialectid/features.hpp"
#include "dialectid/resources.hpp"

using namespace dialectid;

namespace {

const std::filesystem::path kSource = DIALECTID_SOURCE_DIR;

struct Fixture {
  Resources resources = Resources::load(kSource / "data");
  features::RuleSet rules = features::RuleSet::load(kSource / "data" / "rules" / "starter.jsonl", resources.chart);
  std::vector<Segment> segments = data::load_manifest(kSource / "tests" / "fixtures" / "manifest.jsonl");
  agent::GraphConfig graph = agent::GraphConfig::load(kSource / "data" / "graph.json", kSource / "data");
  agent::AttachmentLibrary attachments = agent::AttachmentLibrary::load(kSource / "data" / "attachments");
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Align(benchmark::State& state) {
  const auto& f = fixture();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = threads == 0 ? batch::align_serial(f.segments, f.resources)
                            : batch::align_parallel(f.segments, f.resources, threads);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.segments.size()));
}

void BM_Rules(benchmark::State& state) {
  const auto& f = fixture();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = threads == 0 ? batch::classify_rules_serial(f.segments, f.rules, Task::Eight, f.resources)
                            : batch::classify_rules_parallel(f.segments, f.rules, Task::Eight, f.resources, threads);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.segments.size()));
}

void BM_AgentMock(benchmark::State& state) {
  const auto& f = fixture();
  agent::MockBackend mock(f.resources, f.rules);
  agent::AgentContext ctx;
  ctx.task = Task::Eight;
  ctx.graph = &f.graph;
  ctx.attachments = &f.attachments;
  ctx.backend = &mock;
  ctx.run_id = "bench";
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = threads == 0 ? batch::run_agent_serial(f.segments, batch::AgentMode::Graph, ctx)
                            : batch::run_agent_parallel(f.segments, batch::AgentMode::Graph, ctx, threads);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.segments.size()));
}

}  // namespace

BENCHMARK(BM_Align)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Rules)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AgentMock)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
