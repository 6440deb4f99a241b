#include <gtest/gtest.h>

#include "dialectid/batch.hpp"
#include "dialectid/error.hpp"
#include "support.hpp"

using namespace dialectid;
using namespace testsupport;

namespace {

const agent::GraphConfig& graph() {
  static const auto g = agent::GraphConfig::load(data_dir() / "graph.json", data_dir());
  return g;
}

const agent::AttachmentLibrary& library() {
  static const auto lib = agent::AttachmentLibrary::load(data_dir() / "attachments");
  return lib;
}

}  // namespace

TEST(Batch, AlignParallelMatchesSerial) {
  const auto& m = fixture_manifest();
  const auto serial = batch::align_serial(m, resources());
  for (int threads : {1, 2, 4}) {
    const auto parallel = batch::align_parallel(m, resources(), threads);
    ASSERT_EQ(parallel.size(), serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      ASSERT_EQ(align::render_alignment(parallel[i]), align::render_alignment(serial[i])) << i;
    }
  }
}

TEST(Batch, RulesParallelMatchesSerial) {
  const auto& m = fixture_manifest();
  for (Task task : {Task::Binary, Task::Eight}) {
    const auto serial = batch::classify_rules_serial(m, starter_rules(), task, resources());
    for (int threads : {2, 3}) {
      EXPECT_EQ(batch::classify_rules_parallel(m, starter_rules(), task, resources(), threads), serial);
    }
  }
}

TEST(Batch, AgentParallelMatchesSerial) {
  agent::MockBackend mock(resources(), starter_rules());
  agent::AgentContext ctx;
  ctx.task = Task::Binary;
  ctx.graph = &graph();
  ctx.attachments = &library();
  ctx.backend = &mock;
  ctx.run_id = "b";
  const auto& test = fixture_splits(Task::Binary).test;
  for (auto mode : {batch::AgentMode::Baseline, batch::AgentMode::Graph}) {
    const auto serial = batch::run_agent_serial(test, mode, ctx);
    EXPECT_EQ(batch::run_agent_parallel(test, mode, ctx, 4), serial);
  }
}

TEST(Batch, FirstFailureByPositionIsRethrown) {
  std::vector<Segment> segs(fixture_manifest().begin(), fixture_manifest().begin() + 10);
  segs[3].standard_german.clear();
  segs[7].ipa_transcription.clear();
  for (int threads : {1, 4}) {
    try {
      batch::classify_rules_parallel(segs, starter_rules(), Task::Eight, resources(), threads);
      FAIL();
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(segs[3].id), std::string::npos) << e.what();
    }
  }
}
