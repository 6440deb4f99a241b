#include <gtest/gtest.h>

#include "dialectid/error.hpp"
#include "dialectid/json_io.hpp"
#include "support.hpp"

using namespace dialectid;
using namespace testsupport;

namespace {

Prediction sample(Task task) {
  Prediction p;
  p.segment_id = "seg-1";
  p.task = task;
  p.source = Source::Agent;
  p.label = task == Task::Binary ? Label::Highest : Label::VS;
  std::vector<double> v(labels_for(task).size(), 0.0);
  v[label_index(*p.label, task)] = 0.75;
  v[0] = 0.25;
  p.scores = ClassScores(task, v);
  p.run_id = "run-7";
  return p;
}

}  // namespace

TEST(PredictionJson, RoundTripsEveryShape) {
  std::vector<Prediction> all{sample(Task::Binary), sample(Task::Eight)};
  Prediction err;
  err.segment_id = "e";
  err.source = Source::Baseline;
  err.error = PredictionError{ErrorKind::Quota, "insufficient_quota"};
  all.push_back(err);
  Prediction abstain;
  abstain.segment_id = "h";
  abstain.source = Source::Human;
  abstain.abstained = true;
  all.push_back(abstain);
  for (const auto& p : all) EXPECT_EQ(prediction_from_json(prediction_to_json(p), "t"), p);

  TempDir dir;
  write_predictions(dir / "p.jsonl", all);
  EXPECT_EQ(load_predictions(dir / "p.jsonl"), all);
  EXPECT_EQ(predictions_to_jsonl(all), slurp(dir / "p.jsonl"));
}

TEST(PredictionJson, RejectsInconsistentRecords) {
  auto j = prediction_to_json(sample(Task::Binary));
  j["abstained"] = true;
  EXPECT_THROW(prediction_from_json(j, "t"), DataError);  // label and abstention

  auto k = prediction_to_json(sample(Task::Binary));
  k["label"] = nullptr;
  EXPECT_THROW(prediction_from_json(k, "t"), DataError);  // nothing set

  Prediction abstain;
  abstain.segment_id = "x";
  abstain.source = Source::Rules;
  abstain.abstained = true;
  EXPECT_THROW(prediction_from_json(prediction_to_json(abstain), "t"), DataError);  // only humans abstain

  auto bad_label = prediction_to_json(sample(Task::Binary));
  bad_label["label"] = "ZH";
  EXPECT_THROW(prediction_from_json(bad_label, "t"), DataError);
}

TEST(PredictionJson, LoadErrorsCarryLine) {
  TempDir dir;
  write_file_atomic(dir / "p.jsonl", predictions_to_jsonl({sample(Task::Binary)}) + "{oops\n");
  try {
    load_predictions(dir / "p.jsonl");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("p.jsonl:2"), std::string::npos) << e.what();
  }
}

TEST(SegmentJson, OptionalFieldsOmitted) {
  Segment s;
  s.id = "a";
  s.corpus = Corpus::STT;
  s.audio_path = "x.flac";
  s.ipa_transcription = "a";
  s.standard_german = "a";
  const auto j = segment_to_json(s);
  EXPECT_FALSE(j.contains("label8"));
  EXPECT_FALSE(j.contains("sentence_id"));
  EXPECT_EQ(segment_from_json(j, "t"), s);
}

TEST(Files, AtomicWriteReplaces) {
  TempDir dir;
  write_file_atomic(dir / "f.txt", "one");
  write_file_atomic(dir / "f.txt", "two");
  EXPECT_EQ(read_file(dir / "f.txt"), "two");
  EXPECT_THROW(read_file(dir / "missing.txt"), DataError);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}
