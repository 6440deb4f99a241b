#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dialectid/json_io.hpp"
#include "dialectid/labels.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/segment.hpp"

namespace dialectid::eval {

// Counts indexed by (gold, predicted) in labels_for(task) order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Task task);
  ConfusionMatrix(Task task, std::vector<std::vector<std::size_t>> rows);

  Task task() const { return task_; }
  std::size_t size() const { return k_; }
  std::size_t at(std::size_t gold, std::size_t predicted) const { return cells_[gold * k_ + predicted]; }
  void add(Label gold, Label predicted, std::size_t count = 1);

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t gold) const;
  std::size_t column_sum(std::size_t predicted) const;
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Task task_;
  std::size_t k_;
  std::vector<std::size_t> cells_;
};

// Metrics over a k x k matrix of non-negative weights, row-major. Weights may
// be fractional (half-split abstentions). Percentages throughout.
struct WeightedMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_accuracy;  // recall per gold row; 0 for an empty row
  std::vector<double> per_class_f1;        // 0 when a class has no gold and no predictions
  std::vector<double> prediction_counts;   // column sums
  double total = 0.0;
};
WeightedMetrics weighted_metrics(std::span<const double> cells, std::size_t k);

struct EvalReport {
  Task task = Task::Binary;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_accuracy;       // labels_for(task) order
  std::vector<std::size_t> prediction_counts;   // sums to n - errors - abstained
  std::size_t n = 0;
  std::size_t errors = 0;
  std::size_t abstained = 0;
};

// Throws DataError on an empty matrix.
EvalReport metrics(const ConfusionMatrix& m);

struct Tally {
  ConfusionMatrix matrix;
  std::size_t n = 0;
  std::size_t errors = 0;
  std::size_t abstained = 0;
  std::vector<std::size_t> abstained_per_class;  // by gold class
};

// Errored and abstained predictions are counted, not placed in the matrix.
// Throws DataError for predictions of unknown segments, duplicates, task
// mismatches, or a decided prediction whose segment has no gold label.
Tally confusion(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task);

// confusion() followed by metrics(), carrying the error and abstention counts.
EvalReport evaluate(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task);

struct HumanScore {
  double accuracy = 0.0;          // (correct + abstained / 2) / total
  double decided_accuracy = 0.0;  // correct / decided, 0 when nothing was decided
  double macro_f1 = 0.0;          // over the half-split matrix
  std::vector<double> per_class_accuracy;
  std::size_t total = 0;
  std::size_t decided = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
};

// Each abstention counts half toward the correct class and spreads the other
// half evenly over the incorrect ones. Requires a non-empty tally.
HumanScore human_score(const Tally& tally);
HumanScore human_score(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task);

struct RunAggregate {
  std::size_t runs = 0;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;  // population standard deviation
  double mean_macro_f1 = 0.0;
  double stddev_macro_f1 = 0.0;
};

// Throws DataError for an empty list or mixed tasks.
RunAggregate aggregate_runs(std::span<const EvalReport> reports);

// Columns: Accuracy, one prediction count per class, Macro-F1, one accuracy per class.
std::string render_report(const EvalReport& report);
std::string render_aggregate(const RunAggregate& aggregate);
std::string render_human_score(const HumanScore& score, Task task);

Json report_to_json(const EvalReport& report);
Json aggregate_to_json(const RunAggregate& aggregate);
Json human_score_to_json(const HumanScore& score, Task task);

}  // namespace dialectid::eval
