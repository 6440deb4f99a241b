#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/labels.hpp"

namespace dialectid {

// Per-class probabilities over a task's label space, in labels_for(task) order.
class ClassScores {
 public:
  explicit ClassScores(Task task);  // uniform
  ClassScores(Task task, std::vector<double> values);  // values must be normalized

  Task task() const { return task_; }
  double operator[](Label label) const;
  std::span<const double> values() const { return values_; }

  // Highest-scoring label; exact ties go to the earliest label in the fixed
  // order and set `tie`.
  struct Argmax {
    Label label;
    bool tie;
  };
  Argmax argmax() const;

  bool operator==(const ClassScores&) const = default;

 private:
  Task task_;
  std::vector<double> values_;
};

enum class Source { Baseline, Agent, Rules, Human };
std::string_view source_name(Source s);
std::optional<Source> parse_source(std::string_view name);

enum class ErrorKind { Timeout, Transport, Quota, Http, ReplayMiss, Parse, Data };
std::string_view error_kind_name(ErrorKind k);
std::optional<ErrorKind> parse_error_kind(std::string_view name);

struct PredictionError {
  ErrorKind kind;
  std::string message;
  bool operator==(const PredictionError&) const = default;
};

// One scored output per segment. Exactly one of: a label, an abstention
// (human source only), or an error.
struct Prediction {
  std::string segment_id;
  Task task = Task::Binary;
  Source source = Source::Rules;
  std::optional<Label> label;
  std::optional<ClassScores> scores;
  bool tie = false;
  bool abstained = false;
  std::string run_id;
  std::optional<PredictionError> error;

  bool errored() const { return error.has_value(); }
  bool operator==(const Prediction&) const = default;
};

}  // namespace dialectid
