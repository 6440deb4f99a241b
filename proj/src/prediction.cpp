#include "dialectid/prediction.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dialectid {

ClassScores::ClassScores(Task task)
    : task_(task), values_(labels_for(task).size(), 1.0 / static_cast<double>(labels_for(task).size())) {}

ClassScores::ClassScores(Task task, std::vector<double> values) : task_(task), values_(std::move(values)) {
  if (values_.size() != labels_for(task).size()) {
    throw std::invalid_argument("class score vector does not match the label space");
  }
  double sum = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("class scores must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("class scores must sum to 1");
}

double ClassScores::operator[](Label label) const { return values_[label_index(label, task_)]; }

ClassScores::Argmax ClassScores::argmax() const {
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] > values_[best]) {
      best = i;
      tie = false;
    } else if (values_[i] == values_[best]) {
      tie = true;
    }
  }
  return {labels_for(task_)[best], tie};
}

namespace {

constexpr std::array<std::string_view, 4> kSources{"baseline", "agent", "rules", "human"};
constexpr std::array<std::string_view, 7> kErrorKinds{"timeout", "transport", "quota", "http",
                                                      "replay_miss", "parse", "data"};

}  // namespace

std::string_view source_name(Source s) { return kSources[static_cast<std::size_t>(s)]; }

std::optional<Source> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSources.size(); ++i) {
    if (kSources[i] == name) return static_cast<Source>(i);
  }
  return std::nullopt;
}

std::string_view error_kind_name(ErrorKind k) { return kErrorKinds[static_cast<std::size_t>(k)]; }

std::optional<ErrorKind> parse_error_kind(std::string_view name) {
  for (std::size_t i = 0; i < kErrorKinds.size(); ++i) {
    if (kErrorKinds[i] == name) return static_cast<ErrorKind>(i);
  }
  return std::nullopt;
}

}  // namespace dialectid
