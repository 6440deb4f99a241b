#include "dialectid/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "dialectid/error.hpp"

namespace dialectid::eval {

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::optional<Label> gold_for(const Segment& s, Task task) {
  return task == Task::Binary ? s.label2 : s.label8;
}

std::vector<double> to_weights(const ConfusionMatrix& m) {
  std::vector<double> cells;
  cells.reserve(m.size() * m.size());
  for (std::size_t g = 0; g < m.size(); ++g) {
    for (std::size_t p = 0; p < m.size(); ++p) cells.push_back(static_cast<double>(m.at(g, p)));
  }
  return cells;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(Task task)
    : task_(task), k_(labels_for(task).size()), cells_(k_ * k_, 0) {}

ConfusionMatrix::ConfusionMatrix(Task task, std::vector<std::vector<std::size_t>> rows) : ConfusionMatrix(task) {
  if (rows.size() != k_) throw std::invalid_argument("confusion matrix has the wrong number of rows");
  for (std::size_t g = 0; g < k_; ++g) {
    if (rows[g].size() != k_) throw std::invalid_argument("confusion matrix row has the wrong width");
    for (std::size_t p = 0; p < k_; ++p) cells_[g * k_ + p] = rows[g][p];
  }
}

void ConfusionMatrix::add(Label gold, Label predicted, std::size_t count) {
  cells_[label_index(gold, task_) * k_ + label_index(predicted, task_)] += count;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto c : cells_) sum += c;
  return sum;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < k_; ++i) sum += at(i, i);
  return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::size_t sum = 0;
  for (std::size_t p = 0; p < k_; ++p) sum += at(gold, p);
  return sum;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::size_t sum = 0;
  for (std::size_t g = 0; g < k_; ++g) sum += at(g, predicted);
  return sum;
}

WeightedMetrics weighted_metrics(std::span<const double> cells, std::size_t k) {
  if (cells.size() != k * k) throw std::invalid_argument("weighted matrix is not k x k");
  WeightedMetrics out;
  out.per_class_accuracy.assign(k, 0.0);
  out.per_class_f1.assign(k, 0.0);
  out.prediction_counts.assign(k, 0.0);
  double trace = 0.0;
  std::vector<double> rows(k, 0.0);
  for (std::size_t g = 0; g < k; ++g) {
    for (std::size_t p = 0; p < k; ++p) {
      const double v = cells[g * k + p];
      if (!(v >= 0.0)) throw std::invalid_argument("matrix weights must be non-negative");
      rows[g] += v;
      out.prediction_counts[p] += v;
      out.total += v;
    }
    trace += cells[g * k + g];
  }
  if (out.total <= 0.0) throw DataError("cannot compute metrics for an empty confusion matrix");

  out.accuracy = 100.0 * trace / out.total;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = cells[c * k + c];
    if (rows[c] > 0.0) out.per_class_accuracy[c] = 100.0 * tp / rows[c];
    // F1 = 2TP / (gold + predicted); a class absent from both sides scores 0.
    const double denom = rows[c] + out.prediction_counts[c];
    if (denom > 0.0) out.per_class_f1[c] = 100.0 * 2.0 * tp / denom;
    f1_sum += out.per_class_f1[c];
  }
  out.macro_f1 = f1_sum / static_cast<double>(k);
  return out;
}

EvalReport metrics(const ConfusionMatrix& m) {
  const auto cells = to_weights(m);
  const auto w = weighted_metrics(cells, m.size());
  EvalReport r;
  r.task = m.task();
  r.accuracy = w.accuracy;
  r.macro_f1 = w.macro_f1;
  r.per_class_accuracy = w.per_class_accuracy;
  for (std::size_t p = 0; p < m.size(); ++p) r.prediction_counts.push_back(m.column_sum(p));
  r.n = m.total();
  return r;
}

Tally confusion(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task) {
  std::map<std::string_view, const Segment*> by_id;
  for (const auto& s : golds) by_id.emplace(s.id, &s);

  Tally tally{ConfusionMatrix(task), 0, 0, 0, {}};
  tally.abstained_per_class.assign(labels_for(task).size(), 0);
  std::set<std::string_view> seen;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.segment_id);
    if (it == by_id.end()) throw DataError("prediction for unknown segment '" + p.segment_id + "'");
    if (!seen.insert(p.segment_id).second) {
      throw DataError("more than one prediction for segment '" + p.segment_id + "'");
    }
    if (p.task != task) {
      throw DataError("prediction for '" + p.segment_id + "' is for the " + std::string(task_name(p.task)) +
                      " task");
    }
    ++tally.n;
    if (p.errored()) {
      ++tally.errors;
      continue;
    }
    const auto gold = gold_for(*it->second, task);
    if (!gold) throw DataError("segment '" + p.segment_id + "' has no gold label for this task");
    if (p.abstained) {
      ++tally.abstained;
      ++tally.abstained_per_class[label_index(*gold, task)];
      continue;
    }
    if (!p.label || !in_label_space(*p.label, task)) {
      throw DataError("prediction for '" + p.segment_id + "' has no label in the task's label space");
    }
    tally.matrix.add(*gold, *p.label);
  }
  return tally;
}

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task) {
  const Tally tally = confusion(predictions, golds, task);
  if (tally.matrix.total() == 0) {
    throw DataError("no decided predictions to evaluate (" + std::to_string(tally.n) + " records, " +
                    std::to_string(tally.errors) + " errored, " + std::to_string(tally.abstained) + " abstained)");
  }
  EvalReport r = metrics(tally.matrix);
  r.n = tally.n;
  r.errors = tally.errors;
  r.abstained = tally.abstained;
  return r;
}

HumanScore human_score(const Tally& tally) {
  const auto& m = tally.matrix;
  const std::size_t k = m.size();
  HumanScore h;
  h.decided = m.total();
  h.correct = m.trace();
  h.abstained = tally.abstained;
  h.total = h.decided + h.abstained;
  if (h.total == 0) throw DataError("cannot score a session without decisions");

  std::vector<double> cells = to_weights(m);
  for (std::size_t g = 0; g < k && g < tally.abstained_per_class.size(); ++g) {
    const double a = static_cast<double>(tally.abstained_per_class[g]);
    cells[g * k + g] += a / 2.0;
    for (std::size_t p = 0; p < k; ++p) {
      if (p != g) cells[g * k + p] += a / 2.0 / static_cast<double>(k - 1);
    }
  }
  const auto w = weighted_metrics(cells, k);
  h.accuracy = 100.0 * (static_cast<double>(h.correct) + static_cast<double>(h.abstained) / 2.0) /
               static_cast<double>(h.total);
  h.decided_accuracy = h.decided == 0 ? 0.0 : 100.0 * static_cast<double>(h.correct) / static_cast<double>(h.decided);
  h.macro_f1 = w.macro_f1;
  h.per_class_accuracy = w.per_class_accuracy;
  return h;
}

HumanScore human_score(std::span<const Prediction> predictions, std::span<const Segment> golds, Task task) {
  return human_score(confusion(predictions, golds, task));
}

RunAggregate aggregate_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DataError("cannot aggregate an empty list of runs");
  RunAggregate a;
  a.runs = reports.size();
  for (const auto& r : reports) {
    if (r.task != reports.front().task) throw DataError("cannot aggregate runs of different tasks");
    a.mean_accuracy += r.accuracy;
    a.mean_macro_f1 += r.macro_f1;
  }
  const double n = static_cast<double>(reports.size());
  a.mean_accuracy /= n;
  a.mean_macro_f1 /= n;
  double var_acc = 0.0;
  double var_f1 = 0.0;
  for (const auto& r : reports) {
    var_acc += (r.accuracy - a.mean_accuracy) * (r.accuracy - a.mean_accuracy);
    var_f1 += (r.macro_f1 - a.mean_macro_f1) * (r.macro_f1 - a.mean_macro_f1);
  }
  a.stddev_accuracy = std::sqrt(var_acc / n);
  a.stddev_macro_f1 = std::sqrt(var_f1 / n);
  return a;
}

std::string render_report(const EvalReport& report) {
  const auto labels = labels_for(report.task);
  std::vector<std::string> header{"Accuracy"};
  for (const Label l : labels) header.push_back("# " + std::string(label_code(l)));
  header.push_back("Macro-F1");
  for (const Label l : labels) header.push_back(std::string(label_code(l)));

  std::vector<std::size_t> widths;
  for (const auto& h : header) widths.push_back(std::max<std::size_t>(h.size(), 6));

  std::ostringstream out;
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) line += (i ? " | " : "") + pad_right(header[i], widths[i]);
  out << line << "\n";
  std::string rule;
  for (std::size_t i = 0; i < header.size(); ++i) rule += (i ? "-|-" : "") + std::string(widths[i], '-');
  out << rule << "\n";
  if (report.n == 0) return out.str();

  std::vector<std::string> values{fixed2(report.accuracy)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    values.push_back(i < report.prediction_counts.size() ? std::to_string(report.prediction_counts[i]) : "0");
  }
  values.push_back(fixed2(report.macro_f1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    values.push_back(i < report.per_class_accuracy.size() ? fixed2(report.per_class_accuracy[i]) : "0.00");
  }
  line.clear();
  for (std::size_t i = 0; i < values.size(); ++i) line += (i ? " | " : "") + pad_right(values[i], widths[i]);
  out << line << "\n";
  out << "n=" << report.n << " errors=" << report.errors << " abstained=" << report.abstained << "\n";
  return out.str();
}

std::string render_aggregate(const RunAggregate& a) {
  std::ostringstream out;
  out << "runs " << a.runs << "\n";
  out << "accuracy  mean " << fixed2(a.mean_accuracy) << "  stddev " << fixed2(a.stddev_accuracy) << "\n";
  out << "macro-F1  mean " << fixed2(a.mean_macro_f1) << "  stddev " << fixed2(a.stddev_macro_f1) << "\n";
  return out.str();
}

std::string render_human_score(const HumanScore& h, Task task) {
  std::ostringstream out;
  out << "decided " << h.decided << " of " << h.total << ", correct " << h.correct << ", abstained "
      << h.abstained << "\n";
  out << "accuracy on decided " << fixed2(h.decided_accuracy) << "\n";
  out << "overall accuracy (abstentions half-split) " << fixed2(h.accuracy) << "\n";
  const auto labels = labels_for(task);
  for (std::size_t i = 0; i < labels.size() && i < h.per_class_accuracy.size(); ++i) {
    out << "  " << label_code(labels[i]) << " " << fixed2(h.per_class_accuracy[i]) << "\n";
  }
  return out.str();
}

Json report_to_json(const EvalReport& r) {
  Json j;
  j["task"] = task_name(r.task);
  j["n"] = r.n;
  j["errors"] = r.errors;
  j["abstained"] = r.abstained;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  Json per_class = Json::object();
  Json counts = Json::object();
  const auto labels = labels_for(r.task);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string code(label_code(labels[i]));
    per_class[code] = i < r.per_class_accuracy.size() ? r.per_class_accuracy[i] : 0.0;
    counts[code] = i < r.prediction_counts.size() ? r.prediction_counts[i] : 0;
  }
  j["per_class_accuracy"] = std::move(per_class);
  j["prediction_counts"] = std::move(counts);
  return j;
}

Json aggregate_to_json(const RunAggregate& a) {
  Json j;
  j["runs"] = a.runs;
  j["mean_accuracy"] = a.mean_accuracy;
  j["stddev_accuracy"] = a.stddev_accuracy;
  j["mean_macro_f1"] = a.mean_macro_f1;
  j["stddev_macro_f1"] = a.stddev_macro_f1;
  return j;
}

Json human_score_to_json(const HumanScore& h, Task task) {
  Json j;
  j["accuracy"] = h.accuracy;
  j["decided_accuracy"] = h.decided_accuracy;
  j["macro_f1"] = h.macro_f1;
  j["total"] = h.total;
  j["decided"] = h.decided;
  j["correct"] = h.correct;
  j["abstained"] = h.abstained;
  Json per_class = Json::object();
  const auto labels = labels_for(task);
  for (std::size_t i = 0; i < labels.size() && i < h.per_class_accuracy.size(); ++i) {
    per_class[std::string(label_code(labels[i]))] = h.per_class_accuracy[i];
  }
  j["per_class_accuracy"] = std::move(per_class);
  return j;
}

}  // namespace dialectid::eval
