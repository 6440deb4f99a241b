#include "dialectid/batch.hpp"

#include <exception>

#include <omp.h>

namespace dialectid::batch {

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& failures) {
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

Prediction run_one(const Segment& segment, AgentMode mode, const agent::AgentContext& ctx) {
  return mode == AgentMode::Graph ? agent::run_graph(segment, ctx) : agent::run_baseline(segment, ctx);
}

}  // namespace

std::vector<align::Alignment> align_serial(std::span<const Segment> segments, const Resources& resources) {
  std::vector<align::Alignment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(resources.align_texts(s.ipa_transcription, s.standard_german));
  return out;
}

std::vector<align::Alignment> align_parallel(std::span<const Segment> segments, const Resources& resources,
                                             int threads) {
  const auto n = static_cast<long>(segments.size());
  std::vector<align::Alignment> out(segments.size());
  std::vector<std::exception_ptr> failures(segments.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = resources.align_texts(segments[i].ipa_transcription, segments[i].standard_german);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  rethrow_first(failures);
  return out;
}

std::vector<Prediction> classify_rules_serial(std::span<const Segment> segments, const features::RuleSet& rules,
                                              Task task, const Resources& resources) {
  std::vector<Prediction> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(features::classify_rules(s, rules, task, resources));
  return out;
}

std::vector<Prediction> classify_rules_parallel(std::span<const Segment> segments, const features::RuleSet& rules,
                                                Task task, const Resources& resources, int threads) {
  const auto n = static_cast<long>(segments.size());
  std::vector<Prediction> out(segments.size());
  std::vector<std::exception_ptr> failures(segments.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = features::classify_rules(segments[i], rules, task, resources);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  rethrow_first(failures);
  return out;
}

std::vector<Prediction> run_agent_serial(std::span<const Segment> segments, AgentMode mode,
                                         const agent::AgentContext& ctx) {
  std::vector<Prediction> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(run_one(s, mode, ctx));
  return out;
}

std::vector<Prediction> run_agent_parallel(std::span<const Segment> segments, AgentMode mode,
                                           const agent::AgentContext& ctx, int threads) {
  const auto n = static_cast<long>(segments.size());
  std::vector<Prediction> out(segments.size());
  std::vector<std::exception_ptr> failures(segments.size());
  // Nodes inside one segment stay sequential; only segments run side by side.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = run_one(segments[i], mode, ctx);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  rethrow_first(failures);
  return out;
}

}  // namespace dialectid::batch
