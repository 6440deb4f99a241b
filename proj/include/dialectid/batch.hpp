#pragma once

#include <span>
#include <vector>

#include "dialectid/agent/graph.hpp"
#include "dialectid/alignment.hpp"
#include "dialectid/features.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/resources.hpp"
#include "dialectid/segment.hpp"

// Per-segment work over a manifest. Each kernel has a serial reference
// version and an OpenMP version; results come back in input order either way.
namespace dialectid::batch {

std::vector<align::Alignment> align_serial(std::span<const Segment> segments, const Resources& resources);
std::vector<align::Alignment> align_parallel(std::span<const Segment> segments, const Resources& resources,
                                             int threads);

// Rethrow the first failure by input position.
std::vector<Prediction> classify_rules_serial(std::span<const Segment> segments, const features::RuleSet& rules,
                                              Task task, const Resources& resources);
std::vector<Prediction> classify_rules_parallel(std::span<const Segment> segments, const features::RuleSet& rules,
                                                Task task, const Resources& resources, int threads);

enum class AgentMode { Baseline, Graph };

// One record per segment; backend failures are recorded on the Prediction.
std::vector<Prediction> run_agent_serial(std::span<const Segment> segments, AgentMode mode,
                                         const agent::AgentContext& ctx);
std::vector<Prediction> run_agent_parallel(std::span<const Segment> segments, AgentMode mode,
                                           const agent::AgentContext& ctx, int threads);

}  // namespace dialectid::batch
