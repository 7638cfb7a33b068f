#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "flowinit.hpp"
#include "objective.hpp"
#include "refine.hpp"
#include "transport.hpp"

namespace scoopflow {

enum class FeatureKind { XyzCentered, LocalPca, Precomputed };

enum class InferenceMode {
  Auto,     // direct when the source fits in one chunk, chunked otherwise
  Direct,
  Chunked,
};

enum class ConfidenceMode {
  Estimated,  // weighted correspondence similarity, trimmed at 0
  One,        // every source point weighted 1
};

struct PipelineConfig {
  FeatureKind provider = FeatureKind::LocalPca;
  std::size_t pca_k = 16;
  std::string source_features;  // SFF paths, Precomputed only
  std::string target_features;

  double gate_radius = kDefaultGateRadius;
  TransportConfig transport;
  std::optional<std::size_t> k_s = 64;  // nullopt: every target is a candidate
  ConfidenceMode confidence = ConfidenceMode::Estimated;
  LossConfig loss;

  bool refine_enabled = true;
  RefineConfig refine;

  InferenceMode inference = InferenceMode::Auto;
  std::size_t chunk_size = 2048;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StageTimings {
  double features_ms = 0.0;
  double cost_ms = 0.0;
  double transport_ms = 0.0;
  double correspondence_ms = 0.0;
  double losses_ms = 0.0;
  double refine_ms = 0.0;
  double metrics_ms = 0.0;
  double total_ms = 0.0;

  double stage_sum() const {
    return features_ms + cost_ms + transport_ms + correspondence_ms + losses_ms + refine_ms + metrics_ms;
  }
};

struct ScenePairResult {
  FlowField initial_flow;
  std::vector<double> confidence;
  std::optional<FlowField> refined_flow;  // present iff refinement ran
  std::vector<double> refine_objective;   // per-step trace when refinement ran
  LossReport loss_start;
  std::optional<LossReport> loss_end;
  std::optional<MetricReport> initial_metrics;  // present iff ground truth
  std::optional<MetricReport> refined_metrics;
  std::size_t chunks = 1;
  StageTimings timings;

  const FlowField& final_flow() const { return refined_flow ? *refined_flow : initial_flow; }
};

/// Features, cost, transport and correspondence over the whole source, then
/// losses, optional refinement and metrics (when x carries ground truth).
ScenePairResult estimate(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg);

/// Same stages with the source shuffled into chunks of cfg.chunk_size, the
/// last one padded by sampling source points with replacement. Each chunk is
/// matched against the full-resolution target; padded flows are dropped and
/// refinement runs once over the gathered full-resolution flow.
ScenePairResult estimate_chunked(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg);

/// Dispatches on cfg.inference.
ScenePairResult run_scene(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg);

/// Refines an externally produced flow with confidence 1 everywhere.
ScenePairResult refine_external(const PointCloud& x, const PointCloud& y, const FlowField& flow,
                                const PipelineConfig& cfg);

/// Chunk layout used by estimate_chunked: chunk c holds entries
/// [c * chunk_size, (c + 1) * chunk_size), values are source indices, and
/// entries at positions >= n_points are padding.
struct ChunkPlan {
  std::size_t chunk_size = 0;
  std::size_t n_points = 0;
  std::vector<std::size_t> order;       // padded permutation, length = chunks * chunk_size
  std::vector<bool> is_padding;         // aligned with order
  std::size_t chunks() const { return chunk_size == 0 ? 0 : order.size() / chunk_size; }
};

ChunkPlan plan_chunks(std::size_t n_points, std::size_t chunk_size, std::uint64_t seed);

}  // namespace scoopflow
