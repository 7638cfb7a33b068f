#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>

#include "error.hpp"
#include "kdtree.hpp"

namespace scoopflow {

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  explicit StageTimer(double& slot) : slot_(slot), start_(Clock::now()) {}
  ~StageTimer() { slot_ += std::chrono::duration<double, std::milli>(Clock::now() - start_).count(); }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  double& slot_;
  Clock::time_point start_;
};

// Unbiased draw from [0, bound) by rejection.
std::size_t uniform_below(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

FeatureMatrix rows_of(const FeatureMatrix& full, std::span<const std::size_t> indices) {
  FeatureMatrix out(static_cast<Eigen::Index>(indices.size()), full.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = full.row(static_cast<Eigen::Index>(indices[r]));
  }
  return out;
}

FeatureMatrix load_precomputed(const std::string& path, const char* side) {
  if (path.empty()) {
    fail(ErrorCode::InvalidInput, std::string("precomputed provider needs a ") + side + "_features path");
  }
  return load_features(path);
}

// Source-side feature source: precomputed rows are loaded once and sliced
// per chunk, the geometric providers run on whatever points they are given.
class SourceFeatures {
 public:
  SourceFeatures(const PipelineConfig& cfg, const PointCloud& x) : cfg_(cfg) {
    if (cfg.provider == FeatureKind::Precomputed) {
      full_ = load_precomputed(cfg.source_features, "source");
      if (static_cast<std::size_t>(full_.rows()) != x.size()) {
        fail(ErrorCode::ShapeMismatch, "source features have " + std::to_string(full_.rows()) +
                                           " rows for " + std::to_string(x.size()) + " points");
      }
    }
  }

  FeatureMatrix for_points(const PointCloud& pts, std::span<const std::size_t> indices) const {
    switch (cfg_.provider) {
      case FeatureKind::XyzCentered: return extract_features(XyzCentered{}, pts);
      case FeatureKind::LocalPca: return extract_features(LocalPca{cfg_.pca_k}, pts);
      case FeatureKind::Precomputed: return extract_features(Precomputed{rows_of(full_, indices)}, pts);
    }
    return {};
  }

 private:
  const PipelineConfig& cfg_;
  FeatureMatrix full_;
};

FeatureMatrix target_features(const PipelineConfig& cfg, const PointCloud& y) {
  switch (cfg.provider) {
    case FeatureKind::XyzCentered: return extract_features(XyzCentered{}, y);
    case FeatureKind::LocalPca: return extract_features(LocalPca{cfg.pca_k}, y);
    case FeatureKind::Precomputed:
      return extract_features(Precomputed{load_precomputed(cfg.target_features, "target")}, y);
  }
  return {};
}

struct Match {
  FlowField flow;
  std::vector<double> confidence;
};

Match match(const PointCloud& xs, const FeatureMatrix& fx, const PointCloud& y, const FeatureMatrix& fy,
            const PipelineConfig& cfg, StageTimings& t) {
  CostMatrix cost;
  {
    StageTimer timer(t.cost_ms);
    cost = cost_matrix(fx, fy, xs, y, cfg.gate_radius);
  }
  TransportPlan plan;
  {
    StageTimer timer(t.transport_ms);
    plan = sinkhorn(cost, cfg.transport);
  }
  StageTimer timer(t.correspondence_ms);
  const CorrespondenceConfig corr{cfg.k_s.value_or(y.size())};
  CorrespondenceResult r = correspond(xs, y, cost, plan, corr);
  return {std::move(r.initial_flow), std::move(r.confidence)};
}

// Losses, refinement and metrics on the gathered full-resolution flow.
void finish(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg, bool run_refinement,
            ScenePairResult& out) {
  StageTimings& t = out.timings;
  {
    StageTimer timer(t.losses_ms);
    const NeighborIndex target(y.points());
    const NeighborGraph graph = self_excluded_neighbors(x, cfg.loss.k_f);
    out.loss_start = evaluate_losses(x, out.initial_flow, out.confidence, y, target, graph, cfg.loss);
  }
  if (run_refinement) {
    RefineTrace trace;
    {
      StageTimer timer(t.refine_ms);
      trace = refine(x, y, out.initial_flow, out.confidence, cfg.refine);
    }
    StageTimer timer(t.losses_ms);
    const NeighborIndex target(y.points());
    const NeighborGraph graph = self_excluded_neighbors(x, cfg.loss.k_f);
    out.loss_end = evaluate_losses(x, trace.refined_flow, out.confidence, y, target, graph, cfg.loss);
    out.refined_flow = std::move(trace.refined_flow);
    out.refine_objective = std::move(trace.objective);
  }
  if (x.has_flow()) {
    StageTimer timer(t.metrics_ms);
    out.initial_metrics = metrics(out.initial_flow, x.flow());
    if (out.refined_flow) out.refined_metrics = metrics(*out.refined_flow, x.flow());
  }
}

void apply_confidence_mode(const PipelineConfig& cfg, std::vector<double>& p) {
  if (cfg.confidence == ConfidenceMode::One) std::fill(p.begin(), p.end(), 1.0);
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(gate_radius > 0.0)) fail(ErrorCode::InvalidInput, "gate_radius must be positive");
  transport.validate();
  if (k_s && *k_s == 0) fail(ErrorCode::InvalidInput, "k_s must be positive");
  if (loss.k_f == 0) fail(ErrorCode::InvalidInput, "loss k_f must be positive");
  if (!(loss.alpha_conf >= 0.0) || !(loss.alpha_flow >= 0.0)) {
    fail(ErrorCode::InvalidInput, "alpha_conf and alpha_flow must be nonnegative");
  }
  if (refine_enabled) refine.validate();
  if (chunk_size == 0) fail(ErrorCode::InvalidInput, "chunk_size must be positive");
  if (provider == FeatureKind::LocalPca && pca_k == 0) fail(ErrorCode::InvalidInput, "pca_k must be positive");
}

ChunkPlan plan_chunks(std::size_t n_points, std::size_t chunk_size, std::uint64_t seed) {
  if (n_points == 0 || chunk_size == 0) fail(ErrorCode::InvalidInput, "plan_chunks: sizes must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n_points);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n_points - 1; i > 0; --i) std::swap(perm[i], perm[uniform_below(rng, i + 1)]);

  const std::size_t chunks = (n_points + chunk_size - 1) / chunk_size;
  ChunkPlan plan{chunk_size, n_points, {}, {}};
  plan.order.reserve(chunks * chunk_size);
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto begin = perm.begin() + static_cast<std::ptrdiff_t>(c * chunk_size);
    const auto end = perm.begin() + static_cast<std::ptrdiff_t>(std::min(n_points, (c + 1) * chunk_size));
    // Ascending order inside a chunk makes a full single chunk identical to
    // the unchunked path.
    std::vector<std::size_t> members(begin, end);
    std::sort(members.begin(), members.end());
    plan.order.insert(plan.order.end(), members.begin(), members.end());
  }
  plan.is_padding.assign(plan.order.size(), false);
  while (plan.order.size() < chunks * chunk_size) {
    plan.order.push_back(uniform_below(rng, n_points));
    plan.is_padding.push_back(true);
  }
  return plan;
}

ScenePairResult estimate(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  ScenePairResult out;
  FeatureMatrix fx, fy;
  {
    StageTimer timer(out.timings.features_ms);
    const SourceFeatures source(cfg, x);
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    fx = source.for_points(x, all);
    fy = target_features(cfg, y);
  }
  Match m = match(x, fx, y, fy, cfg, out.timings);
  out.initial_flow = std::move(m.flow);
  out.confidence = std::move(m.confidence);
  apply_confidence_mode(cfg, out.confidence);
  finish(x, y, cfg, cfg.refine_enabled, out);
  out.timings.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return out;
}

ScenePairResult estimate_chunked(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  ScenePairResult out;
  out.initial_flow.assign(x.size(), Vec3::Zero());
  out.confidence.assign(x.size(), 0.0);

  FeatureMatrix fy;
  std::optional<SourceFeatures> source;
  ChunkPlan plan;
  {
    StageTimer timer(out.timings.features_ms);
    fy = target_features(cfg, y);
    source.emplace(cfg, x);
    plan = plan_chunks(x.size(), cfg.chunk_size, cfg.seed);
  }
  out.chunks = plan.chunks();

  for (std::size_t c = 0; c < plan.chunks(); ++c) {
    const std::span<const std::size_t> members(plan.order.data() + c * plan.chunk_size, plan.chunk_size);
    PointCloud xs;
    FeatureMatrix fx;
    {
      StageTimer timer(out.timings.features_ms);
      xs = x.subset(members);
      fx = source->for_points(xs, members);
    }
    Match m = match(xs, fx, y, fy, cfg, out.timings);
    for (std::size_t r = 0; r < members.size(); ++r) {
      if (plan.is_padding[c * plan.chunk_size + r]) continue;
      out.initial_flow[members[r]] = m.flow[r];
      out.confidence[members[r]] = m.confidence[r];
    }
  }
  apply_confidence_mode(cfg, out.confidence);
  finish(x, y, cfg, cfg.refine_enabled, out);
  out.timings.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return out;
}

ScenePairResult run_scene(const PointCloud& x, const PointCloud& y, const PipelineConfig& cfg) {
  switch (cfg.inference) {
    case InferenceMode::Direct: return estimate(x, y, cfg);
    case InferenceMode::Chunked: return estimate_chunked(x, y, cfg);
    case InferenceMode::Auto: break;
  }
  return x.size() <= cfg.chunk_size ? estimate(x, y, cfg) : estimate_chunked(x, y, cfg);
}

ScenePairResult refine_external(const PointCloud& x, const PointCloud& y, const FlowField& flow,
                                const PipelineConfig& cfg) {
  cfg.validate();
  cfg.refine.validate();
  check_flow(flow, x.size(), "external flow");
  const auto start = Clock::now();
  ScenePairResult out;
  out.initial_flow = flow;
  out.confidence.assign(x.size(), 1.0);
  finish(x, y, cfg, true, out);
  out.timings.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return out;
}

}  // namespace scoopflow
