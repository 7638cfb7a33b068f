#include "report.hpp"

namespace scoopflow {

nlohmann::json to_json(const MetricReport& r) {
  return {{"epe", r.epe}, {"as", r.as_pct}, {"ar", r.ar_pct}, {"out", r.out_pct}, {"n", r.n_evaluated}};
}

nlohmann::json to_json(const LossReport& r) {
  return {{"dist", r.dist}, {"conf", r.conf}, {"flow", r.flow_smooth}, {"total", r.total}};
}

nlohmann::json scene_record(const ScenePairResult& result, bool include_timings) {
  nlohmann::json out;
  out["n_source"] = result.initial_flow.size();
  out["chunks"] = result.chunks;
  out["refined"] = result.refined_flow.has_value();
  if (result.initial_metrics) out["initial_metrics"] = to_json(*result.initial_metrics);
  if (result.refined_metrics) out["refined_metrics"] = to_json(*result.refined_metrics);
  out["losses"]["start"] = to_json(result.loss_start);
  if (result.loss_end) out["losses"]["end"] = to_json(*result.loss_end);
  if (!result.refine_objective.empty()) {
    out["refine_objective"] = {{"initial", result.refine_objective.front()},
                               {"final", result.refine_objective.back()},
                               {"steps", result.refine_objective.size() - 1}};
  }
  if (include_timings) {
    const auto& t = result.timings;
    out["timings"] = {{"features_ms", t.features_ms}, {"cost_ms", t.cost_ms},
                      {"transport_ms", t.transport_ms}, {"correspondence_ms", t.correspondence_ms},
                      {"losses_ms", t.losses_ms}, {"refine_ms", t.refine_ms},
                      {"metrics_ms", t.metrics_ms}, {"total_ms", t.total_ms}};
  }
  return out;
}

}  // namespace scoopflow
