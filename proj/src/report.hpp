#pragma once

#include <json.hpp>

#include "eval.hpp"
#include "objective.hpp"
#include "pipeline.hpp"

namespace scoopflow {

/// {"epe", "as", "ar", "out", "n"}
nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const LossReport& report);

/// Per-scene record: metrics (when ground truth was present), losses and,
/// optionally, stage timings in milliseconds.
nlohmann::json scene_record(const ScenePairResult& result, bool include_timings);

}  // namespace scoopflow
