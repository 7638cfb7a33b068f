#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pipeline.hpp"
#include "synthetic.hpp"

namespace scoopflow {

/// Applies one `key = value` setting. Unknown keys and unparsable values
/// throw InvalidInput naming the key.
///
/// Pipeline keys: provider (xyz|pca|precomputed), pca_k, source_features,
/// target_features, gate_radius, epsilon, epsilon_offset, lambda,
/// sinkhorn_iters, k_s (integer or "all"), confidence (estimated|one),
/// alpha_conf, alpha_flow, loss_k_f, distance_mode (nn|chamfer),
/// smoothness_delta, refine (on|off), lambda_flow, k_f, steps, update_rate,
/// beta1, beta2, adam_epsilon, inference (auto|direct|chunked), chunk_size,
/// seed.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Synthetic keys: points, shape (uniform_box|planes|clustered_blobs),
/// extent (x,y,z), rotation_deg, translation (x,y,z), jitter, occlusion, seed.
void apply_setting(SyntheticSceneSpec& spec, std::string_view key, std::string_view value);

/// Every pipeline key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> list_settings(const PipelineConfig& cfg);

}  // namespace scoopflow
