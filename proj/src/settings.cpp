#include "settings.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "error.hpp"

namespace scoopflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(ErrorCode::InvalidInput,
       "setting '" + std::string(key) + "': cannot use '" + std::string(value) + "' (" + expected + ")");
}

double parse_real(std::string_view key, std::string_view value) {
  value = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "expected a finite number");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  value = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "expected an unsigned integer");
  return out;
}

bool parse_switch(std::string_view key, std::string_view value) {
  value = trim(value);
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "expected on|off");
}

Vec3 parse_vec3(std::string_view key, std::string_view value) {
  Vec3 out;
  std::string_view rest = trim(value);
  for (int c = 0; c < 3; ++c) {
    const auto comma = rest.find(',');
    if ((c < 2) != (comma != std::string_view::npos)) bad_value(key, value, "expected x,y,z");
    out[c] = parse_real(key, rest.substr(0, comma));
    if (c < 2) rest = rest.substr(comma + 1);
  }
  return out;
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view raw) {
  key = trim(key);
  const std::string_view value = trim(raw);
  if (key == "provider") {
    if (value == "xyz") cfg.provider = FeatureKind::XyzCentered;
    else if (value == "pca") cfg.provider = FeatureKind::LocalPca;
    else if (value == "precomputed") cfg.provider = FeatureKind::Precomputed;
    else bad_value(key, value, "expected xyz|pca|precomputed");
  } else if (key == "pca_k") cfg.pca_k = parse_unsigned(key, value);
  else if (key == "source_features") cfg.source_features = std::string(value);
  else if (key == "target_features") cfg.target_features = std::string(value);
  else if (key == "gate_radius") cfg.gate_radius = parse_real(key, value);
  else if (key == "epsilon") cfg.transport.epsilon = parse_real(key, value);
  else if (key == "epsilon_offset") cfg.transport.epsilon_offset = parse_real(key, value);
  else if (key == "lambda") cfg.transport.lambda = parse_real(key, value);
  else if (key == "sinkhorn_iters") cfg.transport.iterations = static_cast<int>(parse_unsigned(key, value));
  else if (key == "k_s") {
    if (value == "all") cfg.k_s.reset();
    else cfg.k_s = parse_unsigned(key, value);
  } else if (key == "confidence") {
    if (value == "estimated") cfg.confidence = ConfidenceMode::Estimated;
    else if (value == "one") cfg.confidence = ConfidenceMode::One;
    else bad_value(key, value, "expected estimated|one");
  } else if (key == "alpha_conf") cfg.loss.alpha_conf = parse_real(key, value);
  else if (key == "alpha_flow") cfg.loss.alpha_flow = parse_real(key, value);
  else if (key == "loss_k_f") cfg.loss.k_f = parse_unsigned(key, value);
  else if (key == "distance_mode") {
    DistanceMode mode;
    if (value == "nn") mode = DistanceMode::NearestNeighbor;
    else if (value == "chamfer") mode = DistanceMode::Chamfer;
    else bad_value(key, value, "expected nn|chamfer");
    cfg.loss.distance_mode = cfg.refine.distance_mode = mode;
  } else if (key == "smoothness_delta") {
    cfg.loss.smoothness_delta = cfg.refine.smoothness_delta = parse_real(key, value);
  } else if (key == "refine") cfg.refine_enabled = parse_switch(key, value);
  else if (key == "lambda_flow") cfg.refine.lambda_flow = parse_real(key, value);
  else if (key == "k_f") cfg.refine.k_f = parse_unsigned(key, value);
  else if (key == "steps") cfg.refine.steps = parse_unsigned(key, value);
  else if (key == "update_rate") cfg.refine.update_rate = parse_real(key, value);
  else if (key == "beta1") cfg.refine.beta1 = parse_real(key, value);
  else if (key == "beta2") cfg.refine.beta2 = parse_real(key, value);
  else if (key == "adam_epsilon") cfg.refine.adam_epsilon = parse_real(key, value);
  else if (key == "inference") {
    if (value == "auto") cfg.inference = InferenceMode::Auto;
    else if (value == "direct") cfg.inference = InferenceMode::Direct;
    else if (value == "chunked") cfg.inference = InferenceMode::Chunked;
    else bad_value(key, value, "expected auto|direct|chunked");
  } else if (key == "chunk_size") cfg.chunk_size = parse_unsigned(key, value);
  else if (key == "seed") cfg.seed = parse_unsigned(key, value);
  else fail(ErrorCode::InvalidInput, "unknown setting '" + std::string(key) + "'");
}

void apply_setting(SyntheticSceneSpec& spec, std::string_view key, std::string_view raw) {
  key = trim(key);
  const std::string_view value = trim(raw);
  if (key == "points") spec.points = parse_unsigned(key, value);
  else if (key == "shape") {
    if (value == "uniform_box") spec.shape = ShapeKind::UniformBox;
    else if (value == "planes") spec.shape = ShapeKind::Planes;
    else if (value == "clustered_blobs") spec.shape = ShapeKind::ClusteredBlobs;
    else bad_value(key, value, "expected uniform_box|planes|clustered_blobs");
  } else if (key == "extent") spec.extent = parse_vec3(key, value);
  else if (key == "rotation_deg") spec.rotation_deg = parse_real(key, value);
  else if (key == "translation") spec.translation = parse_vec3(key, value);
  else if (key == "jitter") spec.jitter_sigma = parse_real(key, value);
  else if (key == "occlusion") spec.occlusion = parse_real(key, value);
  else if (key == "seed") spec.seed = parse_unsigned(key, value);
  else fail(ErrorCode::InvalidInput, "unknown synthetic setting '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> list_settings(const PipelineConfig& cfg) {
  static constexpr const char* providers[] = {"xyz", "pca", "precomputed"};
  static constexpr const char* inference[] = {"auto", "direct", "chunked"};
  return {
      {"provider", providers[static_cast<int>(cfg.provider)]},
      {"pca_k", std::to_string(cfg.pca_k)},
      {"source_features", cfg.source_features},
      {"target_features", cfg.target_features},
      {"gate_radius", fmt_real(cfg.gate_radius)},
      {"epsilon", fmt_real(cfg.transport.epsilon)},
      {"epsilon_offset", fmt_real(cfg.transport.epsilon_offset)},
      {"lambda", fmt_real(cfg.transport.lambda)},
      {"sinkhorn_iters", std::to_string(cfg.transport.iterations)},
      {"k_s", cfg.k_s ? std::to_string(*cfg.k_s) : "all"},
      {"confidence", cfg.confidence == ConfidenceMode::One ? "one" : "estimated"},
      {"alpha_conf", fmt_real(cfg.loss.alpha_conf)},
      {"alpha_flow", fmt_real(cfg.loss.alpha_flow)},
      {"loss_k_f", std::to_string(cfg.loss.k_f)},
      {"distance_mode", cfg.loss.distance_mode == DistanceMode::Chamfer ? "chamfer" : "nn"},
      {"smoothness_delta", fmt_real(cfg.loss.smoothness_delta)},
      {"refine", cfg.refine_enabled ? "on" : "off"},
      {"lambda_flow", fmt_real(cfg.refine.lambda_flow)},
      {"k_f", std::to_string(cfg.refine.k_f)},
      {"steps", std::to_string(cfg.refine.steps)},
      {"update_rate", fmt_real(cfg.refine.update_rate)},
      {"beta1", fmt_real(cfg.refine.beta1)},
      {"beta2", fmt_real(cfg.refine.beta2)},
      {"adam_epsilon", fmt_real(cfg.refine.adam_epsilon)},
      {"inference", inference[static_cast<int>(cfg.inference)]},
      {"chunk_size", std::to_string(cfg.chunk_size)},
      {"seed", std::to_string(cfg.seed)},
  };
}

}  // namespace scoopflow
