#include "scoopflow/scoopflow.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "cloud.hpp"
#include "cloud_io.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "settings.hpp"
#include "synthetic.hpp"

struct sf_cloud {
  scoopflow::PointCloud cloud;
};
struct sf_config {
  scoopflow::PipelineConfig cfg;
};
struct sf_synth_spec {
  scoopflow::SyntheticSceneSpec spec;
};
struct sf_result {
  scoopflow::ScenePairResult result;
};

namespace {

using namespace scoopflow;

thread_local std::string g_last_error;

sf_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return SF_ERR_INVALID_INPUT;
    case ErrorCode::ParseError: return SF_ERR_PARSE;
    case ErrorCode::DegenerateFeature: return SF_ERR_DEGENERATE_FEATURE;
    case ErrorCode::ShapeMismatch: return SF_ERR_SHAPE_MISMATCH;
    case ErrorCode::DegenerateTransport: return SF_ERR_DEGENERATE_TRANSPORT;
    case ErrorCode::NumericalDivergence: return SF_ERR_NUMERICAL_DIVERGENCE;
    case ErrorCode::IoError: return SF_ERR_IO;
  }
  return SF_ERR_INTERNAL;
}

template <class Fn>
sf_status guarded(Fn&& fn) {
  try {
    fn();
    return SF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SF_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidInput, what);
}

std::vector<Vec3> unpack(const double* data, std::size_t n) {
  std::vector<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Vec3(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
  return out;
}

void pack(const std::vector<Vec3>& v, double* out, std::size_t capacity) {
  require(out != nullptr, "output buffer is null");
  if (capacity < v.size() * 3) {
    fail(ErrorCode::InvalidInput, "output buffer holds " + std::to_string(capacity) + " doubles, need " +
                                      std::to_string(v.size() * 3));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int c = 0; c < 3; ++c) out[3 * i + c] = v[i][c];
  }
}

void write_string(const std::string& s, char* buf, std::size_t capacity, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf == nullptr || capacity < s.size() + 1) {
    fail(ErrorCode::InvalidInput, "string buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

const FlowField& pick_flow(const ScenePairResult& r, sf_flow_kind kind) {
  switch (kind) {
    case SF_FLOW_INITIAL: return r.initial_flow;
    case SF_FLOW_REFINED:
      require(r.refined_flow.has_value(), "refinement did not run for this result");
      return *r.refined_flow;
    case SF_FLOW_FINAL: return r.final_flow();
  }
  fail(ErrorCode::InvalidInput, "unknown flow kind");
}

sf_metric_report to_c(const MetricReport& m) { return {m.epe, m.as_pct, m.ar_pct, m.out_pct, m.n_evaluated}; }

template <class Fn>
sf_status make_result(sf_result** out, Fn&& fn) {
  return guarded([&] {
    require(out != nullptr, "result out-pointer is null");
    *out = new sf_result{fn()};
  });
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.1.0"; }

const char* sf_status_name(sf_status status) {
  switch (status) {
    case SF_OK: return "OK";
    case SF_ERR_INVALID_INPUT: return "InvalidInput";
    case SF_ERR_PARSE: return "ParseError";
    case SF_ERR_DEGENERATE_FEATURE: return "DegenerateFeature";
    case SF_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case SF_ERR_DEGENERATE_TRANSPORT: return "DegenerateTransport";
    case SF_ERR_NUMERICAL_DIVERGENCE: return "NumericalDivergence";
    case SF_ERR_IO: return "IoError";
    case SF_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_cloud_create(const double* xyz, size_t n, const double* gt_flow, sf_cloud** out) {
  return guarded([&] {
    require(xyz != nullptr && out != nullptr, "sf_cloud_create: null argument");
    std::optional<FlowField> flow;
    if (gt_flow) flow = unpack(gt_flow, n);
    *out = new sf_cloud{PointCloud(unpack(xyz, n), std::move(flow))};
  });
}

sf_status sf_cloud_load(const char* path, sf_cloud** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "sf_cloud_load: null argument");
    *out = new sf_cloud{load_cloud(path)};
  });
}

sf_status sf_cloud_save(const sf_cloud* cloud, const char* path, int ascii) {
  return guarded([&] {
    require(cloud != nullptr && path != nullptr, "sf_cloud_save: null argument");
    CloudFormat fmt = format_from_path(path);
    if (ascii) fmt = CloudFormat::PlyAscii;
    else if (fmt == CloudFormat::Auto) fmt = CloudFormat::Sfb;
    save_cloud(path, cloud->cloud, fmt);
  });
}

void sf_cloud_free(sf_cloud* cloud) { delete cloud; }

size_t sf_cloud_size(const sf_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

int sf_cloud_has_flow(const sf_cloud* cloud) { return cloud && cloud->cloud.has_flow() ? 1 : 0; }

sf_status sf_cloud_points(const sf_cloud* cloud, double* out, size_t capacity) {
  return guarded([&] {
    require(cloud != nullptr, "sf_cloud_points: null cloud");
    pack(cloud->cloud.points(), out, capacity);
  });
}

sf_status sf_cloud_flow(const sf_cloud* cloud, double* out, size_t capacity) {
  return guarded([&] {
    require(cloud != nullptr, "sf_cloud_flow: null cloud");
    pack(cloud->cloud.flow(), out, capacity);
  });
}

sf_status sf_cloud_attach_flow_file(sf_cloud* cloud, const char* path) {
  return guarded([&] {
    require(cloud != nullptr && path != nullptr, "sf_cloud_attach_flow_file: null argument");
    cloud->cloud.set_flow(load_flow(path));
  });
}

sf_status sf_config_create(sf_config** out) {
  return guarded([&] {
    require(out != nullptr, "sf_config_create: null argument");
    *out = new sf_config{};
  });
}

sf_status sf_config_clone(const sf_config* cfg, sf_config** out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "sf_config_clone: null argument");
    *out = new sf_config{cfg->cfg};
  });
}

void sf_config_free(sf_config* cfg) { delete cfg; }

sf_status sf_config_set(sf_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && value != nullptr, "sf_config_set: null argument");
    apply_setting(cfg->cfg, key, value);
  });
}

sf_status sf_config_get(const sf_config* cfg, const char* key, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr, "sf_config_get: null argument");
    for (const auto& [k, v] : list_settings(cfg->cfg)) {
      if (k == key) {
        write_string(v, buf, capacity, needed);
        return;
      }
    }
    fail(ErrorCode::InvalidInput, std::string("unknown setting '") + key + "'");
  });
}

sf_status sf_config_validate(const sf_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "sf_config_validate: null config");
    cfg->cfg.validate();
  });
}

sf_status sf_estimate(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg, sf_result** out) {
  return make_result(out, [&] {
    require(source && target && cfg, "sf_estimate: null argument");
    return run_scene(source->cloud, target->cloud, cfg->cfg);
  });
}

sf_status sf_estimate_direct(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg,
                             sf_result** out) {
  return make_result(out, [&] {
    require(source && target && cfg, "sf_estimate_direct: null argument");
    return estimate(source->cloud, target->cloud, cfg->cfg);
  });
}

sf_status sf_estimate_chunked(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg,
                              sf_result** out) {
  return make_result(out, [&] {
    require(source && target && cfg, "sf_estimate_chunked: null argument");
    return estimate_chunked(source->cloud, target->cloud, cfg->cfg);
  });
}

sf_status sf_refine_external(const sf_cloud* source, const sf_cloud* target, const double* flow, size_t n,
                             const sf_config* cfg, sf_result** out) {
  return make_result(out, [&] {
    require(source && target && flow && cfg, "sf_refine_external: null argument");
    return refine_external(source->cloud, target->cloud, unpack(flow, n), cfg->cfg);
  });
}

sf_status sf_refine_external_file(const sf_cloud* source, const sf_cloud* target, const char* flow_path,
                                  const sf_config* cfg, sf_result** out) {
  return make_result(out, [&] {
    require(source && target && flow_path && cfg, "sf_refine_external_file: null argument");
    return refine_external(source->cloud, target->cloud, load_flow(flow_path), cfg->cfg);
  });
}

void sf_result_free(sf_result* result) { delete result; }

size_t sf_result_size(const sf_result* result) { return result ? result->result.initial_flow.size() : 0; }

int sf_result_refined(const sf_result* result) { return result && result->result.refined_flow ? 1 : 0; }

sf_status sf_result_flow(const sf_result* result, sf_flow_kind kind, double* out, size_t capacity) {
  return guarded([&] {
    require(result != nullptr, "sf_result_flow: null result");
    pack(pick_flow(result->result, kind), out, capacity);
  });
}

sf_status sf_result_confidence(const sf_result* result, double* out, size_t capacity) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "sf_result_confidence: null argument");
    const auto& p = result->result.confidence;
    require(capacity >= p.size(), "sf_result_confidence: buffer too small");
    std::copy(p.begin(), p.end(), out);
  });
}

sf_status sf_result_metrics(const sf_result* result, sf_flow_kind kind, sf_metric_report* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "sf_result_metrics: null argument");
    const auto& r = result->result;
    const std::optional<MetricReport>* m = &r.initial_metrics;
    if (kind == SF_FLOW_REFINED || (kind == SF_FLOW_FINAL && r.refined_metrics)) m = &r.refined_metrics;
    require(m->has_value(), "no metrics of that kind (missing ground truth or refinement)");
    *out = to_c(**m);
  });
}

sf_status sf_result_losses(const sf_result* result, int at_end, sf_loss_report* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "sf_result_losses: null argument");
    const auto& r = result->result;
    require(!at_end || r.loss_end.has_value(), "refinement did not run for this result");
    const LossReport& l = at_end ? *r.loss_end : r.loss_start;
    *out = {l.dist, l.conf, l.flow_smooth, l.total};
  });
}

sf_status sf_result_save_flow(const sf_result* result, sf_flow_kind kind, const char* path) {
  return guarded([&] {
    require(result != nullptr && path != nullptr, "sf_result_save_flow: null argument");
    save_flow(path, pick_flow(result->result, kind));
  });
}

sf_status sf_result_json(const sf_result* result, int include_timings, char* buf, size_t capacity,
                         size_t* needed) {
  return guarded([&] {
    require(result != nullptr, "sf_result_json: null result");
    write_string(scene_record(result->result, include_timings != 0).dump(), buf, capacity, needed);
  });
}

sf_status sf_metrics(const double* pred, const double* gt, size_t n, sf_metric_report* out) {
  return guarded([&] {
    require(pred && gt && out, "sf_metrics: null argument");
    *out = to_c(metrics(unpack(pred, n), unpack(gt, n)));
  });
}

sf_status sf_synth_create(sf_synth_spec** out) {
  return guarded([&] {
    require(out != nullptr, "sf_synth_create: null argument");
    *out = new sf_synth_spec{};
  });
}

void sf_synth_free(sf_synth_spec* spec) { delete spec; }

sf_status sf_synth_set(sf_synth_spec* spec, const char* key, const char* value) {
  return guarded([&] {
    require(spec && key && value, "sf_synth_set: null argument");
    apply_setting(spec->spec, key, value);
  });
}

sf_status sf_synth_generate(const sf_synth_spec* spec, sf_cloud** source, sf_cloud** target) {
  return guarded([&] {
    require(spec && source && target, "sf_synth_generate: null argument");
    SyntheticScene scene = generate_synthetic(spec->spec);
    auto* s = new sf_cloud{std::move(scene.source)};
    try {
      *target = new sf_cloud{std::move(scene.target)};
    } catch (...) {
      delete s;
      throw;
    }
    *source = s;
  });
}

}  // extern "C"
