// scoopflow command-line harness. Talks to the library only through the C API.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keyvalue.hpp"
#include "scoopflow/scoopflow.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSceneFailure = 1;
constexpr int kExitConfigError = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneError : std::runtime_error {
  SceneError(sf_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  sf_status status;
};

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using CloudPtr = std::unique_ptr<sf_cloud, Deleter<sf_cloud, sf_cloud_free>>;
using ConfigPtr = std::unique_ptr<sf_config, Deleter<sf_config, sf_config_free>>;
using ResultPtr = std::unique_ptr<sf_result, Deleter<sf_result, sf_result_free>>;
using SynthPtr = std::unique_ptr<sf_synth_spec, Deleter<sf_synth_spec, sf_synth_free>>;

void check(sf_status s, const std::string& context) {
  if (s != SF_OK) throw SceneError(s, context + ": " + sf_status_name(s) + ": " + sf_last_error());
}

void check_config(sf_status s, const std::string& context) {
  if (s != SF_OK) throw ConfigError(context + ": " + sf_last_error());
}

CloudPtr load_cloud(const std::string& path) {
  sf_cloud* raw = nullptr;
  check(sf_cloud_load(path.c_str(), &raw), "loading " + path);
  return CloudPtr(raw);
}

std::string result_json(const sf_result* r, bool timings) {
  size_t needed = 0;
  sf_result_json(r, timings ? 1 : 0, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(sf_result_json(r, timings ? 1 : 0, buf.data(), buf.size(), &needed), "serializing result");
  buf.resize(needed - 1);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::pair<std::string, std::string> split_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

ConfigPtr make_config(const scoopflow_cli::Entries& entries, const std::vector<std::string>& overrides) {
  sf_config* raw = nullptr;
  check_config(sf_config_create(&raw), "creating config");
  ConfigPtr cfg(raw);
  for (const auto& [k, v] : entries) check_config(sf_config_set(cfg.get(), k.c_str(), v.c_str()), "setting " + k);
  for (const auto& kv : overrides) {
    const auto [k, v] = split_assignment(kv);
    check_config(sf_config_set(cfg.get(), k.c_str(), v.c_str()), "--set " + k);
  }
  check_config(sf_config_validate(cfg.get()), "config");
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- run

struct SceneEntry {
  std::string name;
  std::string source, target, gt;
  std::string source_features, target_features;
};

struct SceneOutcome {
  bool ok = false;
  json record;
  std::optional<sf_metric_report> initial, final_metrics;
  sf_loss_report loss_start{}, loss_end{};
  bool refined = false;
  size_t n_source = 0, n_target = 0;
  double total_ms = 0.0;
};

std::vector<SceneEntry> read_scenes(const scoopflow_cli::KeyValueDoc& doc, const fs::path& base) {
  std::vector<SceneEntry> scenes;
  auto resolve = [&](const std::string& p) { return p.empty() ? p : (base / p).lexically_normal().string(); };
  for (const auto& [table, entries] : doc.tables) {
    if (table != "scene") throw ConfigError("unknown table [[" + table + "]]");
    SceneEntry s;
    for (const auto& [k, v] : entries) {
      if (k == "name") s.name = v;
      else if (k == "source") s.source = resolve(v);
      else if (k == "target") s.target = resolve(v);
      else if (k == "gt") s.gt = resolve(v);
      else if (k == "source_features") s.source_features = resolve(v);
      else if (k == "target_features") s.target_features = resolve(v);
      else throw ConfigError("unknown scene key '" + k + "'");
    }
    if (s.source.empty() || s.target.empty()) throw ConfigError("every [[scene]] needs source and target");
    for (const auto* p : {&s.source, &s.target, &s.gt, &s.source_features, &s.target_features}) {
      if (!p->empty() && !fs::exists(*p)) throw ConfigError("missing file " + *p);
    }
    if (s.name.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "scene_%04zu", scenes.size());
      s.name = buf;
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

SceneOutcome process_scene(const SceneEntry& scene, const sf_config* base_cfg, const fs::path& out_dir) {
  SceneOutcome outcome;
  outcome.record = {{"scene", scene.name}, {"source", scene.source}, {"target", scene.target}};
  try {
    CloudPtr source = load_cloud(scene.source);
    CloudPtr target = load_cloud(scene.target);
    if (!scene.gt.empty()) check(sf_cloud_attach_flow_file(source.get(), scene.gt.c_str()), "loading " + scene.gt);
    outcome.n_source = sf_cloud_size(source.get());
    outcome.n_target = sf_cloud_size(target.get());

    sf_config* raw_cfg = nullptr;
    check(sf_config_clone(base_cfg, &raw_cfg), "config");
    ConfigPtr cfg(raw_cfg);
    if (!scene.source_features.empty()) check(sf_config_set(cfg.get(), "source_features", scene.source_features.c_str()), "config");
    if (!scene.target_features.empty()) check(sf_config_set(cfg.get(), "target_features", scene.target_features.c_str()), "config");

    sf_result* raw = nullptr;
    check(sf_estimate(source.get(), target.get(), cfg.get(), &raw), "estimating " + scene.name);
    ResultPtr result(raw);

    const fs::path flow_path = out_dir / (scene.name + ".flow.sfb");
    check(sf_result_save_flow(result.get(), SF_FLOW_FINAL, flow_path.string().c_str()), "writing flow");

    json rec = json::parse(result_json(result.get(), true));
    outcome.total_ms = rec["timings"]["total_ms"].get<double>();
    outcome.refined = sf_result_refined(result.get()) != 0;
    sf_metric_report m{};
    if (sf_result_metrics(result.get(), SF_FLOW_INITIAL, &m) == SF_OK) outcome.initial = m;
    if (sf_result_metrics(result.get(), SF_FLOW_FINAL, &m) == SF_OK) outcome.final_metrics = m;
    check(sf_result_losses(result.get(), 0, &outcome.loss_start), "losses");
    outcome.loss_end = outcome.loss_start;
    if (outcome.refined) check(sf_result_losses(result.get(), 1, &outcome.loss_end), "losses");

    outcome.record.update(rec);
    outcome.record["status"] = "ok";
    outcome.record["flow_file"] = flow_path.filename().string();
    outcome.ok = true;
  } catch (const SceneError& e) {
    outcome.record["status"] = "error";
    outcome.record["error_code"] = sf_status_name(e.status);
    outcome.record["error"] = e.what();
  }
  write_text_atomic(out_dir / (scene.name + ".json"), outcome.record.dump(2) + "\n");
  return outcome;
}

json mean_metrics(const std::vector<SceneOutcome>& outcomes, bool final_kind) {
  double epe = 0, as = 0, ar = 0, out = 0;
  size_t count = 0, n = 0;
  for (const auto& o : outcomes) {
    const auto& m = final_kind ? o.final_metrics : o.initial;
    if (!o.ok || !m) continue;
    epe += m->epe; as += m->as_pct; ar += m->ar_pct; out += m->out_pct; n += m->n;
    ++count;
  }
  if (count == 0) return nullptr;
  const double c = static_cast<double>(count);
  return {{"epe", epe / c}, {"as", as / c}, {"ar", ar / c}, {"out", out / c}, {"scenes", count}, {"n", n}};
}

int cmd_run(const std::string& manifest_path, const std::string& out, const std::vector<std::string>& overrides,
            unsigned workers) {
  const auto doc = scoopflow_cli::load_key_values(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  const auto scenes = read_scenes(doc, base);
  if (scenes.empty()) throw ConfigError("InvalidInput: manifest lists no [[scene]] entries");
  ConfigPtr cfg = make_config(doc.top, overrides);

  const fs::path out_dir(out);
  fs::create_directories(out_dir);

  std::vector<SceneOutcome> outcomes(scenes.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < scenes.size(); i = next++) outcomes[i] = process_scene(scenes[i], cfg.get(), out_dir);
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(scenes.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < pool; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::string csv = "scene,status,n_source,n_target,refined,epe,as,ar,out,init_epe,init_as,init_ar,init_out,"
                    "loss_start,loss_end,total_ms\n";
  size_t failed = 0;
  for (size_t i = 0; i < scenes.size(); ++i) {
    const auto& o = outcomes[i];
    failed += o.ok ? 0 : 1;
    csv += scenes[i].name + "," + (o.ok ? "ok" : "error") + "," + std::to_string(o.n_source) + "," +
           std::to_string(o.n_target) + "," + (o.refined ? "1" : "0");
    for (const auto* m : {&o.final_metrics, &o.initial}) {
      if (*m) csv += "," + fmt((*m)->epe) + "," + fmt((*m)->as_pct) + "," + fmt((*m)->ar_pct) + "," + fmt((*m)->out_pct);
      else csv += ",,,,";
    }
    if (o.ok) csv += "," + fmt(o.loss_start.total) + "," + fmt(o.loss_end.total) + "," + fmt(o.total_ms) + "\n";
    else csv += ",,,\n";
  }
  write_text_atomic(out_dir / "scenes.csv", csv);

  json config_echo = json::object();
  for (const char* key : {"provider", "gate_radius", "epsilon", "epsilon_offset", "lambda", "sinkhorn_iters", "k_s",
                          "confidence", "alpha_conf", "alpha_flow", "loss_k_f", "distance_mode", "refine",
                          "lambda_flow", "k_f", "steps", "update_rate", "inference", "chunk_size", "seed"}) {
    char buf[256];
    size_t needed = 0;
    if (sf_config_get(cfg.get(), key, buf, sizeof buf, &needed) == SF_OK) config_echo[key] = buf;
  }
  json summary = {{"scenes", scenes.size()},
                  {"failed", failed},
                  {"mean_initial_metrics", mean_metrics(outcomes, false)},
                  {"mean_metrics", mean_metrics(outcomes, true)},
                  {"config", config_echo}};
  write_text_atomic(out_dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "processed " << scenes.size() << " scene(s), " << failed << " failed";
  if (!summary["mean_metrics"].is_null()) std::cout << ", mean EPE " << summary["mean_metrics"]["epe"].get<double>();
  std::cout << "\n";
  return failed == 0 ? kExitOk : kExitSceneFailure;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string& spec_path, const std::string& out, const std::vector<std::string>& overrides) {
  const auto doc = scoopflow_cli::load_key_values(spec_path);
  if (!doc.tables.empty()) throw ConfigError(spec_path + ": synthetic specs take no tables");
  sf_synth_spec* raw = nullptr;
  check_config(sf_synth_create(&raw), "synthetic spec");
  SynthPtr spec(raw);
  for (const auto& [k, v] : doc.top) check_config(sf_synth_set(spec.get(), k.c_str(), v.c_str()), "setting " + k);
  for (const auto& kv : overrides) {
    const auto [k, v] = split_assignment(kv);
    check_config(sf_synth_set(spec.get(), k.c_str(), v.c_str()), "--set " + k);
  }

  sf_cloud *src_raw = nullptr, *tgt_raw = nullptr;
  check_config(sf_synth_generate(spec.get(), &src_raw, &tgt_raw), "generating scene");
  CloudPtr source(src_raw), target(tgt_raw);

  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  check(sf_cloud_save(source.get(), (out_dir / "source.sfb").string().c_str(), 0), "writing source");
  check(sf_cloud_save(target.get(), (out_dir / "target.sfb").string().c_str(), 0), "writing target");
  write_text_atomic(out_dir / "manifest.toml",
                    "# generated by scoopflow gen\n[[scene]]\nname = \"synthetic\"\nsource = \"source.sfb\"\n"
                    "target = \"target.sfb\"\n");
  std::cout << "wrote " << sf_cloud_size(source.get()) << " source / " << sf_cloud_size(target.get())
            << " target points to " << out_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- refine-ext

int cmd_refine_ext(const std::string& flow, const std::string& source_path, const std::string& target_path,
                   const std::string& gt, const std::string& out, const std::vector<std::string>& overrides) {
  ConfigPtr cfg = make_config({}, overrides);
  try {
    CloudPtr source = load_cloud(source_path);
    CloudPtr target = load_cloud(target_path);
    if (!gt.empty()) check(sf_cloud_attach_flow_file(source.get(), gt.c_str()), "loading " + gt);
    sf_result* raw = nullptr;
    check(sf_refine_external_file(source.get(), target.get(), flow.c_str(), cfg.get(), &raw), "refining");
    ResultPtr result(raw);
    const fs::path out_dir(out);
    fs::create_directories(out_dir);
    check(sf_result_save_flow(result.get(), SF_FLOW_REFINED, (out_dir / "refined.flow.sfb").string().c_str()),
          "writing flow");
    json rec = json::parse(result_json(result.get(), true));
    write_text_atomic(out_dir / "result.json", rec.dump(2) + "\n");
    sf_metric_report m{};
    if (sf_result_metrics(result.get(), SF_FLOW_REFINED, &m) == SF_OK) {
      std::cout << "refined EPE " << m.epe << " AS " << m.as_pct << " AR " << m.ar_pct << " Out " << m.out_pct << "\n";
    }
    return kExitOk;
  } catch (const SceneError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSceneFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scoopflow: optimal-transport scene flow with run-time refinement"};
  app.require_subcommand(1);

  std::vector<std::string> overrides;
  std::string manifest, out, spec, flow, source, target, gt;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Estimate flow for every scene pair in a manifest");
  run->add_option("--manifest", manifest, "Manifest file (key = value config plus [[scene]] tables)")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  run->add_option("--workers", workers, "Concurrent scenes")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Write a synthetic scene pair with ground-truth flow");
  gen->add_option("--spec", spec, "Synthetic scene spec (key = value)")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--set", overrides, "Override a spec key (key=value), repeatable");

  auto* ext = app.add_subcommand("refine-ext", "Refine an externally estimated flow with confidence 1");
  ext->add_option("--flow", flow, "Initial flow (3-channel SFB)")->required();
  ext->add_option("--source", source, "Source cloud")->required();
  ext->add_option("--target", target, "Target cloud")->required();
  ext->add_option("--gt", gt, "Ground-truth flow (3-channel SFB)");
  ext->add_option("--out", out, "Output directory")->required();
  ext->add_option("--set", overrides, "Override a config key (key=value), repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(manifest, out, overrides, workers);
    if (*gen) return cmd_gen(spec, out, overrides);
    if (*ext) return cmd_refine_ext(flow, source, target, gt, out, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const scoopflow_cli::KeyValueError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const SceneError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSceneFailure;
  }
  return kExitConfigError;
}
