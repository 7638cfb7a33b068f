#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "error.hpp"
#include "features.hpp"
#include "flowinit.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "settings.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"
#include "transport.hpp"

using namespace scoopflow;
using testutil::code_of;

namespace {

// Small scenes need neighborhoods smaller than the cloud.
PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.provider = FeatureKind::XyzCentered;
  cfg.k_s = 1;
  cfg.loss.k_f = 8;
  cfg.refine.k_f = 8;
  cfg.refine_enabled = false;
  return cfg;
}

PointCloud random_cloud(std::uint64_t seed, std::size_t n, bool zero_flow = false) {
  std::mt19937_64 rng(seed);
  auto pts = oracle::random_points(rng, n, 2.0);
  if (!zero_flow) return PointCloud(pts);
  return PointCloud(pts, FlowField(n, Vec3::Zero()));
}

SyntheticScene synthetic(std::size_t points, std::uint64_t seed) {
  SyntheticSceneSpec spec;
  spec.points = points;
  spec.rotation_deg = 3.0;
  spec.translation = Vec3(0.3, 0.1, 0.0);
  spec.jitter_sigma = 0.01;
  spec.seed = seed;
  return generate_synthetic(spec);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("identical clouds") {
  auto x = random_cloud(1, 20, true);
  auto r = estimate(x, x, small_config());
  REQUIRE(r.initial_metrics);
  CHECK(r.initial_metrics->epe < 1e-9);
  CHECK_FALSE(r.refined_flow);
  CHECK_FALSE(r.refined_metrics);
}

TEST_CASE("rigid translation") {
  auto x = random_cloud(2, 20);
  std::vector<Vec3> moved(x.points());
  for (auto& p : moved) p += Vec3(0, 0, 1);
  PointCloud xs(x.points(), FlowField(20, Vec3(0, 0, 1)));
  auto r = estimate(xs, PointCloud(moved), small_config());
  for (const auto& f : r.initial_flow) CHECK((f - Vec3(0, 0, 1)).norm() < 1e-6);
  CHECK(r.initial_metrics->epe < 1e-6);
}

TEST_CASE("zero refinement steps keep the flow") {
  auto s = synthetic(200, 3);
  auto cfg = small_config();
  cfg.refine_enabled = true;
  cfg.refine.steps = 0;
  auto r = estimate(s.source, s.target, cfg);
  REQUIRE(r.refined_flow);
  CHECK(*r.refined_flow == r.initial_flow);
  CHECK(r.refine_objective.size() == 1);

  cfg.refine_enabled = false;
  auto off = estimate(s.source, s.target, cfg);
  CHECK(off.final_flow() == r.final_flow());
}

TEST_CASE("chunk plan arithmetic") {
  for (std::size_t n : {1u, 7u, 64u}) {
    auto plan = plan_chunks(n + 1, n, 11);
    CHECK(plan.chunks() == 2);
    CHECK(plan.order.size() == 2 * n);
    CHECK(std::count(plan.is_padding.begin(), plan.is_padding.end(), true) == static_cast<long>(n - 1));
    std::set<std::size_t> real;
    for (std::size_t i = 0; i < plan.order.size(); ++i) {
      CHECK(plan.order[i] < n + 1);
      if (!plan.is_padding[i]) real.insert(plan.order[i]);
    }
    CHECK(real.size() == n + 1);
  }
  auto exact = plan_chunks(50, 50, 3);
  CHECK(exact.chunks() == 1);
  std::vector<std::size_t> ident(50);
  std::iota(ident.begin(), ident.end(), std::size_t{0});
  CHECK(exact.order == ident);
  CHECK(plan_chunks(5000, 2048, 0).chunks() == 3);
  CHECK(plan_chunks(100, 8, 1).order == plan_chunks(100, 8, 1).order);
  CHECK(plan_chunks(100, 8, 1).order != plan_chunks(100, 8, 2).order);
}

TEST_CASE("single chunk equals direct") {
  auto s = synthetic(300, 4);
  PipelineConfig cfg;
  cfg.chunk_size = 300;
  cfg.refine.steps = 10;
  auto direct = estimate(s.source, s.target, cfg);
  auto chunked = estimate_chunked(s.source, s.target, cfg);
  CHECK(chunked.chunks == 1);
  CHECK(chunked.initial_flow == direct.initial_flow);
  CHECK(chunked.confidence == direct.confidence);
  CHECK(*chunked.refined_flow == *direct.refined_flow);
  CHECK(chunked.refine_objective == direct.refine_objective);
}

TEST_CASE("chunked output gathers real members only") {
  auto s = synthetic(130, 5);
  auto cfg = small_config();
  cfg.provider = FeatureKind::LocalPca;
  cfg.pca_k = 8;
  cfg.k_s = 4;
  cfg.chunk_size = 40;
  cfg.seed = 9;
  auto r = estimate_chunked(s.source, s.target, cfg);
  CHECK(r.chunks == 4);
  REQUIRE(r.initial_flow.size() == 130);

  // Recompute every chunk by hand and compare per real member.
  auto plan = plan_chunks(130, 40, 9);
  auto fy = extract_features(LocalPca{8}, s.target);
  for (std::size_t c = 0; c < plan.chunks(); ++c) {
    std::span<const std::size_t> members(plan.order.data() + c * 40, 40);
    auto xs = s.source.subset(members);
    auto cost = cost_matrix(extract_features(LocalPca{8}, xs), fy, xs, s.target);
    auto corr = correspond(xs, s.target, cost, sinkhorn(cost, cfg.transport), {4});
    for (std::size_t m = 0; m < 40; ++m) {
      if (plan.is_padding[c * 40 + m]) continue;
      CHECK(r.initial_flow[members[m]] == corr.initial_flow[m]);
      CHECK(r.confidence[members[m]] == corr.confidence[m]);
    }
  }
}

TEST_CASE("auto inference dispatch") {
  auto s = synthetic(100, 6);
  auto cfg = small_config();
  cfg.chunk_size = 100;
  CHECK(run_scene(s.source, s.target, cfg).chunks == 1);
  cfg.chunk_size = 60;
  CHECK(run_scene(s.source, s.target, cfg).chunks == 2);
  cfg.inference = InferenceMode::Direct;
  CHECK(run_scene(s.source, s.target, cfg).chunks == 1);
}

TEST_CASE("stage timings add up") {
  auto s = synthetic(400, 7);
  PipelineConfig cfg;
  cfg.refine.steps = 20;
  auto r = estimate(s.source, s.target, cfg);
  const auto& t = r.timings;
  CHECK(t.total_ms > 0.0);
  CHECK(std::fabs(t.stage_sum() - t.total_ms) <= 0.05 * t.total_ms);
  CHECK(t.refine_ms > 0.0);
}

TEST_CASE("ablation switches") {
  auto s = synthetic(200, 8);
  PipelineConfig base;
  base.refine.steps = 10;
  base.loss.k_f = 16;
  base.refine.k_f = 16;
  auto ref = estimate(s.source, s.target, base);

  auto all = base;
  apply_setting(all, "k_s", "all");
  auto a = estimate(s.source, s.target, all);
  CHECK(a.initial_flow != ref.initial_flow);

  auto one = base;
  apply_setting(one, "confidence", "one");
  apply_setting(one, "alpha_conf", "0");
  auto b = estimate(s.source, s.target, one);
  for (double p : b.confidence) CHECK(p == 1.0);
  CHECK(b.loss_start.conf == 0.0);

  auto nosmooth = base;
  apply_setting(nosmooth, "alpha_flow", "0");
  auto c = estimate(s.source, s.target, nosmooth);
  CHECK(c.loss_start.total == doctest::Approx(c.loss_start.dist + 0.1 * c.loss_start.conf).epsilon(1e-14));
}

TEST_CASE("k_s larger than the target") {
  auto s = synthetic(30, 9);
  auto cfg = small_config();
  cfg.k_s = 64;
  CHECK(code_of([&] { estimate(s.source, s.target, cfg); }) == ErrorCode::InvalidInput);
}

TEST_CASE("refine external") {
  auto s = synthetic(150, 10);
  auto cfg = small_config();
  cfg.refine.steps = 0;
  auto exact = refine_external(s.source, s.target, s.source.flow(), cfg);
  REQUIRE(exact.refined_metrics);
  CHECK(exact.refined_metrics->epe == 0.0);
  CHECK(exact.refined_metrics->as_pct == 100.0);
  CHECK(exact.refined_metrics->out_pct == 0.0);
  for (double p : exact.confidence) CHECK(p == 1.0);

  SyntheticSceneSpec spec;
  spec.points = 150;
  spec.translation = Vec3(0.2, 0.0, -0.1);
  auto t = generate_synthetic(spec);
  PipelineConfig defaults;
  auto r = refine_external(t.source, t.target, FlowField(150, Vec3::Zero()), defaults);
  CHECK(r.refine_objective.back() < r.refine_objective.front());

  CHECK(code_of([&] { refine_external(t.source, t.target, FlowField(149, Vec3::Zero()), cfg); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("precomputed features") {
  auto dir = testutil::scratch_dir("test_pipeline");
  auto x = random_cloud(11, 20, true);
  auto fx = extract_features(XyzCentered{}, x);
  save_features((dir / "x.sff").string(), fx);
  auto cfg = small_config();
  cfg.provider = FeatureKind::Precomputed;
  CHECK(code_of([&] { estimate(x, x, cfg); }) == ErrorCode::InvalidInput);
  cfg.source_features = (dir / "x.sff").string();
  cfg.target_features = (dir / "x.sff").string();
  auto r = estimate(x, x, cfg);
  CHECK(r.initial_metrics->epe < 1e-6);

  auto bigger = random_cloud(12, 21);
  CHECK(code_of([&] { estimate(bigger, x, cfg); }) == ErrorCode::ShapeMismatch);
  cfg.inference = InferenceMode::Chunked;
  cfg.chunk_size = 8;
  auto chunked = estimate(x, x, cfg);
  CHECK(chunked.initial_flow.size() == 20);
}

TEST_CASE("settings round trip") {
  PipelineConfig cfg;
  apply_setting(cfg, "epsilon", "0.05");
  apply_setting(cfg, "k_s", "all");
  apply_setting(cfg, "refine", "off");
  apply_setting(cfg, "distance_mode", "chamfer");
  CHECK(cfg.transport.epsilon == 0.05);
  CHECK_FALSE(cfg.k_s);
  CHECK_FALSE(cfg.refine_enabled);
  CHECK(cfg.refine.distance_mode == DistanceMode::Chamfer);
  PipelineConfig copy;
  for (const auto& [k, v] : list_settings(cfg)) apply_setting(copy, k, v);
  CHECK(list_settings(copy) == list_settings(cfg));
  CHECK(code_of([&] { apply_setting(cfg, "steps", "-3"); }) == ErrorCode::InvalidInput);
  CHECK(code_of([&] { apply_setting(cfg, "epsilon", "abc"); }) == ErrorCode::InvalidInput);
}

TEST_CASE("scene record") {
  auto s = synthetic(100, 12);
  auto cfg = small_config();
  cfg.refine_enabled = true;
  cfg.refine.steps = 5;
  auto r = estimate(s.source, s.target, cfg);
  auto j = scene_record(r, false);
  CHECK(j.contains("initial_metrics"));
  CHECK(j.contains("refined_metrics"));
  CHECK_FALSE(j.contains("timings"));
  CHECK(scene_record(r, true).contains("timings"));
}

}  // TEST_SUITE
