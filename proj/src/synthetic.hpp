#pragma once

#include <cstddef>
#include <cstdint>

#include "cloud.hpp"

namespace scoopflow {

enum class ShapeKind {
  UniformBox,      // uniform in an axis-aligned box
  Planes,          // ground plane plus two walls
  ClusteredBlobs,  // isotropic Gaussian clusters
};

struct SyntheticSceneSpec {
  std::size_t points = 2048;
  ShapeKind shape = ShapeKind::UniformBox;
  Vec3 extent = Vec3(4.0, 4.0, 2.0);  // box side lengths, meters
  double rotation_deg = 0.0;          // about a seeded random axis through the centroid
  Vec3 translation = Vec3::Zero();
  double jitter_sigma = 0.0;          // per-point Gaussian noise on the target
  double occlusion = 0.0;             // fraction of points removed from the target
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticScene {
  PointCloud source;  // carries the ground-truth flow
  PointCloud target;
};

/// Ground truth is the rigid motion of each source point, before jitter and
/// occlusion are applied to the target.
SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec);

}  // namespace scoopflow
