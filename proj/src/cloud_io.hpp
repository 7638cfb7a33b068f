#pragma once

#include <string>

#include "cloud.hpp"

namespace scoopflow {

enum class CloudFormat {
  Auto,       // by extension, falling back to magic bytes
  Sfb,        // "SFB1" little-endian float32
  PlyAscii,
  PlyBinary,  // binary_little_endian 1.0
};

/// Parses a cloud from memory. Ground-truth flow is read from flow_x/y/z
/// vertex properties (PLY) or channels 4-6 (SFB) when present.
PointCloud parse_cloud(std::string_view bytes, CloudFormat format);
PointCloud load_cloud(const std::string& path, CloudFormat format = CloudFormat::Auto);

std::string serialize_cloud(const PointCloud& cloud, CloudFormat format);
void save_cloud(const std::string& path, const PointCloud& cloud,
                CloudFormat format = CloudFormat::Auto);

/// Flow files are 3-channel SFB with one vector per source point.
FlowField load_flow(const std::string& path);
void save_flow(const std::string& path, const FlowField& flow);

CloudFormat format_from_path(const std::string& path);

}  // namespace scoopflow
