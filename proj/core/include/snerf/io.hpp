#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "snerf/depthfusion.hpp"
#include "snerf/image.hpp"

namespace snerf::io {

namespace fs = std::filesystem;

// Every reader throws IoError on missing or malformed files.

/// Little-endian float PFM. Scalar maps store invalid pixels as NaN.
void write_pfm(const fs::path& path, const ScalarMap& map);
ScalarMap read_pfm_scalar(const fs::path& path);
DepthMap read_depth(const fs::path& path);
ConfidenceMap read_confidence(const fs::path& path);

/// Flow fields as 3-channel PFM (du, dv, valid).
void write_flow(const fs::path& path, const FlowField& flow);
FlowField read_flow(const fs::path& path);

/// 8-bit sRGB-agnostic PNG (values are quantized linearly).
void write_png(const fs::path& path, const RgbImage& img);
RgbImage read_png(const fs::path& path);
/// Masks as 8-bit grayscale, 0 or 255.
void write_mask(const fs::path& path, const Mask& mask);
Mask read_mask(const fs::path& path);

/// ASCII PLY with x y z per vertex. The cloud's frame pose is stored in a
/// "comment frame" line as 12 row-major floats.
void write_ply(const fs::path& path, const PointCloud& cloud);
PointCloud read_ply(const fs::path& path);

/// One 0/1 label per line.
void write_labels(const fs::path& path, const std::vector<std::uint8_t>& labels);
std::vector<std::uint8_t> read_labels(const fs::path& path);

std::string format_pose(const Pose& p);
/// Parses 12 comma-separated row-major floats. Throws InvalidArgument.
Pose parse_pose(const std::string& text);

/// Text header of key=value lines followed by a float32 blob.
struct Checkpoint {
  std::map<std::string, std::string> header;
  std::vector<float> blob;
};

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
/// Verifies the blob length and checksum; throws IoError on corruption.
Checkpoint read_checkpoint(const fs::path& path);

std::string read_text(const fs::path& path);
/// Writes via a temporary file and rename.
void write_text(const fs::path& path, const std::string& text);

}  // namespace snerf::io
