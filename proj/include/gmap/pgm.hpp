#ifndef GMAP_PGM_HPP
#define GMAP_PGM_HPP

#include <string>

#include "gmap/depth_frame.hpp"

namespace gmap {

// Reads a binary 16-bit PGM ("P5", maxval 65535, big-endian samples) and
// converts raw values to meters via intr.depth_scale. Raw 0 stays 0 (invalid).
// The pose is left at identity. Parse errors name the offending byte offset.
DepthFrame load_depth_pgm(const std::string& path, const CameraIntrinsics& intr);

// Inverse of load_depth_pgm: raw = round(depth * depth_scale).
void save_depth_pgm(const std::string& path, const DepthFrame& frame,
                    const CameraIntrinsics& intr);

}  // namespace gmap

#endif
