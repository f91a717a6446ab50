#ifndef GMAP_SYNTHETIC_HPP
#define GMAP_SYNTHETIC_HPP

#include <string>
#include <variant>
#include <vector>

#include "gmap/depth_frame.hpp"

namespace gmap {

// Axis-aligned box given by center and full side lengths.
struct BoxPrimitive {
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Ones();
    std::string name;
};

// Infinite plane n . x = d (n need not be unit).
struct PlanePrimitive {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;
    std::string name;
};

struct SyntheticScene {
    std::vector<BoxPrimitive> boxes;
    std::vector<PlanePrimitive> planes;
    Aabb bounds;  // tight box over the box primitives

    size_t primitive_count() const { return boxes.size() + planes.size(); }
    void recompute_bounds();
    void validate() const;
};

// Plain-text scene description: one primitive per line,
//   box cx cy cz sx sy sz
//   plane nx ny nz d
// '#' comments skipped.
SyntheticScene load_scene(const std::string& path);
void save_scene(const std::string& path, const SyntheticScene& scene);

// Per-pixel ray cast. Depth is the camera-frame z of the nearest hit
// (z-depth, not Euclidean range); no hit within max_range gives 0.
DepthFrame render_synthetic(const SyntheticScene& scene, const Pose& pose,
                            const CameraIntrinsics& intr, double max_range);

}  // namespace gmap

#endif
