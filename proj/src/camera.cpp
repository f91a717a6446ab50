#include "gmap/camera.hpp"

#include <cmath>

#include "gmap/common.hpp"

namespace gmap {

void CameraIntrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ConfigError("focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height) {
        throw ConfigError("principal point outside image");
    }
    if (!(depth_scale > 0)) throw ConfigError("depth_scale must be positive");
}

void Pose::validate() const {
    if (std::fabs(rotation.norm() - 1.0) > 1e-6) {
        throw InvariantError("pose quaternion is not unit length");
    }
    if (std::fabs(rotation.toRotationMatrix().determinant() - 1.0) > 1e-6) {
        throw InvariantError("pose rotation is not proper");
    }
}

Vec3 unproject(const CameraIntrinsics& intr, const Pose& pose, double u, double v, double d) {
    if (!(d > 0)) throw InvariantError("invalid depth");
    Vec3 p_cam((u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d);
    return pose.apply(p_cam);
}

}  // namespace gmap
