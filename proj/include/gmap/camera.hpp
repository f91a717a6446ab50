#ifndef GMAP_CAMERA_HPP
#define GMAP_CAMERA_HPP

#include <Eigen/Geometry>

#include "gmap/geometry.hpp"

namespace gmap {

// Pinhole model. depth_scale divides raw 16-bit samples into meters.
struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;
    double depth_scale = 5000.0;

    void validate() const;
};

// Rigid transform from camera to world: p_world = R * p_cam + t.
struct Pose {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();  // (w, x, y, z)
    Vec3 translation = Vec3::Zero();

    void validate() const;

    Vec3 apply(const Vec3& p_cam) const { return rotation * p_cam + translation; }
};

// Back-projects pixel (u, v) at depth d (meters, camera z) into world space.
Vec3 unproject(const CameraIntrinsics& intr, const Pose& pose, double u, double v, double d);

}  // namespace gmap

#endif
