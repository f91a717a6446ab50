#ifndef GMAP_TRAJECTORY_HPP
#define GMAP_TRAJECTORY_HPP

#include <optional>
#include <string>
#include <vector>

#include "gmap/camera.hpp"

namespace gmap {

struct TimedPose {
    double timestamp = 0.0;
    Pose pose;
};

// Parses "timestamp tx ty tz qx qy qz qw" records, one per line, '#' comments
// skipped. Quaternions are renormalized when |norm - 1| <= 1e-3, rejected
// otherwise. Output is sorted by timestamp.
std::vector<TimedPose> load_trajectory(const std::string& path);

void save_trajectory(const std::string& path, const std::vector<TimedPose>& poses);

// Nearest-timestamp pose within the window (seconds); nullopt when none.
std::optional<Pose> associate_pose(const std::vector<TimedPose>& traj, double timestamp,
                                   double window = 0.02);

}  // namespace gmap

#endif
