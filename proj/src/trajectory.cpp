#include "gmap/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gmap/common.hpp"

namespace gmap {

std::vector<TimedPose> load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("trajectory: cannot open " + path);

    std::vector<TimedPose> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ss(line);
        double t, tx, ty, tz, qx, qy, qz, qw;
        if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
            throw ParseError("trajectory: non-numeric field at line " + std::to_string(line_no) +
                             " of " + path);
        }
        double norm = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
        if (std::fabs(norm - 1.0) > 1e-3) {
            throw ParseError("trajectory: quaternion norm " + std::to_string(norm) +
                             " at line " + std::to_string(line_no) + " of " + path +
                             " is not normalizable");
        }
        TimedPose tp;
        tp.timestamp = t;
        tp.pose.rotation = Eigen::Quaterniond(qw / norm, qx / norm, qy / norm, qz / norm);
        tp.pose.translation = Vec3(tx, ty, tz);
        out.push_back(tp);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; });
    return out;
}

void save_trajectory(const std::string& path, const std::vector<TimedPose>& poses) {
    std::ofstream out(path);
    if (!out) throw ParseError("trajectory: cannot write " + path);
    out.precision(17);
    for (const auto& tp : poses) {
        const auto& q = tp.pose.rotation;
        const auto& t = tp.pose.translation;
        out << tp.timestamp << " " << t.x() << " " << t.y() << " " << t.z() << " "
            << q.x() << " " << q.y() << " " << q.z() << " " << q.w() << "\n";
    }
}

std::optional<Pose> associate_pose(const std::vector<TimedPose>& traj, double timestamp,
                                   double window) {
    if (traj.empty()) return std::nullopt;
    auto it = std::lower_bound(traj.begin(), traj.end(), timestamp,
                               [](const TimedPose& a, double t) { return a.timestamp < t; });
    const TimedPose* best = nullptr;
    if (it != traj.end()) best = &*it;
    if (it != traj.begin()) {
        const TimedPose* prev = &*(it - 1);
        if (!best || std::fabs(prev->timestamp - timestamp) <= std::fabs(best->timestamp - timestamp)) {
            best = prev;
        }
    }
    if (!best || std::fabs(best->timestamp - timestamp) > window) return std::nullopt;
    return best->pose;
}

}  // namespace gmap
