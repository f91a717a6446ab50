#include "gmap/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gmap/common.hpp"

namespace gmap {

void SyntheticScene::recompute_bounds() {
    bounds = Aabb();
    for (const auto& b : boxes) {
        bounds.expand(Aabb(b.center - 0.5 * b.size, b.center + 0.5 * b.size));
    }
}

void SyntheticScene::validate() const {
    if (primitive_count() == 0) {
        throw ConfigError("scene has no primitives");
    }
    for (const auto& b : boxes) {
        if (!(b.size.minCoeff() > 0)) throw ConfigError("box with non-positive size");
    }
    for (const auto& p : planes) {
        if (!(p.normal.norm() > 0)) throw ConfigError("plane with zero normal");
    }
}

SyntheticScene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("scene: cannot open " + path);

    SyntheticScene scene;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "box") {
            BoxPrimitive b;
            if (!(ss >> b.center.x() >> b.center.y() >> b.center.z() >> b.size.x() >>
                  b.size.y() >> b.size.z())) {
                throw ParseError("scene: malformed box at line " + std::to_string(line_no) +
                                 " of " + path);
            }
            b.name = "box" + std::to_string(scene.boxes.size());
            scene.boxes.push_back(b);
        } else if (kind == "plane") {
            PlanePrimitive p;
            if (!(ss >> p.normal.x() >> p.normal.y() >> p.normal.z() >> p.offset)) {
                throw ParseError("scene: malformed plane at line " + std::to_string(line_no) +
                                 " of " + path);
            }
            p.name = "plane" + std::to_string(scene.planes.size());
            scene.planes.push_back(p);
        } else {
            throw ParseError("scene: unknown primitive '" + kind + "' at line " +
                             std::to_string(line_no) + " of " + path);
        }
    }
    scene.recompute_bounds();
    scene.validate();
    return scene;
}

void save_scene(const std::string& path, const SyntheticScene& scene) {
    std::ofstream out(path);
    if (!out) throw ParseError("scene: cannot write " + path);
    out.precision(17);
    for (const auto& b : scene.boxes) {
        out << "box " << b.center.x() << " " << b.center.y() << " " << b.center.z() << " "
            << b.size.x() << " " << b.size.y() << " " << b.size.z() << "\n";
    }
    for (const auto& p : scene.planes) {
        out << "plane " << p.normal.x() << " " << p.normal.y() << " " << p.normal.z() << " "
            << p.offset << "\n";
    }
}

namespace {

// Slab test with the unnormalized direction; the ray parameter equals
// camera-frame z because dir_cam.z == 1.
double intersect_box(const BoxPrimitive& b, const Vec3& origin, const Vec3& dir) {
    Vec3 lo = b.center - 0.5 * b.size;
    Vec3 hi = b.center + 0.5 * b.size;
    double tmin = 0.0;
    double tmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (dir[i] == 0.0) {
            if (origin[i] < lo[i] || origin[i] > hi[i]) return -1.0;
            continue;
        }
        double t1 = (lo[i] - origin[i]) / dir[i];
        double t2 = (hi[i] - origin[i]) / dir[i];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return -1.0;
    }
    return tmin > 0.0 ? tmin : -1.0;  // origin inside the box does not count as a hit
}

double intersect_plane(const PlanePrimitive& p, const Vec3& origin, const Vec3& dir) {
    double denom = p.normal.dot(dir);
    if (denom == 0.0) return -1.0;
    double t = (p.offset - p.normal.dot(origin)) / denom;
    return t > 1e-12 ? t : -1.0;
}

}  // namespace

DepthFrame render_synthetic(const SyntheticScene& scene, const Pose& pose,
                            const CameraIntrinsics& intr, double max_range) {
    if (!(max_range > 0)) throw ConfigError("max_range must be positive");
    intr.validate();
    pose.validate();

    DepthFrame frame;
    frame.width = intr.width;
    frame.height = intr.height;
    frame.depths.assign(static_cast<size_t>(intr.width) * intr.height, 0.0);
    frame.pose = pose;

    Mat3 rot = pose.rotation.toRotationMatrix();
    const Vec3& origin = pose.translation;

    for (int v = 0; v < intr.height; ++v) {
        for (int u = 0; u < intr.width; ++u) {
            Vec3 dir_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
            Vec3 dir = rot * dir_cam;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& b : scene.boxes) {
                double t = intersect_box(b, origin, dir);
                if (t > 0 && t < best) best = t;
            }
            for (const auto& p : scene.planes) {
                double t = intersect_plane(p, origin, dir);
                if (t > 0 && t < best) best = t;
            }
            if (best <= max_range) frame.at(v, u) = best;
        }
    }
    return frame;
}

}  // namespace gmap
