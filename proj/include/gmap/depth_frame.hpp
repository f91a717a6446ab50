#ifndef GMAP_DEPTH_FRAME_HPP
#define GMAP_DEPTH_FRAME_HPP

#include <vector>

#include "gmap/camera.hpp"

namespace gmap {

// One posed depth observation. Depths are meters, row-major, 0 = invalid.
struct DepthFrame {
    int width = 0;
    int height = 0;
    std::vector<double> depths;
    Pose pose;
    int frame_index = 0;

    double at(int row, int col) const { return depths[static_cast<size_t>(row) * width + col]; }
    double& at(int row, int col) { return depths[static_cast<size_t>(row) * width + col]; }
};

}  // namespace gmap

#endif
