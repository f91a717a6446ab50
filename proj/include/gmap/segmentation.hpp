#ifndef GMAP_SEGMENTATION_HPP
#define GMAP_SEGMENTATION_HPP

#include <vector>

#include "gmap/depth_frame.hpp"
#include "gmap/gaussian.hpp"

namespace gmap {

// Slope feedback of the scanline pass: refit after every pixel, or reuse the
// value from four accepted pixels earlier (single-cycle approximation).
enum class SlopeMode { exact, delayed4 };

struct SegParams {
    double tau_depth = 0.05;   // absolute residual gate, meters
    double tau_rel = 0.02;     // relative gate; effective gate is max(tau_depth, tau_rel * d)
    double tau_slope = 0.1;    // cross-row slope compatibility, depth per column
    double tau_fuse = 0.1;     // cross-row mean-depth gap, meters
    int n_min = 8;             // minimum points per emitted Gaussian
    SlopeMode slope_mode = SlopeMode::exact;

    void validate() const;
};

// One near-linear depth run within a row. Sufficient statistics accumulate
// unprojected world points.
struct Segment {
    int row = 0;
    int col_start = 0;
    int col_end = 0;  // inclusive
    long n = 0;
    Vec3 sum = Vec3::Zero();
    SymMat3 sum_outer;
    double depth_first = 0;
    double depth_last = 0;
    double slope = 0;       // least-squares depth-per-column of the run
    double depth_sum = 0;   // for the cross-row mean-depth gate

    double mean_depth() const { return depth_sum / static_cast<double>(n); }
};

// Cross-row fusion state for one obstacle.
struct Cluster {
    long n = 0;
    Vec3 sum = Vec3::Zero();
    SymMat3 sum_outer;
    int row_last = -1;
    int col_start_last = 0;
    int col_end_last = 0;
    double mean_depth_last = 0;
    double slope_last = 0;
    bool active = true;
};

// Left-to-right single pass over one image row. Invalid pixels and residuals
// beyond the gate close the open segment.
std::vector<Segment> scanline_segment(const DepthFrame& frame, const CameraIntrinsics& intr,
                                      int row, const SegParams& params);

// Merges one row of segments into the active clusters; clusters silent for a
// full row are retired into `retired`. Segments join the first active cluster
// (in column order) with overlapping columns and compatible depth and slope.
void fuse_segments(std::vector<Cluster>& active, std::vector<Cluster>& retired,
                   const std::vector<Segment>& row_segments, int row, const SegParams& params);

// Retired clusters with at least n_min points become occupied Gaussians.
std::vector<Gaussian3> clusters_to_gaussians(const std::vector<Cluster>& retired,
                                             const SegParams& params);

// Drives a whole frame: all rows, fusion, final retirement.
struct FrameSegmentation {
    std::vector<Segment> segments;        // all segments, row order
    std::vector<Gaussian3> occupied;      // local occupied Gaussians
    long clusters_formed = 0;
    long clusters_dropped = 0;  // below n_min
};

FrameSegmentation segment_frame(const DepthFrame& frame, const CameraIntrinsics& intr,
                                const SegParams& params);

}  // namespace gmap

#endif
