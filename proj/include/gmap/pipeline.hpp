#ifndef GMAP_PIPELINE_HPP
#define GMAP_PIPELINE_HPP

#include "gmap/depth_frame.hpp"
#include "gmap/free_space.hpp"
#include "gmap/gaussian_map.hpp"
#include "gmap/segmentation.hpp"

namespace gmap {

struct PipelineParams {
    SegParams seg;
    FgbgParams fgbg;

    void validate() const {
        seg.validate();
        fgbg.validate();
    }
};

struct FrameReport {
    int frame_index = 0;
    long segments = 0;
    long occupied_locals = 0;
    long free_bases = 0;
    long free_locals = 0;
    std::uint64_t fgbg_rays = 0;
    long occ_merged = 0, occ_inserted = 0;
    long free_merged = 0, free_inserted = 0;
    double segment_ms = 0, fgbg_ms = 0, refine_ms = 0, fuse_ms = 0;
};

// One frame through the full construction pipeline: scanline segmentation and
// cross-row fusion, free-basis generation in the configured mode, basis
// refinement, then fusion of occupied and free locals into the map.
FrameReport construct_frame(GaussianMap& map, const DepthFrame& frame,
                            const CameraIntrinsics& intr, const PipelineParams& params);

}  // namespace gmap

#endif
