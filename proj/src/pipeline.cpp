#include "gmap/pipeline.hpp"

#include <chrono>

namespace gmap {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

FrameReport construct_frame(GaussianMap& map, const DepthFrame& frame,
                            const CameraIntrinsics& intr, const PipelineParams& params) {
    params.validate();
    frame.pose.validate();

    FrameReport report;
    report.frame_index = frame.frame_index;

    auto t0 = std::chrono::steady_clock::now();
    FrameSegmentation seg = segment_frame(frame, intr, params.seg);
    report.segment_ms = ms_since(t0);
    report.segments = static_cast<long>(seg.segments.size());
    report.occupied_locals = static_cast<long>(seg.occupied.size());

    t0 = std::chrono::steady_clock::now();
    BasisBatch batch;
    if (params.fgbg.mode == FgbgMode::baseline) {
        batch = bases_from_segments(seg.segments, frame.pose, intr, params.fgbg.stride,
                                    params.fgbg.k_intervals, params.fgbg.margin);
    } else {
        std::vector<Ray> rays;
        for (const auto& g : seg.occupied) {
            auto sampled = sample_rays_from_gaussian(g, frame.pose.translation,
                                                     params.fgbg.r_count);
            rays.insert(rays.end(), sampled.begin(), sampled.end());
        }
        batch = bases_from_rays(rays, params.fgbg.k_intervals, params.fgbg.margin);
    }
    report.fgbg_ms = ms_since(t0);
    report.free_bases = static_cast<long>(batch.bases.size());
    report.fgbg_rays = batch.rays_emitted;

    t0 = std::chrono::steady_clock::now();
    std::vector<Gaussian3> free_locals = refine_bases(batch.bases, params.fgbg.tau_h_refine);
    report.refine_ms = ms_since(t0);
    report.free_locals = static_cast<long>(free_locals.size());

    t0 = std::chrono::steady_clock::now();
    FusionReport occ = map.fuse_local(seg.occupied);
    FusionReport fre = map.fuse_local(free_locals);
    report.fuse_ms = ms_since(t0);
    report.occ_merged = occ.merged;
    report.occ_inserted = occ.inserted;
    report.free_merged = fre.merged;
    report.free_inserted = fre.inserted;

    auto& counters = map.counters();
    counters.frames++;
    counters.fgbg_rays += batch.rays_emitted;
    counters.segments += static_cast<std::uint64_t>(report.segments);
    counters.free_bases += static_cast<std::uint64_t>(report.free_bases);
    return report;
}

}  // namespace gmap
