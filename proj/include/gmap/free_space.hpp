#ifndef GMAP_FREE_SPACE_HPP
#define GMAP_FREE_SPACE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "gmap/camera.hpp"
#include "gmap/gaussian.hpp"
#include "gmap/segmentation.hpp"

namespace gmap {

// Free Gaussian bases: from segment rays (baseline) or directly from occupied
// Gaussians via representative rays (direct).
enum class FgbgMode { baseline, direct };

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 endpoint = Vec3::Zero();
    double weight = 0.0;
};

struct FreeBasis {
    Gaussian3 gaussian;  // kind = free
    int source_ray_count = 0;
};

struct FgbgParams {
    FgbgMode mode = FgbgMode::baseline;
    int k_intervals = 4;    // sub-segments per free span
    double margin = 0.2;    // meters held back from the obstacle surface
    int stride = 4;         // baseline: every stride-th segment pixel emits a ray
    int r_count = 5;        // direct: representative rays per occupied Gaussian (1, 3, 5)
    double tau_h_refine = 0.6;

    void validate() const;
};

struct BasisBatch {
    std::vector<FreeBasis> bases;
    std::uint64_t rays_emitted = 0;
};

// Moments of the uniform distribution on the segment [a, b].
Gaussian3 uniform_line_gaussian(const Vec3& a, const Vec3& b, double weight);

// Splits each ray's free span [origin, endpoint - margin*dir] into k equal
// sub-segments, one basis per sub-segment. Rays whose span is fully consumed
// by the margin produce nothing but still count as emitted.
BasisBatch bases_from_rays(std::span<const Ray> rays, int k_intervals, double margin);

// Baseline (segment) path: every stride-th member pixel of each segment emits
// a ray of weight `stride` from the sensor origin.
BasisBatch bases_from_segments(std::span<const Segment> segments, const Pose& pose,
                               const CameraIntrinsics& intr, int stride, int k_intervals,
                               double margin);

// Direct path: deterministic representative rays from the eigenstructure of
// an occupied Gaussian (mean, then mean +- sqrt(lambda_i) v_i for the top
// axes). Eigenvector sign is fixed by making the largest-magnitude component
// positive.
std::vector<Ray> sample_rays_from_gaussian(const Gaussian3& g, const Vec3& origin, int r_count);

// Greedy single-pass agglomeration in input order: a basis merges into the
// first output whose 2-sigma box intersects its own and whose squared
// Hellinger distance is at most tau_h; otherwise it starts a new output.
std::vector<Gaussian3> refine_bases(std::span<const FreeBasis> bases, double tau_h);

}  // namespace gmap

#endif
