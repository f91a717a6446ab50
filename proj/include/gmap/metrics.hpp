#ifndef GMAP_METRICS_HPP
#define GMAP_METRICS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmap/depth_frame.hpp"
#include "gmap/gaussian_map.hpp"

namespace gmap {

struct EvalSample {
    Vec3 position = Vec3::Zero();
    GaussianKind label = GaussianKind::free;
};

// Per valid pixel ray: one occupied sample at the endpoint and per_ray free
// samples at seeded-uniform distances in [0, d - surface_delta] along the
// ray. Rays shorter than surface_delta contribute no free samples.
std::vector<EvalSample> generate_eval_samples(std::span<const DepthFrame> frames,
                                              const CameraIntrinsics& intr, int per_ray,
                                              double surface_delta, std::uint64_t seed);

// ROC area via the Mann-Whitney rank statistic with midrank tie handling.
// labels[i] nonzero = positive (occupied). Throws when only one label present.
double auc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Scores every sample with query_single and reduces to AUC.
double evaluate_auc(const GaussianMap& map, std::span<const EvalSample> samples);

// Serialized map size (header + records + CRC), without serializing.
std::uint64_t map_size_bytes(const GaussianMap& map);

// Counter bundle for one run; the reproducible stand-in for the silicon's
// energy numbers.
struct RunCounters {
    std::string label;
    std::uint64_t fgbg_rays = 0;
    std::uint64_t pdf_evals = 0;
    std::uint64_t merges = 0;
    std::uint64_t inserts = 0;
    std::uint64_t rtree_nodes_visited = 0;
    std::uint64_t rtree_bytes_touched = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t cache_backing_bytes = 0;
    std::uint64_t map_bytes = 0;
    double auc = 0.0;

    static std::string csv_header();
    std::string to_csv_row() const;
    std::string to_kv(const std::string& prefix = "") const;
};

// Baseline-vs-optimized ratios (optimized / baseline; < 1 means cheaper).
struct ProxyReport {
    RunCounters baseline;
    RunCounters optimized;

    double fgbg_ray_ratio() const;
    double visit_ratio() const;
    double bytes_ratio() const;
    double map_size_ratio() const;
    std::string to_kv() const;
};

}  // namespace gmap

#endif
