#ifndef GMAP_GAUSSIAN_MAP_HPP
#define GMAP_GAUSSIAN_MAP_HPP

#include <span>
#include <vector>

#include "gmap/gaussian.hpp"
#include "gmap/quantize.hpp"
#include "gmap/rtree.hpp"

namespace gmap {

struct MapParams {
    double bbox_k = kDefaultBboxScale;
    double tau_h_fuse = 0.4;
    int node_max = 8;
    // Hellinger evaluations per local are bounded to the nearest-by-mean
    // candidates, the way a fixed-latency fusion stage would bound them.
    int fuse_candidate_cap = 64;
    QuantConfig quant;
};

struct ConstructionCounters {
    std::uint64_t gaussians_inserted = 0;
    std::uint64_t gaussians_merged = 0;
    std::uint64_t fusion_ops = 0;  // Hellinger evaluations during fusion
    std::uint64_t frames = 0;
    std::uint64_t fgbg_rays = 0;
    std::uint64_t segments = 0;
    std::uint64_t free_bases = 0;
};

struct FusionReport {
    long merged = 0;
    long inserted = 0;
};

// The global map: id -> Gaussian store plus an R-tree over k-sigma bounding
// boxes. Stored means/weights/covariances are binary32-representable (the
// map's working precision); with quantization enabled, means and weights are
// fixed points of quantize_gaussian instead. Single writer; queries are
// read-only and must not run concurrently with construction.
class GaussianMap {
public:
    explicit GaussianMap(const MapParams& params = MapParams());

    // Fuses local Gaussians in order: each merges into the same-kind global
    // of minimum squared Hellinger distance among index candidates when that
    // minimum is within tau_h, and is inserted as a new entry otherwise.
    FusionReport fuse_local(std::span<const Gaussian3> locals, double tau_h);
    FusionReport fuse_local(std::span<const Gaussian3> locals) {
        return fuse_local(locals, params_.tau_h_fuse);
    }

    // Direct insertion (used by the loader and tests); canonicalizes storage
    // precision and indexes under the k-sigma box.
    GaussianId add(const Gaussian3& g);

    // Ids are dense 1..size() and never retired, so the store is an array in
    // ascending id order.
    const std::vector<Gaussian3>& store() const { return store_; }
    const Gaussian3& at(GaussianId id) const;
    const RTree& index() const { return index_; }
    RTree& index() { return index_; }
    const MapParams& params() const { return params_; }
    const ConstructionCounters& counters() const { return counters_; }
    ConstructionCounters& counters() { return counters_; }
    const QuantStats& quant_stats() const { return quant_stats_; }

    std::size_t size() const { return store_.size(); }
    double total_weight() const;
    std::size_t count_kind(GaussianKind k) const;

    // Rounds a Gaussian to the map's storage precision.
    Gaussian3 canonicalize(const Gaussian3& g) const;

    // Verifies store/index agreement: equal sizes, every stored id indexed
    // under exactly bbox_of(g, k). Throws InvariantError on violation.
    void audit() const;

private:
    MapParams params_;
    std::vector<Gaussian3> store_;
    RTree index_;
    GaussianId next_id_ = 1;
    ConstructionCounters counters_;
    mutable QuantStats quant_stats_;
};

}  // namespace gmap

#endif
