#include "gmap/gaussian_map.hpp"

#include <algorithm>
#include <limits>

#include "gmap/common.hpp"

namespace gmap {

GaussianMap::GaussianMap(const MapParams& params)
    : params_(params), index_(params.node_max) {
    if (params_.quant.enabled) params_.quant.validate();
    if (!(params_.bbox_k > 0)) throw ConfigError("bbox_k must be positive");
    if (!(params_.tau_h_fuse > 0 && params_.tau_h_fuse < 1)) {
        throw ConfigError("tau_h_fuse must be in (0, 1)");
    }
}

namespace {

// The volatile stop keeps the narrowing from being batch-vectorized; gcc 11's
// SLP pass drops the odd tail pair of a 10-wide double->float->double chain.
double to_storage(double v) {
    volatile float narrowed = static_cast<float>(v);
    return static_cast<double>(narrowed);
}

}  // namespace

Gaussian3 GaussianMap::canonicalize(const Gaussian3& g) const {
    Gaussian3 out = g;
    if (params_.quant.enabled) {
        out = quantize_gaussian(out, params_.quant, &quant_stats_);
    } else {
        out.weight = to_storage(out.weight);
        out.mean = Vec3(to_storage(out.mean.x()), to_storage(out.mean.y()),
                        to_storage(out.mean.z()));
    }
    out.cov.xx = to_storage(out.cov.xx);
    out.cov.xy = to_storage(out.cov.xy);
    out.cov.xz = to_storage(out.cov.xz);
    out.cov.yy = to_storage(out.cov.yy);
    out.cov.yz = to_storage(out.cov.yz);
    out.cov.zz = to_storage(out.cov.zz);
    return out;
}

GaussianId GaussianMap::add(const Gaussian3& g) {
    Gaussian3 canon = canonicalize(g);
    canon.id = next_id_++;
    index_.insert(canon.id, bbox_of(canon, params_.bbox_k));
    store_.push_back(canon);
    counters_.gaussians_inserted++;
    return canon.id;
}

const Gaussian3& GaussianMap::at(GaussianId id) const {
    if (id == 0 || id > store_.size()) throw InvariantError("map: unknown Gaussian id");
    return store_[id - 1];
}

FusionReport GaussianMap::fuse_local(std::span<const Gaussian3> locals, double tau_h) {
    FusionReport report;
    struct Ranked {
        double dist2;
        GaussianId id;
        const Gaussian3* g;
    };
    std::vector<Ranked> ranked;

    for (const auto& local : locals) {
        std::vector<GaussianId> candidates = index_.search(bbox_of(local, params_.bbox_k));
        std::sort(candidates.begin(), candidates.end());

        ranked.clear();
        for (GaussianId id : candidates) {
            const Gaussian3& global = at(id);
            if (global.kind != local.kind) continue;
            ranked.push_back({(global.mean - local.mean).squaredNorm(), id, &global});
        }
        size_t cap = static_cast<size_t>(params_.fuse_candidate_cap);
        if (cap > 0 && ranked.size() > cap) {
            std::nth_element(ranked.begin(), ranked.begin() + static_cast<long>(cap),
                             ranked.end(), [](const Ranked& a, const Ranked& b) {
                                 return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.id < b.id;
                             });
            ranked.resize(cap);
            std::sort(ranked.begin(), ranked.end(),
                      [](const Ranked& a, const Ranked& b) { return a.id < b.id; });
        }

        GaussianId best_id = 0;
        double best_h2 = std::numeric_limits<double>::infinity();
        for (const Ranked& candidate : ranked) {
            counters_.fusion_ops++;
            double h2 = hellinger_sq(*candidate.g, local);
            if (h2 < best_h2) {  // ascending id scan makes ties pick the lowest id
                best_h2 = h2;
                best_id = candidate.id;
            }
        }

        if (best_id != 0 && best_h2 <= tau_h) {
            Gaussian3& global = store_[best_id - 1];
            Gaussian3 merged = canonicalize(moment_merge(global, local));
            merged.id = best_id;
            index_.remove(best_id);
            index_.insert(best_id, bbox_of(merged, params_.bbox_k));
            global = merged;
            counters_.gaussians_merged++;
            report.merged++;
        } else {
            add(local);
            report.inserted++;
        }
    }
    return report;
}

double GaussianMap::total_weight() const {
    double w = 0;
    for (const auto& g : store_) w += g.weight;
    return w;
}

std::size_t GaussianMap::count_kind(GaussianKind k) const {
    std::size_t n = 0;
    for (const auto& g : store_) {
        if (g.kind == k) ++n;
    }
    return n;
}

void GaussianMap::audit() const {
    if (store_.size() != index_.size()) {
        throw InvariantError("map audit: store/index size mismatch");
    }
    for (std::size_t i = 0; i < store_.size(); ++i) {
        const Gaussian3& g = store_[i];
        GaussianId id = static_cast<GaussianId>(i + 1);
        if (g.id != id) throw InvariantError("map audit: id field mismatch");
        if (!(g.weight >= 0)) throw InvariantError("map audit: negative weight");
        Aabb expect = bbox_of(g, params_.bbox_k);
        if (!(index_.entry_box(id) == expect)) {
            throw InvariantError("map audit: index box does not match stored Gaussian");
        }
        if (params_.quant.enabled) {
            Gaussian3 requant = quantize_gaussian(g, params_.quant, nullptr);
            if (requant.weight != g.weight || requant.mean != g.mean) {
                throw InvariantError("map audit: stored Gaussian not a quantization fixed point");
            }
        }
    }
    index_.audit();
}

}  // namespace gmap
