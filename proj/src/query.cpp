#include "gmap/query.hpp"

#include <algorithm>
#include <cmath>

#include "gmap/common.hpp"

namespace gmap {

void BatchConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
}

QueryResult regress(std::span<const Gaussian3> candidates, const Vec3& x, double prior_count) {
    if (!(prior_count > 0)) throw ConfigError("prior count must be positive");

    QueryResult r;
    if (candidates.empty()) {
        r.probability = 0.5;
        r.status = QueryStatus::unexplored;
        r.n_gaussians_evaluated = 0;
        return r;
    }
    double s_occ = 0.0;
    double s_free = 0.0;
    for (const auto& g : candidates) {
        double contribution = g.weight * gaussian_pdf(g, x);
        if (g.kind == GaussianKind::occupied) {
            s_occ += contribution;
        } else {
            s_free += contribution;
        }
    }
    r.probability = (s_occ + 0.5 * prior_count) / (s_occ + s_free + prior_count);
    r.status = QueryStatus::explored;
    r.n_gaussians_evaluated = static_cast<int>(candidates.size());
    return r;
}

namespace {

// Candidates for one coordinate out of an id-sorted search result, in
// ascending id order; the bbox filter keeps batch and single paths aligned.
std::vector<Gaussian3> gather(const GaussianMap& map, std::span<const GaussianId> sorted_ids,
                              const Vec3& x) {
    std::vector<Gaussian3> out;
    for (GaussianId id : sorted_ids) {
        const Gaussian3& g = map.at(id);
        if (bbox_of(g, map.params().bbox_k).contains(x)) out.push_back(g);
    }
    return out;
}

}  // namespace

QueryResult query_single(const GaussianMap& map, const Vec3& x, double prior_count) {
    std::vector<GaussianId> ids = map.index().search(Aabb::point(x));
    std::sort(ids.begin(), ids.end());
    return regress(gather(map, ids, x), x, prior_count);
}

std::vector<QueryResult> query_batch(const GaussianMap& map, std::span<const Vec3> coords,
                                     const BatchConfig& cfg, double prior_count) {
    cfg.validate();
    if (coords.empty()) throw ConfigError("batch query needs at least one coordinate");
    if (static_cast<int>(coords.size()) > cfg.batch_size) {
        throw ConfigError("batch query exceeds configured batch size");
    }

    Aabb enclosing;
    for (const auto& c : coords) enclosing.expand(c);

    std::vector<GaussianId> ids = map.index().search(enclosing);
    std::sort(ids.begin(), ids.end());

    std::vector<QueryResult> results;
    results.reserve(coords.size());
    for (const auto& c : coords) {
        results.push_back(regress(gather(map, ids, c), c, prior_count));
    }
    return results;
}

std::vector<Vec3> sample_trajectory(std::span<const Vec3> waypoints, double step) {
    if (waypoints.size() < 2) throw ConfigError("trajectory needs at least 2 waypoints");
    if (!(step > 0)) throw ConfigError("trajectory step must be positive");

    std::vector<Vec3> samples;
    for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
        const Vec3& a = waypoints[i];
        const Vec3& b = waypoints[i + 1];
        double len = (b - a).norm();
        if (!(len > 0)) continue;  // degenerate piece
        int pieces = static_cast<int>(std::ceil(len / step));
        int start = samples.empty() ? 0 : 1;  // joint already emitted
        for (int k = start; k <= pieces; ++k) {
            double t = static_cast<double>(k) / pieces;
            samples.push_back(k == pieces ? b : Vec3(a + t * (b - a)));
        }
    }
    return samples;
}

std::vector<QueryResult> query_trajectory(const GaussianMap& map, std::span<const Vec3> waypoints,
                                          double step, const BatchConfig& cfg,
                                          double prior_count) {
    cfg.validate();
    std::vector<Vec3> samples = sample_trajectory(waypoints, step);

    std::vector<QueryResult> results;
    results.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); i += cfg.batch_size) {
        size_t n = std::min(samples.size() - i, static_cast<size_t>(cfg.batch_size));
        auto chunk = query_batch(map, std::span<const Vec3>(samples.data() + i, n), cfg,
                                 prior_count);
        results.insert(results.end(), chunk.begin(), chunk.end());
    }
    return results;
}

}  // namespace gmap
