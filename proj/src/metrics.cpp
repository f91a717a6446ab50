#include "gmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gmap/common.hpp"
#include "gmap/map_io.hpp"
#include "gmap/query.hpp"

namespace gmap {

std::vector<EvalSample> generate_eval_samples(std::span<const DepthFrame> frames,
                                              const CameraIntrinsics& intr, int per_ray,
                                              double surface_delta, std::uint64_t seed) {
    if (per_ray < 1) throw ConfigError("per_ray must be at least 1");
    if (!(surface_delta > 0)) throw ConfigError("surface_delta must be positive");

    SplitMix64 rng(seed);
    std::vector<EvalSample> samples;
    for (const auto& frame : frames) {
        Mat3 rot = frame.pose.rotation.toRotationMatrix();
        const Vec3& origin = frame.pose.translation;
        for (int v = 0; v < frame.height; ++v) {
            for (int u = 0; u < frame.width; ++u) {
                double d = frame.at(v, u);
                if (!(d > 0)) continue;
                Vec3 p_cam((u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d);
                Vec3 endpoint = rot * p_cam + origin;
                samples.push_back({endpoint, GaussianKind::occupied});

                // Free distances are drawn from [0, d - delta], d the depth
                // value, so labels stay clear of every surface the ray faces.
                double free_len = d - surface_delta;
                if (!(free_len > 0)) continue;
                Vec3 dir = (endpoint - origin).normalized();
                for (int k = 0; k < per_ray; ++k) {
                    double t = rng.uniform(0.0, free_len);
                    samples.push_back({origin + t * dir, GaussianKind::free});
                }
            }
        }
    }
    return samples;
}

double auc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw ConfigError("auc: size mismatch");
    std::size_t n_pos = 0;
    for (std::uint8_t b : labels) n_pos += b ? 1 : 0;
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ConfigError("auc: needs both occupied and free samples");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied score runs.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) rank_sum_pos += midrank;
        }
        i = j;
    }

    double n_pos_d = static_cast<double>(n_pos);
    double n_neg_d = static_cast<double>(n_neg);
    return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) / (n_pos_d * n_neg_d);
}

double evaluate_auc(const GaussianMap& map, std::span<const EvalSample> samples) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(samples.size());
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        scores.push_back(query_single(map, s.position).probability);
        labels.push_back(s.label == GaussianKind::occupied ? 1 : 0);
    }
    return auc_from_scores(scores, labels);
}

std::uint64_t map_size_bytes(const GaussianMap& map) { return serialized_map_bytes(map); }

std::string RunCounters::csv_header() {
    return "label,fgbg_rays,pdf_evals,merges,inserts,rtree_nodes_visited,"
           "rtree_bytes_touched,cache_hits,cache_misses,cache_backing_bytes,map_bytes,auc";
}

std::string RunCounters::to_csv_row() const {
    std::ostringstream ss;
    ss << label << "," << fgbg_rays << "," << pdf_evals << "," << merges << "," << inserts << ","
       << rtree_nodes_visited << "," << rtree_bytes_touched << "," << cache_hits << ","
       << cache_misses << "," << cache_backing_bytes << "," << map_bytes << "," << auc;
    return ss.str();
}

std::string RunCounters::to_kv(const std::string& prefix) const {
    std::ostringstream ss;
    ss << prefix << "label=" << label << "\n"
       << prefix << "fgbg_rays=" << fgbg_rays << "\n"
       << prefix << "pdf_evals=" << pdf_evals << "\n"
       << prefix << "merges=" << merges << "\n"
       << prefix << "inserts=" << inserts << "\n"
       << prefix << "rtree_nodes_visited=" << rtree_nodes_visited << "\n"
       << prefix << "rtree_bytes_touched=" << rtree_bytes_touched << "\n"
       << prefix << "cache_hits=" << cache_hits << "\n"
       << prefix << "cache_misses=" << cache_misses << "\n"
       << prefix << "cache_backing_bytes=" << cache_backing_bytes << "\n"
       << prefix << "map_bytes=" << map_bytes << "\n"
       << prefix << "auc=" << auc << "\n";
    return ss.str();
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double ProxyReport::fgbg_ray_ratio() const { return ratio(optimized.fgbg_rays, baseline.fgbg_rays); }
double ProxyReport::visit_ratio() const {
    return ratio(optimized.rtree_nodes_visited, baseline.rtree_nodes_visited);
}
double ProxyReport::bytes_ratio() const {
    return ratio(optimized.rtree_bytes_touched, baseline.rtree_bytes_touched);
}
double ProxyReport::map_size_ratio() const { return ratio(optimized.map_bytes, baseline.map_bytes); }

std::string ProxyReport::to_kv() const {
    std::ostringstream ss;
    ss << baseline.to_kv("baseline.") << optimized.to_kv("optimized.")
       << "fgbg_ray_ratio=" << fgbg_ray_ratio() << "\n"
       << "visit_ratio=" << visit_ratio() << "\n"
       << "bytes_ratio=" << bytes_ratio() << "\n"
       << "map_size_ratio=" << map_size_ratio() << "\n";
    return ss.str();
}

}  // namespace gmap
