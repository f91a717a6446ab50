#include "gmap/free_space.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "gmap/common.hpp"

namespace gmap {

void FgbgParams::validate() const {
    if (k_intervals < 1) throw ConfigError("k_intervals must be at least 1");
    if (margin < 0) throw ConfigError("margin must be nonnegative");
    if (stride < 1) throw ConfigError("stride must be at least 1");
    if (r_count != 1 && r_count != 3 && r_count != 5) {
        throw ConfigError("r_count must be 1, 3, or 5");
    }
    if (!(tau_h_refine > 0) || !(tau_h_refine < 1)) {
        throw ConfigError("tau_h_refine must be in (0, 1)");
    }
}

Gaussian3 uniform_line_gaussian(const Vec3& a, const Vec3& b, double weight) {
    Vec3 d = b - a;
    double len = d.norm();
    if (!(len > 1e-9)) throw InvariantError("degenerate line segment");
    if (!(weight > 0)) throw InvariantError("line gaussian weight must be positive");
    Vec3 dir = d / len;

    Gaussian3 g;
    g.kind = GaussianKind::free;
    g.weight = weight;
    g.mean = 0.5 * (a + b);
    SymMat3 cov = SymMat3::outer(dir) * (len * len / 12.0);
    cov.xx += kCovEpsilon;
    cov.yy += kCovEpsilon;
    cov.zz += kCovEpsilon;
    g.cov = cov;
    return g;
}

BasisBatch bases_from_rays(std::span<const Ray> rays, int k_intervals, double margin) {
    if (k_intervals < 1) throw ConfigError("k_intervals must be at least 1");
    if (margin < 0) throw ConfigError("margin must be nonnegative");

    BasisBatch out;
    for (const auto& ray : rays) {
        out.rays_emitted++;
        Vec3 d = ray.endpoint - ray.origin;
        double len = d.norm();
        if (!(len > 0)) throw InvariantError("zero-length ray");
        double free_len = len - margin;
        if (!(free_len > 1e-9)) continue;
        Vec3 dir = d / len;

        double sub = free_len / k_intervals;
        double w_sub = ray.weight * (sub / free_len);
        for (int i = 0; i < k_intervals; ++i) {
            Vec3 a = ray.origin + dir * (sub * i);
            Vec3 b = ray.origin + dir * (sub * (i + 1));
            FreeBasis basis;
            basis.gaussian = uniform_line_gaussian(a, b, w_sub);
            basis.source_ray_count = 1;
            out.bases.push_back(basis);
        }
    }
    return out;
}

BasisBatch bases_from_segments(std::span<const Segment> segments, const Pose& pose,
                               const CameraIntrinsics& intr, int stride, int k_intervals,
                               double margin) {
    if (stride < 1) throw ConfigError("stride must be at least 1");

    Mat3 rot = pose.rotation.toRotationMatrix();
    const Vec3& origin = pose.translation;

    std::vector<Ray> rays;
    for (const auto& seg : segments) {
        // Member pixels are the contiguous valid run [col_start, col_end];
        // linear depth interpolation stands in for the per-pixel values the
        // streaming pass no longer has.
        for (int col = seg.col_start; col <= seg.col_end; col += stride) {
            double d = seg.n > 1 ? seg.depth_first + seg.slope * (col - seg.col_start)
                                 : seg.depth_first;
            if (!(d > 0)) continue;
            Vec3 p_cam((col - intr.cx) * d / intr.fx, (seg.row - intr.cy) * d / intr.fy, d);
            Ray r;
            r.origin = origin;
            r.endpoint = rot * p_cam + origin;
            r.weight = static_cast<double>(stride);
            rays.push_back(r);
        }
    }
    return bases_from_rays(rays, k_intervals, margin);
}

std::vector<Ray> sample_rays_from_gaussian(const Gaussian3& g, const Vec3& origin, int r_count) {
    if (r_count != 1 && r_count != 3 && r_count != 5) {
        throw ConfigError("r_count must be 1, 3, or 5");
    }
    if (g.kind != GaussianKind::occupied) {
        throw InvariantError("representative rays require an occupied Gaussian");
    }

    std::vector<Ray> rays;
    double w = g.weight / r_count;
    rays.push_back({origin, g.mean, w});
    if (r_count == 1) return rays;

    Mat3 cov = g.cov.to_matrix();
    cov.diagonal().array() += kCovEpsilon;
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    if (es.info() != Eigen::Success) throw InvariantError("degenerate covariance");

    // Eigenvalues ascend; take the largest (r_count - 1) / 2 axes.
    int axes = (r_count - 1) / 2;
    for (int k = 0; k < axes; ++k) {
        int idx = 2 - k;
        double lambda = es.eigenvalues()(idx);
        Vec3 v = es.eigenvectors().col(idx);
        int arg = 0;
        for (int i = 1; i < 3; ++i) {
            if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
        }
        if (v[arg] < 0) v = -v;
        Vec3 offset = std::sqrt(std::max(lambda, 0.0)) * v;
        rays.push_back({origin, g.mean + offset, w});
        rays.push_back({origin, g.mean - offset, w});
    }
    return rays;
}

namespace {

// Uniform hash grid over output bounding boxes. Cell lists may hold stale
// entries after an output grows; candidates are re-checked against the real
// box, so the grid only has to be a superset.
class OutputGrid {
public:
    explicit OutputGrid(double cell) : cell_(cell) {}

    void cover(const Aabb& box, int index) {
        each_cell(box, [&](std::int64_t key) {
            auto& bucket = cells_[key];
            if (bucket.empty() || bucket.back() != index) bucket.push_back(index);
        });
    }

    // Streams candidate indices in ascending output order (k-way merge of the
    // per-cell lists, which are appended in creation order). Returns at most
    // `limit` distinct indices.
    void candidates(const Aabb& box, size_t limit, std::vector<int>& out) const {
        lists_.clear();
        each_cell(box, [&](std::int64_t key) {
            auto it = cells_.find(key);
            if (it != cells_.end() && !it->second.empty()) {
                lists_.push_back({it->second.data(), it->second.data() + it->second.size()});
            }
        });
        out.clear();
        int last = -1;
        while (out.size() < limit) {
            int best_val = 0;
            bool found = false;
            for (auto& range : lists_) {
                while (range.first != range.second && *range.first <= last) ++range.first;
                if (range.first == range.second) continue;
                if (!found || *range.first < best_val) {
                    best_val = *range.first;
                    found = true;
                }
            }
            if (!found) break;
            last = best_val;
            out.push_back(last);
        }
    }

private:
    template <typename Fn>
    void each_cell(const Aabb& box, Fn&& fn) const {
        for (std::int64_t x = lower(box.lo.x()); x <= lower(box.hi.x()); ++x) {
            for (std::int64_t y = lower(box.lo.y()); y <= lower(box.hi.y()); ++y) {
                for (std::int64_t z = lower(box.lo.z()); z <= lower(box.hi.z()); ++z) {
                    fn(((x * 73856093) ^ (y * 19349663) ^ (z * 83492791)));
                }
            }
        }
    }

    std::int64_t lower(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

    double cell_;
    std::unordered_map<std::int64_t, std::vector<int>> cells_;
    mutable std::vector<std::pair<const int*, const int*>> lists_;
};

// Bounded work per basis, the fixed-latency analogue of the fusion stage:
// scan at most this many grid candidates and spend at most kRefineHellingerCap
// Hellinger tests before opening a new output.
constexpr size_t kRefineScanCap = 512;
constexpr int kRefineHellingerCap = 64;

}  // namespace

std::vector<Gaussian3> refine_bases(std::span<const FreeBasis> bases, double tau_h) {
    if (!(tau_h > 0) || !(tau_h < 1)) throw ConfigError("tau_h must be in (0, 1)");

    std::vector<Gaussian3> out;
    std::vector<Aabb> boxes;
    OutputGrid grid(0.5);
    std::vector<int> candidates;

    for (const auto& basis : bases) {
        const Gaussian3& g = basis.gaussian;
        Aabb box = bbox_of(g, kDefaultBboxScale);
        grid.candidates(box, kRefineScanCap, candidates);
        bool merged = false;
        int h2_budget = kRefineHellingerCap;
        for (int i : candidates) {  // ascending: first matching output wins
            if (!boxes[i].intersects(box)) continue;
            if (h2_budget-- == 0) break;
            if (hellinger_sq(out[i], g) > tau_h) continue;
            out[i] = moment_merge(out[i], g);
            Aabb grown = bbox_of(out[i], kDefaultBboxScale);
            if (!boxes[i].contains(grown)) grid.cover(grown, i);
            boxes[i] = grown;
            merged = true;
            break;
        }
        if (!merged) {
            int index = static_cast<int>(out.size());
            out.push_back(g);
            boxes.push_back(box);
            grid.cover(box, index);
        }
    }
    return out;
}

}  // namespace gmap
