#include "gmap/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "gmap/common.hpp"

namespace gmap {

void SegParams::validate() const {
    if (!(tau_depth > 0) || !(tau_rel > 0) || !(tau_slope > 0) || !(tau_fuse > 0)) {
        throw ConfigError("segmentation gates must be positive");
    }
    if (n_min < 3) throw ConfigError("n_min must be at least 3");
}

namespace {

struct OpenSegment {
    int col_start = 0;
    int col_last = 0;
    long n = 0;
    double depth_first = 0;
    double depth_last = 0;
    double depth_sum = 0;
    // Least-squares accumulators over (col - col_start, depth).
    double su = 0, sd = 0, suu = 0, sud = 0;
    Vec3 sum = Vec3::Zero();
    SymMat3 sum_outer;
    // slope_after[j % 5] is the exact fit slope once j pixels were accepted.
    double slope_after[5] = {0, 0, 0, 0, 0};
    double cur_slope = 0;

    void open(int col, double d, const Vec3& p) {
        col_start = col;
        col_last = col;
        n = 1;
        depth_first = depth_last = d;
        depth_sum = d;
        su = 0;
        sd = d;
        suu = 0;
        sud = 0;
        sum = p;
        sum_outer = SymMat3::outer(p);
        cur_slope = 0;
        slope_after[1 % 5] = 0;
    }

    void accept(int col, double d, const Vec3& p) {
        double u = static_cast<double>(col - col_start);
        col_last = col;
        depth_last = d;
        depth_sum += d;
        ++n;
        su += u;
        sd += d;
        suu += u * u;
        sud += u * d;
        sum += p;
        sum_outer.add_scaled(SymMat3::outer(p), 1.0);
        double denom = static_cast<double>(n) * suu - su * su;
        cur_slope = denom > 0 ? (static_cast<double>(n) * sud - su * sd) / denom : 0.0;
        slope_after[n % 5] = cur_slope;
    }

    // Slope fed to the residual gate before accepting pixel n+1. The delayed
    // mode reads the fit as it stood four accepted pixels earlier; until that
    // value postdates the second pixel it falls back to the two-point slope
    // (a one-point "slope" of zero would split exact affine runs).
    double slope_used(SlopeMode mode) const {
        if (mode == SlopeMode::exact) return cur_slope;
        if (n == 1) return 0.0;
        if (n <= 5) return slope_after[2 % 5];
        return slope_after[(n - 4) % 5];
    }

    Segment close(int row) const {
        Segment s;
        s.row = row;
        s.col_start = col_start;
        s.col_end = col_last;
        s.n = n;
        s.sum = sum;
        s.sum_outer = sum_outer;
        s.depth_first = depth_first;
        s.depth_last = depth_last;
        s.slope = cur_slope;
        s.depth_sum = depth_sum;
        return s;
    }
};

}  // namespace

std::vector<Segment> scanline_segment(const DepthFrame& frame, const CameraIntrinsics& intr,
                                      int row, const SegParams& params) {
    if (row < 0 || row >= frame.height) throw InvariantError("row out of range");
    params.validate();

    Mat3 rot = frame.pose.rotation.toRotationMatrix();
    const Vec3& trans = frame.pose.translation;
    auto world_point = [&](int col, double d) {
        Vec3 p_cam((col - intr.cx) * d / intr.fx, (row - intr.cy) * d / intr.fy, d);
        return Vec3(rot * p_cam + trans);
    };

    std::vector<Segment> out;
    OpenSegment seg;
    bool open = false;

    for (int col = 0; col < frame.width; ++col) {
        double d = frame.at(row, col);
        if (!(d > 0)) {
            if (open) {
                out.push_back(seg.close(row));
                open = false;
            }
            continue;
        }
        Vec3 p = world_point(col, d);
        if (!open) {
            seg.open(col, d, p);
            open = true;
            continue;
        }
        double predicted =
            seg.depth_last + seg.slope_used(params.slope_mode) * (col - seg.col_last);
        double gate = std::max(params.tau_depth, params.tau_rel * d);
        if (std::fabs(d - predicted) <= gate) {
            seg.accept(col, d, p);
        } else {
            out.push_back(seg.close(row));
            seg.open(col, d, p);
        }
    }
    if (open) out.push_back(seg.close(row));
    return out;
}

namespace {

bool intervals_overlap(int a_lo, int a_hi, int b_lo, int b_hi) {
    return a_lo <= b_hi && b_lo <= a_hi;
}

struct PendingRow {
    bool touched = false;
    int col_start = 0;
    int col_end = 0;
    double depth_weighted = 0;  // sum of n * mean_depth over absorbed segments
    double slope_weighted = 0;
    long n = 0;
};

}  // namespace

void fuse_segments(std::vector<Cluster>& active, std::vector<Cluster>& retired,
                   const std::vector<Segment>& row_segments, int row, const SegParams& params) {
    // Retire clusters silent for a full row.
    {
        std::vector<Cluster> keep;
        keep.reserve(active.size());
        for (auto& c : active) {
            if (c.row_last < row - 1) {
                c.active = false;
                retired.push_back(c);
            } else {
                keep.push_back(c);
            }
        }
        active = std::move(keep);
    }

    // Matching runs against each cluster's state as of the previous row; this
    // row's absorptions are committed afterwards, which is what lets one
    // cluster absorb several (column-disjoint) segments of the same row.
    std::vector<PendingRow> pending(active.size());
    const size_t candidates = active.size();  // clusters seeded below are not match targets

    for (const auto& seg : row_segments) {
        double seg_depth = seg.mean_depth();
        bool joined = false;
        for (size_t i = 0; i < candidates; ++i) {
            const Cluster& c = active[i];
            if (!intervals_overlap(seg.col_start, seg.col_end, c.col_start_last, c.col_end_last))
                continue;
            if (std::fabs(seg_depth - c.mean_depth_last) > params.tau_fuse) continue;
            if (std::fabs(seg.slope - c.slope_last) > params.tau_slope) continue;

            Cluster& cm = active[i];
            cm.n += seg.n;
            cm.sum += seg.sum;
            cm.sum_outer.add_scaled(seg.sum_outer, 1.0);

            PendingRow& p = pending[i];
            if (!p.touched) {
                p.touched = true;
                p.col_start = seg.col_start;
                p.col_end = seg.col_end;
            } else {
                p.col_start = std::min(p.col_start, seg.col_start);
                p.col_end = std::max(p.col_end, seg.col_end);
            }
            p.depth_weighted += static_cast<double>(seg.n) * seg_depth;
            p.slope_weighted += static_cast<double>(seg.n) * seg.slope;
            p.n += seg.n;
            joined = true;
            break;
        }
        if (!joined) {
            Cluster c;
            c.n = seg.n;
            c.sum = seg.sum;
            c.sum_outer = seg.sum_outer;
            c.row_last = row;
            c.col_start_last = seg.col_start;
            c.col_end_last = seg.col_end;
            c.mean_depth_last = seg_depth;
            c.slope_last = seg.slope;
            active.push_back(c);
        }
    }

    for (size_t i = 0; i < pending.size(); ++i) {
        const PendingRow& p = pending[i];
        if (!p.touched) continue;
        Cluster& c = active[i];
        c.row_last = row;
        c.col_start_last = p.col_start;
        c.col_end_last = p.col_end;
        c.mean_depth_last = p.depth_weighted / static_cast<double>(p.n);
        c.slope_last = p.slope_weighted / static_cast<double>(p.n);
    }

    std::stable_sort(active.begin(), active.end(), [](const Cluster& a, const Cluster& b) {
        return a.col_start_last < b.col_start_last;
    });
}

std::vector<Gaussian3> clusters_to_gaussians(const std::vector<Cluster>& retired,
                                             const SegParams& params) {
    std::vector<Gaussian3> out;
    for (const auto& c : retired) {
        if (c.n < params.n_min) continue;
        double n = static_cast<double>(c.n);
        Gaussian3 g;
        g.kind = GaussianKind::occupied;
        g.weight = n;
        g.mean = c.sum / n;
        SymMat3 cov = c.sum_outer * (1.0 / n);
        cov.add_scaled(SymMat3::outer(g.mean), -1.0);
        cov.xx += kCovEpsilon;
        cov.yy += kCovEpsilon;
        cov.zz += kCovEpsilon;
        g.cov = cov;
        out.push_back(g);
    }
    return out;
}

FrameSegmentation segment_frame(const DepthFrame& frame, const CameraIntrinsics& intr,
                                const SegParams& params) {
    FrameSegmentation result;
    std::vector<Cluster> active;
    std::vector<Cluster> retired;

    for (int row = 0; row < frame.height; ++row) {
        std::vector<Segment> segs = scanline_segment(frame, intr, row, params);
        fuse_segments(active, retired, segs, row, params);
        for (auto& s : segs) result.segments.push_back(std::move(s));
    }
    for (auto& c : active) {
        c.active = false;
        retired.push_back(c);
    }

    result.clusters_formed = static_cast<long>(retired.size());
    result.occupied = clusters_to_gaussians(retired, params);
    result.clusters_dropped =
        result.clusters_formed - static_cast<long>(result.occupied.size());
    return result;
}

}  // namespace gmap
