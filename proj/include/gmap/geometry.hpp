#ifndef GMAP_GEOMETRY_HPP
#define GMAP_GEOMETRY_HPP

#include <Eigen/Core>
#include <algorithm>
#include <limits>

namespace gmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Axis-aligned box, closed on all faces. The empty box is the distinguished
// +inf/-inf value and intersects nothing.
struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    Aabb() = default;
    Aabb(const Vec3& l, const Vec3& h) : lo(l), hi(h) {}

    static Aabb point(const Vec3& p) { return Aabb(p, p); }

    bool empty() const { return lo.x() > hi.x() || lo.y() > hi.y() || lo.z() > hi.z(); }

    // Touching boxes count as intersecting.
    bool intersects(const Aabb& o) const {
        return lo.x() <= o.hi.x() && o.lo.x() <= hi.x() &&
               lo.y() <= o.hi.y() && o.lo.y() <= hi.y() &&
               lo.z() <= o.hi.z() && o.lo.z() <= hi.z();
    }

    bool contains(const Vec3& p) const {
        return p.x() >= lo.x() && p.x() <= hi.x() &&
               p.y() >= lo.y() && p.y() <= hi.y() &&
               p.z() >= lo.z() && p.z() <= hi.z();
    }

    bool contains(const Aabb& o) const {
        return o.lo.x() >= lo.x() && o.hi.x() <= hi.x() &&
               o.lo.y() >= lo.y() && o.hi.y() <= hi.y() &&
               o.lo.z() >= lo.z() && o.hi.z() <= hi.z();
    }

    void expand(const Aabb& o) {
        lo = lo.cwiseMin(o.lo);
        hi = hi.cwiseMax(o.hi);
    }

    void expand(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }

    Aabb merged(const Aabb& o) const {
        Aabb r = *this;
        r.expand(o);
        return r;
    }

    double volume() const {
        if (empty()) return 0.0;
        return (hi - lo).prod();
    }

    bool operator==(const Aabb& o) const { return lo == o.lo && hi == o.hi; }
};

// Symmetric 3x3 matrix stored as its upper triangle, so symmetry holds exactly
// as stored.
struct SymMat3 {
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

    SymMat3() = default;
    SymMat3(double xx_, double xy_, double xz_, double yy_, double yz_, double zz_)
        : xx(xx_), xy(xy_), xz(xz_), yy(yy_), yz(yz_), zz(zz_) {}

    static SymMat3 zero() { return SymMat3(); }

    static SymMat3 diagonal(double a, double b, double c) {
        return SymMat3(a, 0, 0, b, 0, c);
    }

    static SymMat3 identity() { return diagonal(1, 1, 1); }

    // Symmetrizes via (M + M^T)/2; exact when M is already symmetric.
    static SymMat3 from_matrix(const Mat3& m) {
        return SymMat3(m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)),
                       m(1, 1), 0.5 * (m(1, 2) + m(2, 1)), m(2, 2));
    }

    static SymMat3 outer(const Vec3& v) {
        return SymMat3(v.x() * v.x(), v.x() * v.y(), v.x() * v.z(),
                       v.y() * v.y(), v.y() * v.z(), v.z() * v.z());
    }

    Mat3 to_matrix() const {
        Mat3 m;
        m << xx, xy, xz,
             xy, yy, yz,
             xz, yz, zz;
        return m;
    }

    double diag(int i) const { return i == 0 ? xx : (i == 1 ? yy : zz); }

    SymMat3 operator+(const SymMat3& o) const {
        return SymMat3(xx + o.xx, xy + o.xy, xz + o.xz, yy + o.yy, yz + o.yz, zz + o.zz);
    }

    SymMat3 operator*(double s) const {
        return SymMat3(xx * s, xy * s, xz * s, yy * s, yz * s, zz * s);
    }

    void add_scaled(const SymMat3& o, double s) {
        xx += o.xx * s; xy += o.xy * s; xz += o.xz * s;
        yy += o.yy * s; yz += o.yz * s; zz += o.zz * s;
    }

    bool operator==(const SymMat3& o) const {
        return xx == o.xx && xy == o.xy && xz == o.xz &&
               yy == o.yy && yz == o.yz && zz == o.zz;
    }
};

}  // namespace gmap

#endif
