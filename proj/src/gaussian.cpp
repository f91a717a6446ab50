#include "gmap/gaussian.hpp"

#include <cmath>

#include "gmap/common.hpp"

namespace gmap {

Gaussian3 moment_merge(const Gaussian3& a, const Gaussian3& b) {
    if (a.kind != b.kind) {
        throw InvariantError("cannot merge occupied with free");
    }
    double w = a.weight + b.weight;
    if (!(w > 0)) {
        throw InvariantError("merge of zero total weight");
    }
    double fa = a.weight / w;
    double fb = b.weight / w;

    Gaussian3 out;
    out.kind = a.kind;
    out.weight = w;
    out.mean = fa * a.mean + fb * b.mean;

    // Equivalent to the second-moment form [wa(Sa + ma ma^T) + wb(...)]/w -
    // m m^T but avoids the large cancelling outer products.
    Vec3 dm = a.mean - b.mean;
    out.cov = a.cov * fa + b.cov * fb;
    out.cov.add_scaled(SymMat3::outer(dm), fa * fb);
    return out;
}

Aabb bbox_of(const Gaussian3& g, double k) {
    if (!(k > 0)) {
        throw InvariantError("bbox scale must be positive");
    }
    Vec3 half(k * std::sqrt(g.cov.xx + kCovEpsilon),
              k * std::sqrt(g.cov.yy + kCovEpsilon),
              k * std::sqrt(g.cov.zz + kCovEpsilon));
    return Aabb(g.mean - half, g.mean + half);
}

namespace {

struct RegSym {
    double xx, xy, xz, yy, yz, zz;

    explicit RegSym(const SymMat3& c)
        : xx(c.xx + kCovEpsilon), xy(c.xy), xz(c.xz),
          yy(c.yy + kCovEpsilon), yz(c.yz), zz(c.zz + kCovEpsilon) {}

    RegSym(const RegSym& a, const RegSym& b)  // midpoint
        : xx((a.xx + b.xx) * 0.5), xy((a.xy + b.xy) * 0.5), xz((a.xz + b.xz) * 0.5),
          yy((a.yy + b.yy) * 0.5), yz((a.yz + b.yz) * 0.5), zz((a.zz + b.zz) * 0.5) {}

    // Throws unless positive definite (Sylvester minors); returns det.
    double checked_det() const {
        double minor2 = xx * yy - xy * xy;
        double det = xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) +
                     xz * (xy * yz - yy * xz);
        if (!(xx > 0) || !(minor2 > 0) || !(det > 0)) {
            throw InvariantError("degenerate covariance");
        }
        return det;
    }

    // d^T adj(M) d; dividing by det gives the Mahalanobis quadratic form.
    double adj_quad(const Vec3& d) const {
        double a00 = yy * zz - yz * yz;
        double a01 = xz * yz - xy * zz;
        double a02 = xy * yz - xz * yy;
        double a11 = xx * zz - xz * xz;
        double a12 = xy * xz - xx * yz;
        double a22 = xx * yy - xy * xy;
        double t0 = a00 * d.x() + a01 * d.y() + a02 * d.z();
        double t1 = a01 * d.x() + a11 * d.y() + a12 * d.z();
        double t2 = a02 * d.x() + a12 * d.y() + a22 * d.z();
        return d.x() * t0 + d.y() * t1 + d.z() * t2;
    }
};

}  // namespace

double gaussian_pdf(const Gaussian3& g, const Vec3& x) {
    RegSym cov(g.cov);
    double det = cov.checked_det();
    Vec3 d = x - g.mean;
    double quad = cov.adj_quad(d) / det;
    if (quad < 0) quad = 0;
    constexpr double log_2pi = 1.8378770664093454836;  // log(2*pi)
    return std::exp(-0.5 * (3.0 * log_2pi + std::log(det) + quad));
}

double hellinger_sq(const Gaussian3& a, const Gaussian3& b) {
    RegSym ca(a.cov);
    RegSym cb(b.cov);
    RegSym cm(ca, cb);

    double det_a = ca.checked_det();
    double det_b = cb.checked_det();
    double det_m = cm.checked_det();

    Vec3 d = a.mean - b.mean;
    double quad = cm.adj_quad(d) / det_m;
    if (quad < 0) quad = 0;  // rounding guard for near-identical means

    // Quarter powers combined in log space: exact zero for identical inputs.
    double log_bc =
        0.25 * std::log(det_a) + 0.25 * std::log(det_b) - 0.5 * std::log(det_m) - 0.125 * quad;
    double bc = std::exp(log_bc);
    if (bc > 1.0) bc = 1.0;
    if (bc < 0.0) bc = 0.0;
    return 1.0 - bc;
}

}  // namespace gmap
