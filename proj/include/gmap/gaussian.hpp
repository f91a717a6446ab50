#ifndef GMAP_GAUSSIAN_HPP
#define GMAP_GAUSSIAN_HPP

#include <cstdint>

#include "gmap/geometry.hpp"

namespace gmap {

// Diagonal regularization (m^2) applied before any inversion or
// eigendecomposition; keeps planar/linear clusters non-degenerate.
inline constexpr double kCovEpsilon = 1e-6;

// Default sigma multiple for bounding boxes (indexing and query overlap).
inline constexpr double kDefaultBboxScale = 2.0;

enum class GaussianKind : std::uint8_t { occupied = 0, free = 1 };

using GaussianId = std::uint64_t;

// One weighted 3D Gaussian, the map's atom. Weight is accumulated point mass.
// id 0 means not yet owned by a map.
struct Gaussian3 {
    GaussianKind kind = GaussianKind::occupied;
    double weight = 0.0;
    Vec3 mean = Vec3::Zero();
    SymMat3 cov;
    GaussianId id = 0;
};

// N(x; mean, cov + eps*I). Throws InvariantError if the regularized covariance
// is not positive definite.
double gaussian_pdf(const Gaussian3& g, const Vec3& x);

// Moment-matched merge of two same-kind Gaussians: total weight, mean and
// second moment are preserved. Throws InvariantError on kind mismatch.
Gaussian3 moment_merge(const Gaussian3& a, const Gaussian3& b);

// mean +- k*sqrt(diag(cov) + eps) per axis.
Aabb bbox_of(const Gaussian3& g, double k);

// Squared Hellinger distance between two Gaussians, in [0, 1]. Covariances are
// regularized before factorization. Exactly 0 for identical inputs and
// bitwise symmetric in its arguments.
double hellinger_sq(const Gaussian3& a, const Gaussian3& b);

}  // namespace gmap

#endif
