#ifndef GMAP_QUERY_HPP
#define GMAP_QUERY_HPP

#include <span>
#include <vector>

#include "gmap/gaussian_map.hpp"

namespace gmap {

enum class QueryStatus { explored, unexplored };

struct QueryResult {
    double probability = 0.5;
    QueryStatus status = QueryStatus::unexplored;
    int n_gaussians_evaluated = 0;
};

struct BatchConfig {
    int batch_size = 16;

    void validate() const;
};

inline constexpr double kDefaultPriorCount = 1e-6;

// Occupancy from an explicit candidate list (must be in ascending id order
// for reproducible summation). Empty candidates give (0.5, unexplored).
QueryResult regress(std::span<const Gaussian3> candidates, const Vec3& x, double prior_count);

// One R-tree traversal with the degenerate box [x, x].
QueryResult query_single(const GaussianMap& map, const Vec3& x,
                         double prior_count = kDefaultPriorCount);

// One traversal with the box enclosing all coordinates; candidates are then
// filtered per coordinate. Bit-identical to query_single per coordinate.
std::vector<QueryResult> query_batch(const GaussianMap& map, std::span<const Vec3> coords,
                                     const BatchConfig& cfg = BatchConfig(),
                                     double prior_count = kDefaultPriorCount);

// Samples the piecewise-linear trajectory at spacing <= step (endpoints
// included, no duplicates at joints) and queries it in batches.
std::vector<QueryResult> query_trajectory(const GaussianMap& map, std::span<const Vec3> waypoints,
                                          double step, const BatchConfig& cfg = BatchConfig(),
                                          double prior_count = kDefaultPriorCount);

// The trajectory sample coordinates themselves (exposed for evaluation).
std::vector<Vec3> sample_trajectory(std::span<const Vec3> waypoints, double step);

}  // namespace gmap

#endif
