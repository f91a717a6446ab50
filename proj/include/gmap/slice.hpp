#ifndef GMAP_SLICE_HPP
#define GMAP_SLICE_HPP

#include <string>
#include <vector>

#include "gmap/gaussian_map.hpp"
#include "gmap/query.hpp"

namespace gmap {

struct SliceImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

// Samples a horizontal grid at height z (row-major, chunked through
// query_batch) and colors probability blue(0) -> yellow(0.5) -> red(1) with
// two linear ramps; unexplored cells are exact yellow.
SliceImage render_slice(const GaussianMap& map, double z, double resolution, const Aabb& region,
                        const BatchConfig& cfg = BatchConfig());

void save_ppm(const std::string& path, const SliceImage& image);

}  // namespace gmap

#endif
