#include "gmap/slice.hpp"

#include <cmath>
#include <fstream>

#include "gmap/common.hpp"

namespace gmap {

namespace {

void color_of(double p, bool unexplored, std::uint8_t* rgb) {
    if (unexplored) {
        rgb[0] = 255;
        rgb[1] = 255;
        rgb[2] = 0;
        return;
    }
    double r, g, b;
    if (p <= 0.5) {  // blue -> yellow
        r = 2.0 * p;
        g = 2.0 * p;
        b = 1.0 - 2.0 * p;
    } else {  // yellow -> red
        r = 1.0;
        g = 2.0 - 2.0 * p;
        b = 0.0;
    }
    rgb[0] = static_cast<std::uint8_t>(std::lround(255.0 * r));
    rgb[1] = static_cast<std::uint8_t>(std::lround(255.0 * g));
    rgb[2] = static_cast<std::uint8_t>(std::lround(255.0 * b));
}

}  // namespace

SliceImage render_slice(const GaussianMap& map, double z, double resolution, const Aabb& region,
                        const BatchConfig& cfg) {
    if (!(resolution > 0)) throw ConfigError("slice resolution must be positive");
    if (region.empty()) throw ConfigError("slice region is empty");

    SliceImage img;
    img.width = std::max(1, static_cast<int>(std::ceil((region.hi.x() - region.lo.x()) / resolution)));
    img.height = std::max(1, static_cast<int>(std::ceil((region.hi.y() - region.lo.y()) / resolution)));
    img.rgb.assign(static_cast<size_t>(img.width) * img.height * 3, 0);

    std::vector<Vec3> coords;
    coords.reserve(static_cast<size_t>(img.width) * img.height);
    for (int row = 0; row < img.height; ++row) {
        double y = region.lo.y() + (row + 0.5) * resolution;
        for (int col = 0; col < img.width; ++col) {
            double x = region.lo.x() + (col + 0.5) * resolution;
            coords.emplace_back(x, y, z);
        }
    }

    size_t pixel = 0;
    for (size_t i = 0; i < coords.size(); i += cfg.batch_size) {
        size_t n = std::min(coords.size() - i, static_cast<size_t>(cfg.batch_size));
        auto results = query_batch(map, std::span<const Vec3>(coords.data() + i, n), cfg);
        for (const auto& r : results) {
            color_of(r.probability, r.status == QueryStatus::unexplored, &img.rgb[pixel * 3]);
            ++pixel;
        }
    }
    return img;
}

void save_ppm(const std::string& path, const SliceImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("ppm: cannot write " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
    if (!out) throw ParseError("ppm: write failed for " + path);
}

}  // namespace gmap
