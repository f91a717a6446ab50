#ifndef GMAP_RUN_CONFIG_HPP
#define GMAP_RUN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "gmap/free_space.hpp"
#include "gmap/gaussian_map.hpp"
#include "gmap/pipeline.hpp"
#include "gmap/query.hpp"

namespace gmap {

// Every tunable of the pipeline in one bag: loadable from key=value files,
// overridable from the command line, dumpable so each run logs its resolved
// configuration.
struct RunConfig {
    // map
    double bbox_k = kDefaultBboxScale;
    double tau_h_fuse = 0.4;
    int node_max = 8;
    int fuse_candidate_cap = 64;
    bool quant = false;

    // segmentation
    double tau_depth = 0.05;
    double tau_rel = 0.02;
    double tau_slope = 0.1;
    double tau_fuse = 0.1;
    int n_min = 8;
    std::string slope_mode = "exact";  // exact | delayed4

    // free space
    std::string fgbg_mode = "baseline";  // baseline | direct
    int k_intervals = 4;
    double margin = 0.2;
    int stride = 4;
    int r_count = 5;
    double tau_h_refine = 0.6;

    // query
    int batch_size = 16;
    double prior_count = kDefaultPriorCount;

    // camera
    double fx = 138.56, fy = 138.56;
    double cx = 80.0, cy = 60.0;
    int width = 160, height = 120;
    double depth_scale = 5000.0;

    // ingest
    double max_range = 8.0;
    double pose_window = 0.02;

    // evaluation
    int per_ray = 1;
    double surface_delta = 0.2;

    // cache proxy
    std::uint64_t cache_capacity = 45056;
    std::uint32_t cache_line = 64;

    std::uint64_t seed = 1;

    // Applies one key=value assignment; throws ParseError on unknown keys or
    // unparseable values.
    void set(const std::string& key, const std::string& value);

    // Loads a key=value file ('#' comments); later CLI overrides win.
    void load_file(const std::string& path);

    // All keys in declaration order, one per line.
    std::string resolved() const;

    void validate() const;

    MapParams map_params() const;
    SegParams seg_params() const;
    FgbgParams fgbg_params() const;
    PipelineParams pipeline_params() const;
    CameraIntrinsics intrinsics() const;
    BatchConfig batch_config() const;
};

}  // namespace gmap

#endif
