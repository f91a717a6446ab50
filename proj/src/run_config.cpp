#include "gmap/run_config.hpp"

#include <fstream>
#include <sstream>

#include "gmap/common.hpp"

namespace gmap {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T v;
    if (!(ss >> v) || !(ss >> std::ws).eof()) {
        throw ParseError("config: cannot parse value '" + value + "' for key '" + key + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    throw ParseError("config: cannot parse boolean '" + value + "' for key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "bbox_k") bbox_k = parse_number<double>(key, value);
    else if (key == "tau_h_fuse") tau_h_fuse = parse_number<double>(key, value);
    else if (key == "node_max") node_max = parse_number<int>(key, value);
    else if (key == "fuse_candidate_cap") fuse_candidate_cap = parse_number<int>(key, value);
    else if (key == "quant") quant = parse_bool(key, value);
    else if (key == "tau_depth") tau_depth = parse_number<double>(key, value);
    else if (key == "tau_rel") tau_rel = parse_number<double>(key, value);
    else if (key == "tau_slope") tau_slope = parse_number<double>(key, value);
    else if (key == "tau_fuse") tau_fuse = parse_number<double>(key, value);
    else if (key == "n_min") n_min = parse_number<int>(key, value);
    else if (key == "slope_mode") slope_mode = value;
    else if (key == "fgbg_mode") fgbg_mode = value;
    else if (key == "k_intervals") k_intervals = parse_number<int>(key, value);
    else if (key == "margin") margin = parse_number<double>(key, value);
    else if (key == "stride") stride = parse_number<int>(key, value);
    else if (key == "r_count") r_count = parse_number<int>(key, value);
    else if (key == "tau_h_refine") tau_h_refine = parse_number<double>(key, value);
    else if (key == "batch_size") batch_size = parse_number<int>(key, value);
    else if (key == "prior_count") prior_count = parse_number<double>(key, value);
    else if (key == "fx") fx = parse_number<double>(key, value);
    else if (key == "fy") fy = parse_number<double>(key, value);
    else if (key == "cx") cx = parse_number<double>(key, value);
    else if (key == "cy") cy = parse_number<double>(key, value);
    else if (key == "width") width = parse_number<int>(key, value);
    else if (key == "height") height = parse_number<int>(key, value);
    else if (key == "depth_scale") depth_scale = parse_number<double>(key, value);
    else if (key == "max_range") max_range = parse_number<double>(key, value);
    else if (key == "pose_window") pose_window = parse_number<double>(key, value);
    else if (key == "per_ray") per_ray = parse_number<int>(key, value);
    else if (key == "surface_delta") surface_delta = parse_number<double>(key, value);
    else if (key == "cache_capacity") cache_capacity = parse_number<std::uint64_t>(key, value);
    else if (key == "cache_line") cache_line = parse_number<std::uint32_t>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else throw ParseError("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config: missing '=' at line " + std::to_string(line_no) + " of " +
                             path);
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::string RunConfig::resolved() const {
    std::ostringstream ss;
    ss.precision(17);
    ss << "bbox_k=" << bbox_k << "\n"
       << "tau_h_fuse=" << tau_h_fuse << "\n"
       << "node_max=" << node_max << "\n"
       << "fuse_candidate_cap=" << fuse_candidate_cap << "\n"
       << "quant=" << (quant ? 1 : 0) << "\n"
       << "tau_depth=" << tau_depth << "\n"
       << "tau_rel=" << tau_rel << "\n"
       << "tau_slope=" << tau_slope << "\n"
       << "tau_fuse=" << tau_fuse << "\n"
       << "n_min=" << n_min << "\n"
       << "slope_mode=" << slope_mode << "\n"
       << "fgbg_mode=" << fgbg_mode << "\n"
       << "k_intervals=" << k_intervals << "\n"
       << "margin=" << margin << "\n"
       << "stride=" << stride << "\n"
       << "r_count=" << r_count << "\n"
       << "tau_h_refine=" << tau_h_refine << "\n"
       << "batch_size=" << batch_size << "\n"
       << "prior_count=" << prior_count << "\n"
       << "fx=" << fx << "\n"
       << "fy=" << fy << "\n"
       << "cx=" << cx << "\n"
       << "cy=" << cy << "\n"
       << "width=" << width << "\n"
       << "height=" << height << "\n"
       << "depth_scale=" << depth_scale << "\n"
       << "max_range=" << max_range << "\n"
       << "pose_window=" << pose_window << "\n"
       << "per_ray=" << per_ray << "\n"
       << "surface_delta=" << surface_delta << "\n"
       << "cache_capacity=" << cache_capacity << "\n"
       << "cache_line=" << cache_line << "\n"
       << "seed=" << seed << "\n";
    return ss.str();
}

void RunConfig::validate() const {
    if (slope_mode != "exact" && slope_mode != "delayed4") {
        throw ConfigError("slope_mode must be 'exact' or 'delayed4'");
    }
    if (fgbg_mode != "baseline" && fgbg_mode != "direct") {
        throw ConfigError("fgbg_mode must be 'baseline' or 'direct'");
    }
    seg_params().validate();
    fgbg_params().validate();
    batch_config().validate();
    intrinsics().validate();
    if (!(prior_count > 0)) throw ConfigError("prior_count must be positive");
    if (!(max_range > 0)) throw ConfigError("max_range must be positive");
    if (!(surface_delta > 0)) throw ConfigError("surface_delta must be positive");
    if (per_ray < 1) throw ConfigError("per_ray must be at least 1");
}

MapParams RunConfig::map_params() const {
    MapParams p;
    p.bbox_k = bbox_k;
    p.tau_h_fuse = tau_h_fuse;
    p.node_max = node_max;
    p.fuse_candidate_cap = fuse_candidate_cap;
    p.quant.enabled = quant;
    return p;
}

SegParams RunConfig::seg_params() const {
    SegParams p;
    p.tau_depth = tau_depth;
    p.tau_rel = tau_rel;
    p.tau_slope = tau_slope;
    p.tau_fuse = tau_fuse;
    p.n_min = n_min;
    p.slope_mode = slope_mode == "delayed4" ? SlopeMode::delayed4 : SlopeMode::exact;
    return p;
}

FgbgParams RunConfig::fgbg_params() const {
    FgbgParams p;
    p.mode = fgbg_mode == "direct" ? FgbgMode::direct : FgbgMode::baseline;
    p.k_intervals = k_intervals;
    p.margin = margin;
    p.stride = stride;
    p.r_count = r_count;
    p.tau_h_refine = tau_h_refine;
    return p;
}

PipelineParams RunConfig::pipeline_params() const {
    PipelineParams p;
    p.seg = seg_params();
    p.fgbg = fgbg_params();
    return p;
}

CameraIntrinsics RunConfig::intrinsics() const {
    CameraIntrinsics intr;
    intr.fx = fx;
    intr.fy = fy;
    intr.cx = cx;
    intr.cy = cy;
    intr.width = width;
    intr.height = height;
    intr.depth_scale = depth_scale;
    return intr;
}

BatchConfig RunConfig::batch_config() const {
    BatchConfig cfg;
    cfg.batch_size = batch_size;
    return cfg;
}

}  // namespace gmap
