#include "gmap/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gmap/cache_sim.hpp"
#include "gmap/common.hpp"
#include "gmap/map_io.hpp"
#include "gmap/metrics.hpp"
#include "gmap/pgm.hpp"
#include "gmap/pipeline.hpp"
#include "gmap/run_config.hpp"
#include "gmap/slice.hpp"
#include "gmap/synthetic.hpp"
#include "gmap/trajectory.hpp"

namespace gmap {

namespace {

Vec3 parse_point(const std::string& text) {
    std::string s = text;
    for (auto& c : s) {
        if (c == ',') c = ' ';
    }
    std::istringstream ss(s);
    double x, y, z;
    if (!(ss >> x >> y >> z) || !(ss >> std::ws).eof()) {
        throw ConfigError("malformed point literal '" + text + "' (expected x,y,z)");
    }
    return Vec3(x, y, z);
}

struct SourceArgs {
    std::string scene_path;
    std::string traj_path;
    std::string depth_list_path;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--scene", scene_path, "synthetic scene description file");
        cmd->add_option("--traj", traj_path, "trajectory file (timestamp tx ty tz qx qy qz qw)");
        cmd->add_option("--depth-list", depth_list_path,
                        "dataset index: one 'timestamp pgm-path' per line");
    }

    void check() const {
        if (traj_path.empty() || (scene_path.empty() && depth_list_path.empty())) {
            throw ConfigError(
                "need --traj plus either --scene (synthetic) or --depth-list (dataset)");
        }
        if (!scene_path.empty() && !depth_list_path.empty()) {
            throw ConfigError("--scene and --depth-list are mutually exclusive");
        }
    }
};

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> sets;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--set", sets, "config override, key=value (repeatable)");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& kv : sets) {
            size_t eq = kv.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            }
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.validate();
        return cfg;
    }
};

std::vector<DepthFrame> load_frames(const RunConfig& cfg, const SourceArgs& src,
                                    long* skipped_out) {
    CameraIntrinsics intr = cfg.intrinsics();
    std::vector<TimedPose> traj = load_trajectory(src.traj_path);
    std::vector<DepthFrame> frames;
    long skipped = 0;

    if (!src.scene_path.empty()) {
        SyntheticScene scene = load_scene(src.scene_path);
        int index = 0;
        for (const auto& tp : traj) {
            DepthFrame f = render_synthetic(scene, tp.pose, intr, cfg.max_range);
            f.frame_index = index++;
            frames.push_back(std::move(f));
        }
    } else {
        std::ifstream in(src.depth_list_path);
        if (!in) throw ParseError("depth-list: cannot open " + src.depth_list_path);
        std::string line;
        long line_no = 0;
        int index = 0;
        std::filesystem::path base =
            std::filesystem::path(src.depth_list_path).parent_path();
        while (std::getline(in, line)) {
            ++line_no;
            size_t first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            std::istringstream ss(line);
            double ts;
            std::string path;
            if (!(ss >> ts >> path)) {
                throw ParseError("depth-list: malformed line " + std::to_string(line_no) +
                                 " of " + src.depth_list_path);
            }
            std::filesystem::path full = path;
            if (full.is_relative()) full = base / full;
            auto pose = associate_pose(traj, ts, cfg.pose_window);
            if (!pose) {
                ++skipped;
                continue;
            }
            DepthFrame f = load_depth_pgm(full.string(), intr);
            f.pose = *pose;
            f.frame_index = index++;
            frames.push_back(std::move(f));
        }
    }
    if (skipped_out) *skipped_out = skipped;
    return frames;
}

struct BuildOutcome {
    GaussianMap map;
    std::uint64_t fgbg_rays = 0;
    long segments = 0;
};

BuildOutcome build_map(const RunConfig& cfg, const std::vector<DepthFrame>& frames,
                       bool print_frames) {
    BuildOutcome out{GaussianMap(cfg.map_params())};
    PipelineParams params = cfg.pipeline_params();
    CameraIntrinsics intr = cfg.intrinsics();
    for (const auto& frame : frames) {
        FrameReport r = construct_frame(out.map, frame, intr, params);
        out.fgbg_rays += r.fgbg_rays;
        out.segments += r.segments;
        if (print_frames) {
            std::cout << "frame " << r.frame_index << ": segments=" << r.segments
                      << " occ_locals=" << r.occupied_locals << " free_locals=" << r.free_locals
                      << " fgbg_rays=" << r.fgbg_rays << " merged=" << (r.occ_merged + r.free_merged)
                      << " inserted=" << (r.occ_inserted + r.free_inserted)
                      << " map_size=" << out.map.size() << "\n";
        }
    }
    return out;
}

void print_map_summary(const GaussianMap& map) {
    std::cout << "gaussians=" << map.size()
              << " occupied=" << map.count_kind(GaussianKind::occupied)
              << " free=" << map.count_kind(GaussianKind::free)
              << " total_weight=" << map.total_weight()
              << " map_bytes=" << map_size_bytes(map) << "\n";
    const auto& c = map.counters();
    std::cout << "counters: inserted=" << c.gaussians_inserted << " merged=" << c.gaussians_merged
              << " fusion_ops=" << c.fusion_ops << " fgbg_rays=" << c.fgbg_rays
              << " segments=" << c.segments << " free_bases=" << c.free_bases << "\n";
    const auto& t = map.index().stats();
    std::cout << "rtree: nodes_visited=" << t.nodes_visited << " bytes_touched=" << t.bytes_touched
              << " inserts=" << t.inserts << " removals=" << t.removals
              << " searches=" << t.searches << "\n";
}

void append_csv(const std::string& path, const std::vector<RunCounters>& rows) {
    bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw ParseError("csv: cannot write " + path);
    if (fresh) out << RunCounters::csv_header() << "\n";
    for (const auto& row : rows) out << row.to_csv_row() << "\n";
    if (!out) throw ParseError("csv: write failed for " + path);
}

int cmd_build(const ConfigArgs& cargs, const SourceArgs& src, const std::string& out_path) {
    RunConfig cfg = cargs.resolve();
    src.check();
    std::cout << "config:\n" << cfg.resolved();

    long skipped = 0;
    std::vector<DepthFrame> frames = load_frames(cfg, src, &skipped);
    if (skipped > 0) {
        std::cout << "warning: skipped " << skipped << " frames without a pose\n";
    }
    BuildOutcome out = build_map(cfg, frames, true);
    save_map(out_path, out.map);
    print_map_summary(out.map);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_query(const std::string& map_path, const std::vector<std::string>& points,
              const std::string& traj_path, double step, int batch) {
    GaussianMap map = load_map(map_path);
    BatchConfig cfg;
    cfg.batch_size = batch;
    cfg.validate();

    std::uint64_t visits_before = map.index().stats().nodes_visited;
    std::vector<QueryResult> results;
    std::uint64_t pdf_evals = 0;

    if (!points.empty()) {
        for (const auto& text : points) {
            Vec3 x = parse_point(text);
            results.push_back(query_single(map, x));
        }
    } else if (!traj_path.empty()) {
        std::vector<TimedPose> traj = load_trajectory(traj_path);
        std::vector<Vec3> waypoints;
        for (const auto& tp : traj) waypoints.push_back(tp.pose.translation);
        results = query_trajectory(map, waypoints, step, cfg);
    } else {
        throw ConfigError("query needs --point or --traj");
    }

    for (const auto& r : results) {
        pdf_evals += static_cast<std::uint64_t>(r.n_gaussians_evaluated);
        std::cout << r.probability << " "
                  << (r.status == QueryStatus::explored ? "explored" : "unexplored")
                  << " evals=" << r.n_gaussians_evaluated << "\n";
    }
    std::cout << "summary: coords=" << results.size() << " batch=" << batch
              << " nodes_visited=" << (map.index().stats().nodes_visited - visits_before)
              << " pdf_evals=" << pdf_evals << "\n";
    return 0;
}

int cmd_eval(const ConfigArgs& cargs, const SourceArgs& src, const std::string& map_path,
             const std::string& csv_path) {
    RunConfig cfg = cargs.resolve();
    src.check();
    std::cout << "config:\n" << cfg.resolved();

    GaussianMap map = load_map(map_path);
    std::vector<DepthFrame> frames = load_frames(cfg, src, nullptr);
    std::vector<EvalSample> samples = generate_eval_samples(frames, cfg.intrinsics(), cfg.per_ray,
                                                            cfg.surface_delta, cfg.seed);
    double auc = evaluate_auc(map, samples);

    RunCounters row;
    row.label = "eval";
    row.pdf_evals = 0;
    row.map_bytes = map_size_bytes(map);
    row.auc = auc;

    std::cout << "auc=" << auc << "\n"
              << "map_bytes=" << row.map_bytes << "\n"
              << "samples=" << samples.size() << "\n"
              << "gaussians=" << map.size()
              << " occupied=" << map.count_kind(GaussianKind::occupied)
              << " free=" << map.count_kind(GaussianKind::free) << "\n";
    if (!csv_path.empty()) append_csv(csv_path, {row});
    return 0;
}

RunCounters run_one_construction(const RunConfig& base, const std::vector<DepthFrame>& frames,
                                 const std::vector<EvalSample>& samples, const std::string& fgbg,
                                 const std::string& slope, bool quant) {
    RunConfig cfg = base;
    cfg.fgbg_mode = fgbg;
    cfg.slope_mode = slope;
    cfg.quant = quant;

    BuildOutcome out = build_map(cfg, frames, false);

    RunCounters row;
    row.label = fgbg + "_" + slope + (quant ? "_quant" : "_full");
    row.fgbg_rays = out.fgbg_rays;
    row.merges = out.map.counters().gaussians_merged;
    row.inserts = out.map.counters().gaussians_inserted;
    row.rtree_nodes_visited = out.map.index().stats().nodes_visited;
    row.rtree_bytes_touched = out.map.index().stats().bytes_touched;
    row.map_bytes = map_size_bytes(out.map);
    row.auc = evaluate_auc(out.map, samples);
    return row;
}

int cmd_compare(const ConfigArgs& cargs, const SourceArgs& src, const std::string& csv_path) {
    RunConfig cfg = cargs.resolve();
    src.check();
    std::cout << "config:\n" << cfg.resolved();

    std::vector<DepthFrame> frames = load_frames(cfg, src, nullptr);
    std::vector<EvalSample> samples = generate_eval_samples(frames, cfg.intrinsics(), cfg.per_ray,
                                                            cfg.surface_delta, cfg.seed);

    std::vector<RunCounters> rows;
    for (const char* fgbg : {"baseline", "direct"}) {
        for (const char* slope : {"exact", "delayed4"}) {
            for (bool quant : {false, true}) {
                rows.push_back(run_one_construction(cfg, frames, samples, fgbg, slope, quant));
            }
        }
    }

    // Query proxy rows on the camera trajectory over the richest map.
    RunConfig qcfg = cfg;
    qcfg.fgbg_mode = "baseline";
    BuildOutcome built = build_map(qcfg, frames, false);
    std::vector<Vec3> waypoints;
    for (const auto& f : frames) waypoints.push_back(f.pose.translation);
    std::vector<Vec3> coords = sample_trajectory(waypoints, 0.05);

    auto run_queries = [&](int batch_size, const std::string& label) {
        RunCounters row;
        row.label = label;
        std::vector<NodeAccess> trace;
        built.map.index().set_trace(&trace);
        std::uint64_t visits0 = built.map.index().stats().nodes_visited;
        std::uint64_t bytes0 = built.map.index().stats().bytes_touched;
        BatchConfig bc;
        bc.batch_size = batch_size;
        for (size_t i = 0; i < coords.size(); i += bc.batch_size) {
            size_t n = std::min(coords.size() - i, static_cast<size_t>(bc.batch_size));
            auto results = query_batch(built.map, std::span<const Vec3>(coords.data() + i, n), bc);
            for (const auto& r : results) {
                row.pdf_evals += static_cast<std::uint64_t>(r.n_gaussians_evaluated);
            }
        }
        built.map.index().set_trace(nullptr);
        row.rtree_nodes_visited = built.map.index().stats().nodes_visited - visits0;
        row.rtree_bytes_touched = built.map.index().stats().bytes_touched - bytes0;
        CacheSim cache(cfg.cache_capacity, cfg.cache_line);
        for (const auto& a : trace) cache.access(a);
        row.cache_hits = cache.hits();
        row.cache_misses = cache.misses();
        row.cache_backing_bytes = cache.bytes_from_backing();
        row.map_bytes = map_size_bytes(built.map);
        return row;
    };
    rows.push_back(run_queries(1, "query_single"));
    rows.push_back(run_queries(cfg.batch_size, "query_batch"));

    std::cout << RunCounters::csv_header() << "\n";
    for (const auto& row : rows) std::cout << row.to_csv_row() << "\n";

    ProxyReport fgbg_report;
    fgbg_report.baseline = rows[0];   // baseline_exact_full
    fgbg_report.optimized = rows[4];  // direct_exact_full
    ProxyReport query_report;
    query_report.baseline = rows[8];   // query_single
    query_report.optimized = rows[9];  // query_batch
    std::cout << "construction_fgbg_ray_ratio=" << fgbg_report.fgbg_ray_ratio() << "\n"
              << "construction_map_size_ratio="
              << (static_cast<double>(rows[7].map_bytes) / static_cast<double>(rows[0].map_bytes))
              << "\n"
              << "query_visit_ratio=" << query_report.visit_ratio() << "\n"
              << "query_cache_hit_rate_single="
              << (rows[8].cache_hits + rows[8].cache_misses == 0
                      ? 0.0
                      : static_cast<double>(rows[8].cache_hits) /
                            static_cast<double>(rows[8].cache_hits + rows[8].cache_misses))
              << "\n";

    if (!csv_path.empty()) append_csv(csv_path, rows);
    return 0;
}

int cmd_slice(const std::string& map_path, double z, double res, const std::string& min_text,
              const std::string& max_text, const std::string& out_path, int batch) {
    GaussianMap map = load_map(map_path);
    Aabb region;
    if (!min_text.empty() || !max_text.empty()) {
        if (min_text.empty() || max_text.empty()) {
            throw ConfigError("--min and --max must be given together");
        }
        region = Aabb(parse_point(min_text), parse_point(max_text));
    } else {
        region = map.index().root_box();
        if (region.empty()) {
            throw ConfigError("map is empty; pass --min and --max to choose a region");
        }
    }
    BatchConfig cfg;
    cfg.batch_size = batch;
    SliceImage img = render_slice(map, z, res, region, cfg);
    save_ppm(out_path, img);
    std::cout << "wrote " << out_path << " (" << img.width << "x" << img.height << ")\n";
    return 0;
}

int cmd_stats(const std::string& map_path) {
    GaussianMap map = load_map(map_path);
    map.audit();
    std::cout << "gaussians=" << map.size() << "\n"
              << "occupied=" << map.count_kind(GaussianKind::occupied) << "\n"
              << "free=" << map.count_kind(GaussianKind::free) << "\n"
              << "total_weight=" << map.total_weight() << "\n"
              << "map_bytes=" << map_size_bytes(map) << "\n"
              << "quantized=" << (map.params().quant.enabled ? 1 : 0) << "\n"
              << "bbox_k=" << map.params().bbox_k << "\n"
              << "rtree_height=" << map.index().height() << "\n";
    Aabb box = map.index().root_box();
    if (!box.empty()) {
        std::cout << "bounds=[" << box.lo.x() << "," << box.lo.y() << "," << box.lo.z() << "]..["
                  << box.hi.x() << "," << box.hi.y() << "," << box.hi.z() << "]\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Gaussian-mixture 3D occupancy mapping: construction, query, evaluation"};
    app.require_subcommand(1);

    ConfigArgs build_cfg, eval_cfg, compare_cfg;
    SourceArgs build_src, eval_src, compare_src;
    std::string build_out;

    auto* build = app.add_subcommand("build", "construct a map from a dataset or synthetic scene");
    build_cfg.add_to(build);
    build_src.add_to(build);
    build->add_option("--out", build_out, "output map file")->required();

    std::string query_map, query_traj;
    std::vector<std::string> query_points;
    double query_step = 0.1;
    int query_batch = 16;
    auto* query = app.add_subcommand("query", "occupancy at points or along a trajectory");
    query->add_option("--map", query_map, "map file")->required();
    query->add_option("--point", query_points, "query coordinate x,y,z (repeatable)");
    query->add_option("--traj", query_traj, "trajectory file of waypoints");
    query->add_option("--step", query_step, "trajectory sample spacing, meters");
    query->add_option("--batch", query_batch, "batch size");

    std::string eval_map, eval_csv;
    auto* eval = app.add_subcommand("eval", "AUC and size of a map against labeled samples");
    eval_cfg.add_to(eval);
    eval_src.add_to(eval);
    eval->add_option("--map", eval_map, "map file")->required();
    eval->add_option("--csv", eval_csv, "append one CSV row here");

    std::string compare_csv;
    auto* compare = app.add_subcommand("compare", "A/B the co-optimizations on one scene");
    compare_cfg.add_to(compare);
    compare_src.add_to(compare);
    compare->add_option("--csv", compare_csv, "append CSV rows here");

    std::string slice_map, slice_min, slice_max, slice_out;
    double slice_z = 1.0, slice_res = 0.05;
    int slice_batch = 16;
    auto* slice = app.add_subcommand("slice", "export a horizontal cross-section image");
    slice->add_option("--map", slice_map, "map file")->required();
    slice->add_option("--z", slice_z, "slice height, meters");
    slice->add_option("--res", slice_res, "grid resolution, meters");
    slice->add_option("--min", slice_min, "region lower corner x,y,z");
    slice->add_option("--max", slice_max, "region upper corner x,y,z");
    slice->add_option("--out", slice_out, "output PPM file")->required();
    slice->add_option("--batch", slice_batch, "batch size");

    std::string stats_map;
    auto* stats = app.add_subcommand("stats", "print map summary");
    stats->add_option("--map", stats_map, "map file")->required();

    try {
        app.parse(argc, argv);
        if (build->parsed()) return cmd_build(build_cfg, build_src, build_out);
        if (query->parsed())
            return cmd_query(query_map, query_points, query_traj, query_step, query_batch);
        if (eval->parsed()) return cmd_eval(eval_cfg, eval_src, eval_map, eval_csv);
        if (compare->parsed()) return cmd_compare(compare_cfg, compare_src, compare_csv);
        if (slice->parsed())
            return cmd_slice(slice_map, slice_z, slice_res, slice_min, slice_max, slice_out,
                             slice_batch);
        if (stats->parsed()) return cmd_stats(stats_map);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace gmap
