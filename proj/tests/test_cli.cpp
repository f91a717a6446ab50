#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmap/map_io.hpp"
#include "gmap/pgm.hpp"
#include "gmap/synthetic.hpp"
#include "gmap/trajectory.hpp"
#include "test_support.hpp"

using namespace gmap;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli_process(const std::string& args) {
    std::string cmd = std::string(GMAP_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.output.append(buf.data(), n);
    }
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct Workspace {
    std::filesystem::path dir;

    Workspace() {
        dir = std::filesystem::temp_directory_path() /
              ("gmap_cli_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        save_scene(file("room.txt"), test::box_room_scene());
        save_trajectory(file("orbit.txt"), test::orbit_trajectory(4));
    }
    ~Workspace() { std::filesystem::remove_all(dir); }

    std::string file(const std::string& name) const { return (dir / name).string(); }

    std::string small_camera() const {
        return "--set width=48 --set height=36 --set fx=41.57 --set fy=41.57 "
               "--set cx=24 --set cy=18";
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("build from a synthetic scene writes a parse-valid map") {
    Workspace ws;
    auto r = run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                             ws.file("orbit.txt") + " --out " + ws.file("room.gmm") + " " +
                             ws.small_camera());
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("config:") != std::string::npos);
    CHECK(r.output.find("frame 0:") != std::string::npos);

    GaussianMap map = load_map(ws.file("room.gmm"));  // CRC validated on load
    CHECK(map.size() > 0);
    CHECK(map.count_kind(GaussianKind::occupied) > 0);
    CHECK(map.count_kind(GaussianKind::free) > 0);
}

TEST_CASE("build is deterministic byte for byte") {
    Workspace ws;
    std::string base = "build --scene " + ws.file("room.txt") + " --traj " +
                       ws.file("orbit.txt") + " " + ws.small_camera() + " --out ";
    REQUIRE(run_cli_process(base + ws.file("a.gmm")).exit_code == 0);
    REQUIRE(run_cli_process(base + ws.file("b.gmm")).exit_code == 0);
    CHECK(slurp(ws.file("a.gmm")) == slurp(ws.file("b.gmm")));
}

TEST_CASE("build reports usage and input errors with the right exit codes") {
    Workspace ws;
    auto no_source = run_cli_process("build --out " + ws.file("x.gmm"));
    CHECK(no_source.exit_code == 1);

    auto missing_traj = run_cli_process("build --scene " + ws.file("room.txt") +
                                        " --traj /nonexistent/traj.txt --out " +
                                        ws.file("x.gmm"));
    CHECK(missing_traj.exit_code == 2);
    CHECK(missing_traj.output.find("trajectory") != std::string::npos);

    auto unknown_key = run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                                       ws.file("orbit.txt") + " --set nope=1 --out " +
                                       ws.file("x.gmm"));
    CHECK(unknown_key.exit_code == 2);
    CHECK(unknown_key.output.find("unknown key") != std::string::npos);
}

TEST_CASE("config file loads and command line overrides win") {
    Workspace ws;
    {
        std::ofstream cfg(ws.file("run.cfg"));
        cfg << "# comment\n";
        cfg << "width=48\nheight=36\nfx=41.57\nfy=41.57\ncx=24\ncy=18\n";
        cfg << "seed=5\n";
        cfg << "n_min=12\n";
    }
    auto r = run_cli_process("build --config " + ws.file("run.cfg") + " --set n_min=9 --scene " +
                             ws.file("room.txt") + " --traj " + ws.file("orbit.txt") +
                             " --out " + ws.file("cfg.gmm"));
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("n_min=9") != std::string::npos);  // resolved config logged
    CHECK(r.output.find("seed=5") != std::string::npos);
}

TEST_CASE("query prints probabilities, statuses, and visit counts") {
    Workspace ws;
    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("q.gmm"))
                .exit_code == 0);

    auto far = run_cli_process("query --map " + ws.file("q.gmm") + " --point 900,900,900");
    REQUIRE(far.exit_code == 0);
    CHECK(far.output.find("0.5 unexplored") != std::string::npos);

    auto wall = run_cli_process("query --map " + ws.file("q.gmm") + " --point 1.99,0,1.25");
    REQUIRE(wall.exit_code == 0);
    CHECK(wall.output.find("explored") != std::string::npos);

    auto bad = run_cli_process("query --map " + ws.file("q.gmm") + " --point 1.0,2.0");
    CHECK(bad.exit_code == 1);

    auto no_args = run_cli_process("query --map " + ws.file("q.gmm"));
    CHECK(no_args.exit_code == 1);
}

TEST_CASE("trajectory query probabilities are batch-size invariant") {
    Workspace ws;
    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("t.gmm"))
                .exit_code == 0);
    {
        std::ofstream traj(ws.file("path.txt"));
        traj << "0 -1 0 1.25 0 0 0 1\n";
        traj << "1 1 0.5 1.25 0 0 0 1\n";
    }
    auto b1 = run_cli_process("query --map " + ws.file("t.gmm") + " --traj " + ws.file("path.txt") +
                              " --step 0.1 --batch 1");
    auto b16 = run_cli_process("query --map " + ws.file("t.gmm") + " --traj " +
                               ws.file("path.txt") + " --step 0.1 --batch 16");
    REQUIRE(b1.exit_code == 0);
    REQUIRE(b16.exit_code == 0);

    auto probabilities = [](const std::string& text) {
        std::vector<std::string> lines;
        std::istringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.find("explored") != std::string::npos) lines.push_back(line);
        }
        return lines;
    };
    CHECK(probabilities(b1.output) == probabilities(b16.output));

    auto visits = [](const std::string& text) {
        size_t at = text.find("nodes_visited=");
        REQUIRE(at != std::string::npos);
        return std::stoull(text.substr(at + 14));
    };
    CHECK(visits(b16.output) < visits(b1.output));
}

TEST_CASE("eval reports auc and map size, and appends csv") {
    Workspace ws;
    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("e.gmm"))
                .exit_code == 0);
    auto r = run_cli_process("eval --map " + ws.file("e.gmm") + " --scene " + ws.file("room.txt") +
                             " --traj " + ws.file("orbit.txt") + " " + ws.small_camera() +
                             " --csv " + ws.file("rows.csv"));
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("auc=") != std::string::npos);
    CHECK(r.output.find("map_bytes=") != std::string::npos);

    std::string csv = slurp(ws.file("rows.csv"));
    CHECK(csv.find("label,") != std::string::npos);  // header written once
    CHECK(csv.find("eval,") != std::string::npos);

    auto unwritable = run_cli_process("eval --map " + ws.file("e.gmm") + " --scene " +
                                      ws.file("room.txt") + " --traj " + ws.file("orbit.txt") +
                                      " " + ws.small_camera() + " --csv /nonexistent/dir/x.csv");
    CHECK(unwritable.exit_code == 2);
}

TEST_CASE("eval on an empty map yields auc 0.5") {
    Workspace ws;
    GaussianMap empty;
    save_map(ws.file("empty.gmm"), empty);
    auto r = run_cli_process("eval --map " + ws.file("empty.gmm") + " --scene " +
                             ws.file("room.txt") + " --traj " + ws.file("orbit.txt") + " " +
                             ws.small_camera());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("auc=0.5") != std::string::npos);
}

TEST_CASE("slice renders yellow for empty maps and wall colors for plane maps") {
    Workspace ws;
    GaussianMap empty;
    save_map(ws.file("empty.gmm"), empty);
    auto r = run_cli_process("slice --map " + ws.file("empty.gmm") +
                             " --z 1 --res 0.5 --min -1,-1,0 --max 1,1,2 --out " +
                             ws.file("empty.ppm"));
    REQUIRE(r.exit_code == 0);
    std::string ppm = slurp(ws.file("empty.ppm"));
    size_t header_end = ppm.find("255\n") + 4;
    for (size_t i = header_end; i + 2 < ppm.size(); i += 3) {
        REQUIRE(static_cast<unsigned char>(ppm[i]) == 255);
        REQUIRE(static_cast<unsigned char>(ppm[i + 1]) == 255);
        REQUIRE(static_cast<unsigned char>(ppm[i + 2]) == 0);
    }

    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("s.gmm"))
                .exit_code == 0);
    // res 0.08 from -2.2 puts grid centers exactly on the x = +-2 walls;
    // noise-free synthetic walls are only epsilon-regularization thick.
    auto wall = run_cli_process("slice --map " + ws.file("s.gmm") +
                                " --z 1.25 --res 0.08 --min -2.2,-2.2,0 --max 2.2,2.2,2.5 --out " +
                                ws.file("s.ppm"));
    REQUIRE(wall.exit_code == 0);
    std::string img = slurp(ws.file("s.ppm"));
    size_t at = img.find("255\n") + 4;
    bool has_reddish = false, has_bluish = false;
    for (size_t i = at; i + 2 < img.size(); i += 3) {
        auto r8 = static_cast<unsigned char>(img[i]);
        auto b8 = static_cast<unsigned char>(img[i + 2]);
        if (r8 > 200 && b8 < 50 && static_cast<unsigned char>(img[i + 1]) < 120) has_reddish = true;
        if (b8 > 150 && r8 < 100) has_bluish = true;
    }
    CHECK(has_reddish);
    CHECK(has_bluish);

    auto zero_res = run_cli_process("slice --map " + ws.file("s.gmm") +
                                    " --z 1 --res 0 --min -1,-1,0 --max 1,1,2 --out " +
                                    ws.file("zr.ppm"));
    CHECK(zero_res.exit_code == 1);
}

TEST_CASE("slice output is deterministic") {
    Workspace ws;
    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("d.gmm"))
                .exit_code == 0);
    std::string args = "slice --map " + ws.file("d.gmm") +
                       " --z 1.25 --res 0.2 --min -2,-2,0 --max 2,2,2.5 --out ";
    REQUIRE(run_cli_process(args + ws.file("d1.ppm")).exit_code == 0);
    REQUIRE(run_cli_process(args + ws.file("d2.ppm")).exit_code == 0);
    CHECK(slurp(ws.file("d1.ppm")) == slurp(ws.file("d2.ppm")));
}

TEST_CASE("stats summarizes a map") {
    Workspace ws;
    REQUIRE(run_cli_process("build --scene " + ws.file("room.txt") + " --traj " +
                            ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                            ws.file("st.gmm"))
                .exit_code == 0);
    auto r = run_cli_process("stats --map " + ws.file("st.gmm"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("gaussians=") != std::string::npos);
    CHECK(r.output.find("occupied=") != std::string::npos);
    CHECK(r.output.find("quantized=0") != std::string::npos);

    auto missing = run_cli_process("stats --map /nonexistent.gmm");
    CHECK(missing.exit_code == 2);
}

TEST_CASE("compare emits eight construction rows and two query rows") {
    Workspace ws;
    save_trajectory(ws.file("orbit2.txt"), test::orbit_trajectory(2));
    auto r = run_cli_process("compare --scene " + ws.file("room.txt") + " --traj " +
                             ws.file("orbit2.txt") + " " + ws.small_camera() + " --csv " +
                             ws.file("cmp.csv"));
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    std::string csv = slurp(ws.file("cmp.csv"));
    int rows = 0;
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 10);
    for (const char* label :
         {"baseline_exact_full", "baseline_exact_quant", "baseline_delayed4_full",
          "baseline_delayed4_quant", "direct_exact_full", "direct_exact_quant",
          "direct_delayed4_full", "direct_delayed4_quant", "query_single", "query_batch"}) {
        CHECK(csv.find(label) != std::string::npos);
    }
    CHECK(r.output.find("construction_fgbg_ray_ratio=") != std::string::npos);
    CHECK(r.output.find("query_visit_ratio=") != std::string::npos);
}

TEST_CASE("build from a PGM dataset associates poses by timestamp") {
    Workspace ws;
    CameraIntrinsics intr = test::desk_intrinsics(48, 36);
    SyntheticScene scene = test::box_room_scene();
    auto traj = test::orbit_trajectory(4);  // timestamps 0.0, 0.1, 0.2, 0.3

    std::ofstream list(ws.file("depth.txt"));
    list << "# timestamp path\n";
    for (size_t i = 0; i < traj.size(); ++i) {
        DepthFrame f = render_synthetic(scene, traj[i].pose, intr, 8.0);
        std::string name = "frame" + std::to_string(i) + ".pgm";
        save_depth_pgm(ws.file(name), f, intr);
        list << traj[i].timestamp + 0.003 << " " << name << "\n";  // within the window
    }
    // One orphan frame far from any pose timestamp.
    {
        DepthFrame f = render_synthetic(scene, traj[0].pose, intr, 8.0);
        save_depth_pgm(ws.file("orphan.pgm"), f, intr);
        list << "9.5 orphan.pgm\n";
    }
    list.close();

    auto r = run_cli_process("build --depth-list " + ws.file("depth.txt") + " --traj " +
                             ws.file("orbit.txt") + " " + ws.small_camera() + " --out " +
                             ws.file("dataset.gmm"));
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("skipped 1 frames") != std::string::npos);
    GaussianMap map = load_map(ws.file("dataset.gmm"));
    CHECK(map.count_kind(GaussianKind::occupied) > 0);
    CHECK(map.count_kind(GaussianKind::free) > 0);

    // Against labeled samples from the rendered frames the dataset-built map
    // still separates occupied from free (PGM depths are 0.2 mm quantized).
    auto ev = run_cli_process("eval --map " + ws.file("dataset.gmm") + " --scene " +
                              ws.file("room.txt") + " --traj " + ws.file("orbit.txt") + " " +
                              ws.small_camera());
    REQUIRE(ev.exit_code == 0);
    size_t at = ev.output.find("auc=");
    REQUIRE(at != std::string::npos);
    CHECK(std::stod(ev.output.substr(at + 4)) > 0.9);
}

TEST_CASE("subcommand is required") {
    auto r = run_cli_process("");
    CHECK(r.exit_code == 1);
    auto help = run_cli_process("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("build") != std::string::npos);
}
