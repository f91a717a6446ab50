#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "gmap/map_io.hpp"
#include "gmap/query.hpp"
#include "test_support.hpp"

using namespace gmap;

namespace {

GaussianMap random_map(SplitMix64& rng, int n, double extent = 10.0, bool quant = false) {
    MapParams params;
    params.quant.enabled = quant;
    GaussianMap map(params);
    for (int i = 0; i < n; ++i) {
        GaussianKind kind = rng.next_double() < 0.5 ? GaussianKind::occupied : GaussianKind::free;
        map.add(test::random_gaussian(rng, kind, extent, 0.005, 0.25));
    }
    return map;
}

bool results_identical(const QueryResult& a, const QueryResult& b) {
    return a.probability == b.probability && a.status == b.status &&
           a.n_gaussians_evaluated == b.n_gaussians_evaluated;
}

std::vector<Vec3> clustered_coords(SplitMix64& rng, int n, double extent, double spread) {
    Vec3 center(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                rng.uniform(-extent, extent));
    std::vector<Vec3> coords;
    for (int i = 0; i < n; ++i) {
        coords.push_back(center + Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread),
                                       rng.uniform(-spread, spread)));
    }
    return coords;
}

}  // namespace

TEST_CASE("regress handles the empty, dominant, and symmetric cases") {
    CHECK(regress({}, Vec3::Zero(), 1e-6).status == QueryStatus::unexplored);
    CHECK(regress({}, Vec3::Zero(), 1e-6).probability == 0.5);

    Gaussian3 g;
    g.kind = GaussianKind::occupied;
    g.weight = 1000.0;
    g.mean = Vec3(1, 1, 1);
    g.cov = SymMat3::diagonal(0.01, 0.01, 0.01);
    std::vector<Gaussian3> occ{g};
    QueryResult r = regress(occ, g.mean, 1e-6);
    CHECK(r.status == QueryStatus::explored);
    CHECK(r.probability > 0.99);

    Gaussian3 f = g;
    f.kind = GaussianKind::free;
    std::vector<Gaussian3> both{g, f};
    for (const Vec3& x : {g.mean, Vec3(g.mean + Vec3(0.05, 0, 0)), Vec3(g.mean + Vec3(0, 0.2, 0.1))}) {
        QueryResult sym = regress(both, x, 1e-6);
        CHECK(std::fabs(sym.probability - 0.5) <= 1e-12);
        CHECK(sym.status == QueryStatus::explored);
    }
}

TEST_CASE("query far outside the map is unexplored with a root-only visit") {
    SplitMix64 rng(83);
    GaussianMap map = random_map(rng, 200);
    std::uint64_t before = map.index().stats().nodes_visited;
    QueryResult r = query_single(map, Vec3(1000, 1000, 1000));
    CHECK(r.status == QueryStatus::unexplored);
    CHECK(r.probability == 0.5);
    CHECK(map.index().stats().nodes_visited - before == 1);
}

TEST_CASE("query at a dominant occupied mean is confidently occupied") {
    MapParams params;
    GaussianMap map(params);
    Gaussian3 g;
    g.kind = GaussianKind::occupied;
    g.weight = 5000.0;
    g.mean = Vec3(0.5, -1, 2);
    g.cov = SymMat3::diagonal(0.02, 0.02, 0.02);
    map.add(g);
    QueryResult r = query_single(map, g.mean);
    CHECK(r.probability > 0.99);
    CHECK(r.n_gaussians_evaluated == 1);
}

TEST_CASE("query_single equals regress over a brute-force candidate scan") {
    SplitMix64 rng(89);
    GaussianMap map = random_map(rng, 600);
    for (int q = 0; q < 300; ++q) {
        Vec3 x(rng.uniform(-11, 11), rng.uniform(-11, 11), rng.uniform(-11, 11));
        QueryResult got = query_single(map, x);
        QueryResult want = regress(test::brute_force_candidates(map, x), x, kDefaultPriorCount);
        REQUIRE(results_identical(got, want));
        REQUIRE(got.probability >= 0.0);
        REQUIRE(got.probability <= 1.0);
    }
}

TEST_CASE("batch of one is identical to a single query including visits") {
    SplitMix64 rng(97);
    GaussianMap map = random_map(rng, 400);
    for (int q = 0; q < 50; ++q) {
        Vec3 x(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
        std::uint64_t v0 = map.index().stats().nodes_visited;
        QueryResult single = query_single(map, x);
        std::uint64_t single_visits = map.index().stats().nodes_visited - v0;

        v0 = map.index().stats().nodes_visited;
        auto batch = query_batch(map, std::vector<Vec3>{x});
        std::uint64_t batch_visits = map.index().stats().nodes_visited - v0;

        REQUIRE(results_identical(single, batch[0]));
        REQUIRE(single_visits == batch_visits);
    }
}

TEST_CASE("batch and single are bit-identical on clustered and trajectory coordinates") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        GaussianMap map = random_map(rng, 300 + static_cast<int>(rng.next_u64() % 700));
        for (int set = 0; set < 10; ++set) {
            std::vector<Vec3> coords;
            if (set % 2 == 0) {
                coords = clustered_coords(rng, 1 + static_cast<int>(rng.next_u64() % 16), 9.0,
                                          rng.uniform(0.1, 1.5));
            } else {
                Vec3 a(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
                Vec3 b = a + Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
                std::vector<Vec3> waypoints{a, b};
                coords = sample_trajectory(waypoints, 0.2);
                if (coords.size() > 16) coords.resize(16);
            }

            std::uint64_t v0 = map.index().stats().nodes_visited;
            auto batch = query_batch(map, coords);
            std::uint64_t batch_visits = map.index().stats().nodes_visited - v0;

            v0 = map.index().stats().nodes_visited;
            std::vector<QueryResult> singles;
            for (const auto& x : coords) singles.push_back(query_single(map, x));
            std::uint64_t single_visits = map.index().stats().nodes_visited - v0;

            REQUIRE(batch.size() == singles.size());
            for (size_t i = 0; i < batch.size(); ++i) {
                REQUIRE(results_identical(batch[i], singles[i]));
            }
            REQUIRE(batch_visits <= single_visits);
        }
    }
}

TEST_CASE("clustered batch visits strictly fewer nodes than the singles sum") {
    SplitMix64 rng(103);
    GaussianMap map = random_map(rng, 2000, 15.0);
    std::vector<Vec3> coords = clustered_coords(rng, 16, 10.0, 0.5);

    std::uint64_t v0 = map.index().stats().nodes_visited;
    auto batch = query_batch(map, coords);
    std::uint64_t batch_visits = map.index().stats().nodes_visited - v0;

    v0 = map.index().stats().nodes_visited;
    for (const auto& x : coords) query_single(map, x);
    std::uint64_t single_visits = map.index().stats().nodes_visited - v0;

    CHECK(batch_visits < single_visits);
}

TEST_CASE("batch rejects empty and oversized coordinate lists") {
    SplitMix64 rng(107);
    GaussianMap map = random_map(rng, 50);
    CHECK_THROWS_AS(query_batch(map, std::vector<Vec3>{}), ConfigError);
    std::vector<Vec3> too_many(17, Vec3::Zero());
    CHECK_THROWS_AS(query_batch(map, too_many), ConfigError);
}

TEST_CASE("trajectory sampling endpoints, spacing, and joints") {
    std::vector<Vec3> waypoints{Vec3(0, 0, 0), Vec3(1, 0, 0)};
    auto samples = sample_trajectory(waypoints, 0.25);
    REQUIRE(samples.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(samples[i].x() == doctest::Approx(0.25 * i));

    std::vector<Vec3> joints{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)};
    auto js = sample_trajectory(joints, 0.5);  // degenerate middle piece skipped
    for (size_t i = 1; i < js.size(); ++i) CHECK((js[i] - js[i - 1]).norm() > 1e-12);

    CHECK_THROWS_AS(sample_trajectory(std::vector<Vec3>{Vec3::Zero()}, 0.25), ConfigError);
    CHECK_THROWS_AS(sample_trajectory(waypoints, 0.0), ConfigError);
}

TEST_CASE("query_trajectory equals the flat map of singles") {
    SplitMix64 rng(109);
    GaussianMap map = random_map(rng, 800);
    std::vector<Vec3> waypoints{Vec3(-3, -3, -3), Vec3(0, 1, 0), Vec3(4, 2, 2)};
    BatchConfig cfg;
    cfg.batch_size = 16;
    auto result = query_trajectory(map, waypoints, 0.15, cfg);
    auto samples = sample_trajectory(waypoints, 0.15);
    REQUIRE(result.size() == samples.size());
    CHECK(samples.size() > 40);  // exercises several chunks
    for (size_t i = 0; i < samples.size(); ++i) {
        REQUIRE(results_identical(result[i], query_single(map, samples[i])));
    }
}

TEST_CASE("empty map serializes to a 36-byte file and loads back empty") {
    GaussianMap map;
    auto bytes = serialize_map(map);
    CHECK(bytes.size() == 36);
    CHECK(serialized_map_bytes(map) == 36);
    GaussianMap loaded = load_map_bytes(bytes, "mem");
    CHECK(loaded.size() == 0);
}

TEST_CASE("full-precision round trip is bit exact") {
    SplitMix64 rng(113);
    GaussianMap map = random_map(rng, 1000);
    auto bytes = serialize_map(map);
    CHECK(bytes.size() == 36 + 1000 * kFullRecordBytes);
    CHECK(serialized_map_bytes(map) == bytes.size());

    GaussianMap loaded = load_map_bytes(bytes, "mem");
    REQUIRE(loaded.size() == map.size());
    CHECK(loaded.params().bbox_k == map.params().bbox_k);
    auto it = map.store().begin();
    auto jt = loaded.store().begin();
    for (; it != map.store().end(); ++it, ++jt) {
        REQUIRE(it->id == jt->id);  // dense ids reproduce
        REQUIRE(it->kind == jt->kind);
        REQUIRE(it->weight == jt->weight);
        REQUIRE(it->mean == jt->mean);
        REQUIRE(it->cov == jt->cov);
    }
    loaded.audit();

    CHECK(serialize_map(loaded) == bytes);  // stable under re-serialization
}

TEST_CASE("quantized round trip is bit exact with 34-byte records") {
    SplitMix64 rng(127);
    GaussianMap map = random_map(rng, 500, 10.0, true);
    auto bytes = serialize_map(map);
    CHECK(bytes.size() == 36 + 500 * kQuantRecordBytes);

    GaussianMap loaded = load_map_bytes(bytes, "mem");
    REQUIRE(loaded.size() == map.size());
    CHECK(loaded.params().quant.enabled);
    auto it = map.store().begin();
    auto jt = loaded.store().begin();
    for (; it != map.store().end(); ++it, ++jt) {
        REQUIRE(it->weight == jt->weight);
        REQUIRE(it->mean == jt->mean);
        REQUIRE(it->cov == jt->cov);
    }
    CHECK(serialize_map(loaded) == bytes);
}

TEST_CASE("size formula matches the serialized length for random maps") {
    SplitMix64 rng(131);
    for (int trial = 0; trial < 20; ++trial) {
        bool quant = rng.next_double() < 0.5;
        GaussianMap map = random_map(rng, static_cast<int>(rng.next_u64() % 200), 8.0, quant);
        CHECK(serialized_map_bytes(map) == serialize_map(map).size());
    }
}

TEST_CASE("map file corruption and format errors are distinct") {
    SplitMix64 rng(137);
    GaussianMap map = random_map(rng, 10);
    auto good = serialize_map(map);

    auto corrupted = good;
    corrupted[40] ^= 0xff;  // payload byte; CRC must catch it
    CHECK_THROWS_WITH_AS(load_map_bytes(corrupted, "mem"), doctest::Contains("checksum"),
                         ParseError);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(load_map_bytes(bad_magic, "mem"), doctest::Contains("magic"), ParseError);

    auto bad_version = good;
    bad_version[4] = 9;
    // Recompute the CRC so only the version is wrong.
    std::uint32_t crc = crc32(bad_version.data(), bad_version.size() - 4);
    std::memcpy(bad_version.data() + bad_version.size() - 4, &crc, 4);
    CHECK_THROWS_WITH_AS(load_map_bytes(bad_version, "mem"), doctest::Contains("version"),
                         ParseError);

    auto truncated = good;
    truncated.resize(truncated.size() - 7);
    CHECK_THROWS_WITH_AS(load_map_bytes(truncated, "mem"), doctest::Contains("truncated"),
                         ParseError);

    std::vector<std::uint8_t> tiny{1, 2, 3};
    CHECK_THROWS_AS(load_map_bytes(tiny, "mem"), ParseError);
}

TEST_CASE("save_map and load_map round trip through a file") {
    SplitMix64 rng(139);
    GaussianMap map = random_map(rng, 64);
    auto path = std::filesystem::temp_directory_path() / "gmap_io_test.gmm";
    save_map(path.string(), map);
    GaussianMap loaded = load_map(path.string());
    CHECK(loaded.size() == 64);
    CHECK(serialize_map(loaded) == serialize_map(map));
    std::filesystem::remove(path);
}
