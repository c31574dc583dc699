#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wpflow/config.hpp"
#include "wpflow/io.hpp"

using namespace wpflow;
namespace fs = std::filesystem;

TEST_CASE("config parsing: sections, comments, lists") {
    const std::string text = R"(
# a comment
[metric]
x_max = 1.5
eta = 0.125         # trailing comment
torus_sides = 1.0 2.0

[escape]
eps = 0.1 0.05, 0.025
n = 500
)";
    const Config cfg = Config::parse(text);
    CHECK(cfg.get_double("metric", "x_max", 0.0) == 1.5);
    CHECK(cfg.get_double("metric", "eta", 0.0) == 0.125);
    CHECK(cfg.get_int("escape", "n", 0) == 500);
    CHECK(cfg.get_double("metric", "missing", 7.0) == 7.0);

    const auto eps = cfg.get_list("escape", "eps", {});
    REQUIRE(eps.size() == 3);
    CHECK(eps[0] == 0.1);
    CHECK(eps[2] == 0.025);

    const MetricSpec spec = metric_spec_from_config(cfg);
    CHECK(spec.x_max == 1.5);
    CHECK(spec.eta == 0.125);
    CHECK(spec.torus_sides[1] == 2.0);
}

TEST_CASE("config parse errors carry location and field diagnostics") {
    try {
        Config::parse("[metric\nx = 1\n", "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:1") != std::string::npos);
    }
    try {
        Config::parse("[metric]\nloose line\n", "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
    }
    const Config cfg = Config::parse("[metric]\neta = fast\n");
    CHECK_THROWS_AS(cfg.get_double("metric", "eta", 0.0), ConfigError);

    // invalid metric block is a configuration error, not a crash
    const Config bad = Config::parse("[metric]\neta = 1.5\n");
    CHECK_THROWS_AS(metric_spec_from_config(bad), ConfigError);
}

TEST_CASE("metric spec round trip through its config block") {
    MetricSpec spec;
    spec.x_max = 1.25;
    spec.x_floor = 1e-5;
    spec.tau_period = 0.75;
    spec.torus_sides = {2.0, 3.0};
    spec.eta = 0.125;
    const Config cfg = Config::parse(metric_spec_to_config(spec));
    const MetricSpec back = metric_spec_from_config(cfg);
    CHECK(back.x_max == spec.x_max);
    CHECK(back.x_floor == spec.x_floor);
    CHECK(back.tau_period == spec.tau_period);
    CHECK(back.torus_sides[0] == spec.torus_sides[0]);
    CHECK(back.torus_sides[1] == spec.torus_sides[1]);
    CHECK(back.eta == spec.eta);
}

TEST_CASE("csv output is byte-stable") {
    const fs::path dir = fs::temp_directory_path() / "wpflow_test_csv";
    fs::create_directories(dir);

    auto write_once = [&](const fs::path& p) {
        CsvWriter csv(p, {"a", "b"});
        csv.add_numeric_row({1.0 / 3.0, 2.0});
        csv.add_numeric_row({1e-17, -0.25});
        return csv.write();
    };
    const auto p1 = write_once(dir / "one.csv");
    const auto p2 = write_once(dir / "two.csv");
    CHECK(file_checksum(p1) == file_checksum(p2));

    std::ifstream in(p1);
    std::string header;
    std::getline(in, header);
    CHECK(header == "a,b");
    std::string row;
    std::getline(in, row);
    CHECK(row == "0.33333333333333331,2");
    fs::remove_all(dir);
}

TEST_CASE("trajectory csv carries the standard columns") {
    MetricSpec spec;
    PhasePoint v0{{0.5, 0.0, 0.25, 0.25}, {0.0, 0.0, 1.0, 0.0}};
    IntegratorOptions opts;
    opts.sample_dt = 0.25;
    const Trajectory traj = integrate(v0, 1.0, spec, opts);

    const fs::path dir = fs::temp_directory_path() / "wpflow_test_traj";
    const auto path = trajectory_csv(traj, spec, dir / "traj.csv");
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x,tau,y1,y2,vx,vtau,vy1,vy2,f,r");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == traj.times.size());

    const auto j = trajectory_manifest_json(traj);
    CHECK(j["steps"].get<std::uint64_t>() == traj.stats.steps);
    CHECK(j["hit_floor"].get<bool>() == false);
    fs::remove_all(dir);
}

TEST_CASE("seed derivation separates labels and indices") {
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
    CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
    CHECK(derive_seed(1, "a", 7) == derive_seed(1, "a", 7));

    // streams from nearby indices decorrelate immediately
    Rng r1 = Rng::derive(1, "a", 0);
    Rng r2 = Rng::derive(1, "a", 1);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if ((r1.next_u64() & 1) == (r2.next_u64() & 1)) ++same;
    CHECK(same > 16);
    CHECK(same < 48);
}
