#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>

#include "conewidth/config.hpp"
#include "conewidth/generators.hpp"
#include "conewidth/io.hpp"

using namespace conewidth;

namespace {
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
};

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("pbm round trip preserves occupancy and domain") {
    GridDomain dom = GridDomain::cover(Vec{0.25, -0.5}, Vec{1.25, 0.75}, 1.0 / 32, 3);
    GridSet G(dom);
    Rng rng(2024);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        if (!dom.cell_in_padding(iv) && rng.uniform() < 0.37) G.set_cell(iv, true);
    }
    std::string path = tmp_path("cw_test.pbm");
    write_pbm(G, path);
    GridSet back = read_pbm(path);
    CHECK(back == G);
    std::remove(path.c_str());
    std::remove((path + ".hdr").c_str());
}

TEST_CASE("point cloud csv round trip: directed, full-space, bare points") {
    PointCloud E(2, Vec{-1.0, 0.0}, Vec{2.0, 1.0});
    NormalData directed;
    directed.direction = normalized(Vec{0.6, 0.4});
    directed.delta = 0.25;
    E.add(Vec{0.5, 0.5}, directed);
    NormalData full;
    full.full_space = true;
    full.delta = 0.5;
    full.direction = Vec{1.0, 0.0};
    E.add(Vec{1.5, 0.25}, full);
    E.add(Vec{-0.5, 0.75});

    std::string path = tmp_path("cw_test.csv");
    write_pointcloud_csv(E, path);
    PointCloud back = read_pointcloud_csv(path);
    REQUIRE(back.size() == 3);
    CHECK(back.box_lo()[0] == E.box_lo()[0]);
    CHECK(back.box_hi()[1] == E.box_hi()[1]);
    CHECK(back.point(0)[0] == E.point(0)[0]);
    REQUIRE(back.normal(0).has_value());
    CHECK_FALSE(back.normal(0)->full_space);
    CHECK(back.normal(0)->direction[0] == doctest::Approx(directed.direction[0]).epsilon(1e-15));
    CHECK(back.normal(0)->delta == 0.25);
    REQUIRE(back.normal(1).has_value());
    CHECK(back.normal(1)->full_space);
    CHECK(back.normal(1)->delta == 0.5);
    CHECK_FALSE(back.normal(2).has_value());
    std::remove(path.c_str());
}

TEST_CASE("scalar field binary round trip is bit-exact") {
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 0.5}, 1.0 / 16, 2);
    ScalarField f(dom);
    Rng rng(77);
    for (std::size_t i = 0; i < dom.node_count(); ++i) f.at(i) = rng.uniform() * 3.0 - 1.5;
    std::string path = tmp_path("cw_test.cwf");
    write_field(f, path);
    ScalarField back = read_field(path);
    CHECK(back.domain() == dom);
    for (std::size_t i = 0; i < dom.node_count(); ++i) CHECK(back.at(i) == f.at(i));
    std::remove(path.c_str());
}

TEST_CASE("config: parse, defaults, unknown keys, overrides") {
    std::string path = tmp_path("cw_test.cfg");
    {
        std::FILE* fp = std::fopen(path.c_str(), "w");
        std::fputs("# comment\ngrid.h = 0.0078125\nstep.s_max = 2\n", fp);
        std::fclose(fp);
    }
    RunConfig cfg = RunConfig::from_file(path);
    CHECK(cfg.get_double("grid.h", 0.0) == doctest::Approx(0.0078125));
    CHECK(cfg.get_int("step.s_max", 3) == 2);
    CHECK(cfg.get_int("grid.padding", 4) == 4);  // default

    cfg.validate({"grid.h", "step.s_max"});
    CHECK_THROWS(cfg.validate({"grid.h"}));  // step.s_max now unknown

    cfg.set("grid.padding", "8");
    CHECK(cfg.get_int("grid.padding", 4) == 8);
    std::remove(path.c_str());
}

TEST_CASE("width result serialization mentions value and path") {
    GridDomain dom(Vec{0.0, 0.0}, 0.25, std::vector<int>{4, 4}, 0);
    GridSet G(dom);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) G.set_cell(dom.cell_at(f), true);
    WidthResult w = width_open(G, Cone(Vec{1.0, 0.0}, 1.0), 1);
    std::ostringstream os;
    write_width_result(w, os);
    CHECK(os.str().find("value = 1") != std::string::npos);
    CHECK(os.str().find("path =") != std::string::npos);
}
