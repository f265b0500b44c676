#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "conewidth/cone.hpp"
#include "conewidth/distance.hpp"
#include "conewidth/field.hpp"
#include "conewidth/generators.hpp"
#include "conewidth/grid.hpp"

using namespace conewidth;

namespace {
// Small deterministic generator for property tests.
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

GridSet full_unit_square(double h, int padding) {
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, padding);
    GridSet G(dom);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        if (!dom.cell_in_padding(iv)) G.set_cell(iv, true);
    }
    return G;
}
}  // namespace

TEST_CASE("cone_contains: axis, orthogonal, zero") {
    Cone c(Vec{1.0, 0.0}, 0.5);
    CHECK(cone_contains(c, Vec{1.0, 0.0}));
    CHECK_FALSE(cone_contains(c, Vec{0.0, 1.0}));
    CHECK(cone_contains(c, Vec{0.0, 0.0}));
}

TEST_CASE("cone_contains: positive homogeneity") {
    Rng rng(12345);
    Cone c(Vec{3.0, 4.0}, 0.6);  // axis gets normalized
    CHECK(std::abs(norm(c.axis()) - 1.0) < 1e-12);
    for (int i = 0; i < 200; ++i) {
        Vec v{rng.uniform() * 4.0 - 2.0, rng.uniform() * 4.0 - 2.0};
        double lam = rng.uniform() * 10.0 + 1e-3;
        CHECK(cone_contains(c, v) == cone_contains(c, v * lam));
    }
}

TEST_CASE("cone: invalid aperture rejected") {
    CHECK_THROWS(Cone(Vec{1.0, 0.0}, 0.0));
    CHECK_THROWS(Cone(Vec{1.0, 0.0}, 1.5));
    CHECK_THROWS(Cone(Vec{0.0, 0.0}, 0.5));
}

TEST_CASE("distance_to_complement: single cell, empty set, unit square") {
    double h = 0.125;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);

    GridSet single(dom);
    single.set_cell(Index{4, 4}, true);
    Vec center = dom.node(Index{4, 4});
    center[0] += h / 2.0;
    center[1] += h / 2.0;
    CHECK(distance_to_complement(single, center) == doctest::Approx(h / 2.0).epsilon(1e-12));

    GridSet empty(dom);
    CHECK(distance_to_complement(empty, center) == 0.0);

    GridSet square = full_unit_square(h, 2);
    CHECK(distance_to_complement(square, Vec{0.3, 0.4}) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("complement distance field matches point queries and is 1-Lipschitz") {
    double h = 0.125;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    GridSet G(dom);
    Rng rng(99);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        if (!dom.cell_in_padding(iv) && rng.uniform() < 0.6) G.set_cell(iv, true);
    }
    auto field = complement_distance_at_nodes(G);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        CHECK(field[f] == doctest::Approx(distance_to_complement(G, x)).epsilon(1e-10));
    }
    // 1-Lipschitz over random node pairs
    for (int t = 0; t < 300; ++t) {
        std::size_t a = rng.next() % dom.node_count();
        std::size_t b = rng.next() % dom.node_count();
        Vec xa = dom.node(dom.node_at(a)), xb = dom.node(dom.node_at(b));
        CHECK(std::abs(field[a] - field[b]) <= dist(xa, xb) + 1e-12);
    }
}

TEST_CASE("neighborhood: single ball, empty, monotone, exhaustive oracle") {
    double h = 0.125;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);

    PointCloud one(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    one.add(Vec{0.5, 0.5});
    Neighborhood nb = neighborhood(one, h, dom);
    CHECK(nb.set.count() <= 9);
    CHECK(nb.set.count() >= 4);
    CHECK_FALSE(nb.under_resolved);

    PointCloud none(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    CHECK(neighborhood(none, 0.1, dom).set.empty());

    // depth-3 four-corner at r = 4^-3: per-cell exhaustive oracle
    PointCloud cantor = gen_four_corner_cantor(3);
    double r = std::pow(4.0, -3);
    GridDomain fine = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 1.0 / 64, 2);
    Neighborhood got = neighborhood(cantor, r, fine);
    std::size_t expect = 0;
    for (std::size_t f = 0; f < fine.cell_count(); ++f) {
        Index iv = fine.cell_at(f);
        if (fine.cell_in_padding(iv)) continue;
        double dmin = 1e9;
        for (std::size_t p = 0; p < cantor.size(); ++p)
            dmin = std::min(dmin, point_to_cell_distance(fine, iv, cantor.point(p)));
        bool inside = dmin < r;
        CHECK(got.set.occupied(iv) == inside);
        if (inside) ++expect;
    }
    CHECK(got.set.count() == expect);

    // monotone in r
    Neighborhood small = neighborhood(cantor, r / 2, fine);
    CHECK(small.set.subset_of(got.set));
}

TEST_CASE("gen_four_corner_cantor: counts, corner coordinates, nesting") {
    PointCloud d1 = gen_four_corner_cantor(1);
    REQUIRE(d1.size() == 4);
    bool seen[4] = {false, false, false, false};
    const double want[4][2] = {{0, 0}, {0.75, 0}, {0, 0.75}, {0.75, 0.75}};
    for (std::size_t i = 0; i < 4; ++i)
        for (int w = 0; w < 4; ++w)
            if (std::abs(d1.point(i)[0] - want[w][0]) < 1e-14 &&
                std::abs(d1.point(i)[1] - want[w][1]) < 1e-14)
                seen[w] = true;
    for (int w = 0; w < 4; ++w) CHECK(seen[w]);

    CHECK(gen_four_corner_cantor(3).size() == 64);
    CHECK_THROWS(gen_four_corner_cantor(0));
    CHECK_THROWS(gen_four_corner_cantor(9));

    PointCloud d3 = gen_four_corner_cantor(3);
    PointCloud d4 = gen_four_corner_cantor(4);
    // depth-(d+1) points add one IFS term of magnitude (3/4)*4^-d*||corner||,
    // so the tight nesting constant is 3*4^-(d+1)*sqrt(2)
    double cap = 3.0 * std::pow(4.0, -4) * std::sqrt(2.0);
    for (std::size_t i = 0; i < d4.size(); ++i) {
        double dmin = 1e9;
        for (std::size_t j = 0; j < d3.size(); ++j) dmin = std::min(dmin, dist(d4.point(i), d3.point(j)));
        CHECK(dmin <= cap + 1e-12);
    }
}

TEST_CASE("gen_cantor_product: interval endpoints and normals") {
    PointCloud c1 = gen_cantor_product(1.0 / 3.0, 1, 5);
    REQUIRE(c1.size() == 4 * 5);
    for (std::size_t i = 0; i < c1.size(); ++i) {
        double x = c1.point(i)[0];
        bool ok = std::abs(x) < 1e-12 || std::abs(x - 1.0 / 3.0) < 1e-12 ||
                  std::abs(x - 2.0 / 3.0) < 1e-12 || std::abs(x - 1.0) < 1e-12;
        CHECK(ok);
        REQUIRE(c1.normal(i).has_value());
        CHECK(c1.normal(i)->direction[0] == 1.0);
        CHECK(c1.normal(i)->direction[1] == 0.0);
        CHECK(c1.normal(i)->delta == 1.0);
    }

    PointCloud c2 = gen_cantor_product(0.25, 2, 3);
    REQUIRE(c2.size() == 8 * 3);
    const double xs[8] = {0, 1.0 / 16, 3.0 / 16, 0.25, 0.75, 13.0 / 16, 15.0 / 16, 1.0};
    for (std::size_t i = 0; i < c2.size(); ++i) {
        double x = c2.point(i)[0];
        bool ok = false;
        for (double w : xs) ok = ok || std::abs(x - w) < 1e-12;
        CHECK(ok);
    }
    CHECK_THROWS(gen_cantor_product(0.5, 2));
    CHECK_THROWS(gen_cantor_product(0.2, 11));
}

TEST_CASE("gen_graph_family: flat row, apex normal, derived tilt") {
    PointCloud g = gen_graph_family(2, 17);
    // k = 0 row comes first: points (s, 0) with normal (0,1)
    for (int i = 0; i < 17; ++i) {
        CHECK(g.point(i)[1] == 0.0);
        CHECK(g.normal(i)->direction[0] == doctest::Approx(0.0));
        CHECK(g.normal(i)->direction[1] == doctest::Approx(1.0));
    }
    // s = 0, k = 1 -> point (0,1), normal (0,1) since phi'(0) = 0
    bool found_apex = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g.point(i)[0]) < 1e-14 && std::abs(g.point(i)[1] - 1.0) < 1e-14) {
            found_apex = true;
            CHECK(g.normal(i)->direction[1] == doctest::Approx(1.0));
        }
    }
    CHECK(found_apex);
    // s = 0.5, k = 2: phi'(0.5) = -4*0.5*(1-0.25) = -1.5, phi_2' = -0.75,
    // normal ∝ (0.75, 1) normalized (oracle: differentiate (1-s^2)^2 directly)
    double expected_nx = 0.75 / std::sqrt(0.75 * 0.75 + 1.0);
    double expected_ny = 1.0 / std::sqrt(0.75 * 0.75 + 1.0);
    bool found = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec& p = g.point(i);
        if (std::abs(p[0] - 0.5) < 1e-14 && std::abs(p[1] - graph_family_bump(0.5) / 2.0) < 1e-14) {
            found = true;
            CHECK(g.normal(i)->direction[0] == doctest::Approx(expected_nx).epsilon(1e-12));
            CHECK(g.normal(i)->direction[1] == doctest::Approx(expected_ny).epsilon(1e-12));
        }
    }
    CHECK(found);
    // generator invariants: unit normals, points in the declared box
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(norm(g.normal(i)->direction) - 1.0) < 1e-12);
        for (int a = 0; a < 2; ++a) {
            CHECK(g.point(i)[a] >= g.box_lo()[a] - 1e-12);
            CHECK(g.point(i)[a] <= g.box_hi()[a] + 1e-12);
        }
    }
}

TEST_CASE("gen_line_neighborhood_set: first line is horizontal; J-filter") {
    auto lines = enumerate_rational_lines(3);
    CHECK_FALSE(lines[0].vertical);
    CHECK(lines[0].slope == 0.0);
    CHECK(lines[0].intercept == 0.0);

    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 1.0 / 32, 2);
    auto pass = gen_line_neighborhood_set(1, 0.05, Cone(Vec{0.0, 1.0}, 0.5), dom);
    CHECK(pass.kept_lines == 1);
    CHECK(pass.set.count() > 0);

    auto fail = gen_line_neighborhood_set(1, 0.05, Cone(Vec{1.0, 0.0}, 0.5), dom);
    CHECK(fail.kept_lines == 0);
    CHECK(fail.set.empty());
}
