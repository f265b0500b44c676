#include <doctest.h>

#include <cmath>

#include "conewidth/bump.hpp"
#include "conewidth/distance.hpp"
#include "conewidth/generators.hpp"
#include "conewidth/modulus.hpp"
#include "conewidth/mollify.hpp"
#include "conewidth/stages.hpp"
#include "conewidth/theorems.hpp"

using namespace conewidth;

namespace {
GridSet full_box(const GridDomain& dom) {
    GridSet G(dom);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        if (!dom.cell_in_padding(iv)) G.set_cell(iv, true);
    }
    return G;
}
}  // namespace

TEST_CASE("tau_of_sigma: closed form, monotone, small-sigma limit") {
    CHECK(tau_of_sigma(1.5) == doctest::Approx(std::sin(std::atan(0.1))).epsilon(1e-15));
    CHECK(tau_of_sigma(1.5) == doctest::Approx(0.0995037190209989).epsilon(1e-12));
    double prev = 0.0;
    for (double s : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        double t = tau_of_sigma(s);
        CHECK(t > prev);
        CHECK(t < 1.0);
        prev = t;
    }
    double s = 1e-7;
    CHECK(tau_of_sigma(s) / (s / 15.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS(tau_of_sigma(0.0));
}

TEST_CASE("build_partition: single, disjoint, symmetric pair, errors") {
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 1.0 / 32, 2);
    GridSet box = full_box(dom);

    BumpPartition one = build_partition({{Vec{0.5, 0.5}, 0.2, &box}});
    CHECK(one.weight(0, Vec{0.5, 0.5}) == 1.0);
    CHECK(one.weight(0, Vec{0.6, 0.5}) == 1.0);  // normalization of one bump
    CHECK(one.weight(0, Vec{0.9, 0.5}) == 0.0);

    BumpPartition two = build_partition({{Vec{0.25, 0.5}, 0.1, &box}, {Vec{0.75, 0.5}, 0.1, &box}});
    CHECK(two.weight(0, Vec{0.25, 0.5}) == 1.0);
    CHECK(two.weight(1, Vec{0.75, 0.5}) == 1.0);
    CHECK(two.overlap_bound() == 1);

    BumpPartition pair = build_partition({{Vec{0.4, 0.5}, 0.2, &box}, {Vec{0.6, 0.5}, 0.2, &box}});
    CHECK(pair.weight(0, Vec{0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pair.weight(1, Vec{0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-12));

    // ball leaving its carrier
    CHECK_THROWS(build_partition({{Vec{0.05, 0.05}, 0.3, &box}}));
    // uncovered required point
    CHECK_THROWS(build_partition({{Vec{0.5, 0.5}, 0.1, &box}}, {Vec{0.9, 0.9}}));
}

TEST_CASE("bump profile endpoints") {
    CHECK(bump_profile(0.0) == 1.0);
    CHECK(bump_profile(1.0) == 0.0);
    CHECK(bump_profile(-1.0) == 0.0);
    CHECK(bump_profile(0.5) > 0.0);
}

TEST_CASE("mollify_glue: xi = 0 leaves g bit-exact; affine survives") {
    double h = 1.0 / 64;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    GridSet H = full_box(dom);

    ScalarField g(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        g.at(f) = 0.3 * x[0] + 0.2 * x[1];
    }
    VectorField Phi(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) Phi.set(f, Vec{0.3, 0.2});

    ScalarField zero_xi(dom, 0.0), omega(dom, 0.5);
    MollifyResult identity = mollify_glue(g, H, Phi, zero_xi, omega);
    for (std::size_t f = 0; f < dom.node_count(); ++f) CHECK(identity.f.at(f) == g.at(f));

    ScalarField xi(dom, 0.05);
    MollifyResult smoothed = mollify_glue(g, H, Phi, xi, omega);
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        CHECK(std::abs(smoothed.f.at(f) - g.at(f)) <= omega.at(f) + 1e-15);
}

TEST_CASE("mollify_glue: kinked field gradient bound") {
    double h = 1.0 / 128;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 4);
    Vec c{0.5, 0.5};
    ScalarField g(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        g.at(f) = dist(dom.node(dom.node_at(f)), c);
    GridSet H(dom);
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        if (dom.cell_in_padding(iv)) continue;
        Vec lo = dom.node(iv);
        if (dist(Vec{lo[0] + h / 2, lo[1] + h / 2}, c) < 0.25) H.set_cell(iv, true);
    }
    VectorField Phi(dom);
    ScalarField xi(dom, 1.0), omega(dom, 0.05);
    MollifyResult mr = mollify_glue(g, H, Phi, xi, omega);
    CHECK(mr.bump_count > 0);
    CHECK(mr.max_dev <= 0.05 + 1e-15);

    double lipg = g.lipschitz();
    VectorField grad = gradient_field(mr.f);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Index iv = dom.node_at(f);
        bool interior = true;
        for (int dj = -1; dj <= 0; ++dj)
            for (int di = -1; di <= 0; ++di) {
                Index cv{iv[0] + di, iv[1] + dj};
                if (!dom.cell_in_range(cv) || !H.occupied(cv)) interior = false;
            }
        if (!interior) continue;
        CHECK(norm(grad.at(f)) <= xi.at(f) * (1.0 + omega.at(f)) + 4.0 * h * lipg + 1e-12);
    }
}

TEST_CASE("modulus_field: affine cap, eta halving, oscillation oracle") {
    double h = 1.0 / 64;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    GridSet H = full_box(dom);

    ScalarField affine(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        affine.at(f) = 0.4 * x[0] - 0.1 * x[1];
    }
    ScalarField omega(dom, 0.8);
    double eta = 0.5;
    ScalarField xi = modulus_field(affine, H, omega, eta);
    ScalarField rho = rho_field(H);
    // zero oscillation: phi hits the dyadic cap everywhere inside
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        double cap = 0.5 * std::min({rho.at(f), omega.at(f), 1.0});
        if (rho.at(f) < 4 * h) continue;  // boundary band
        double expect = std::min(h / 2.0, cap);
        for (int m = 0; h * std::pow(2.0, m) <= cap; ++m) expect = h * std::pow(2.0, m);
        CHECK(xi.at(f) == doctest::Approx(eta * expect / 12.0).epsilon(1e-12));
    }

    // monotone in eta: xi_{eta/2} <= xi_eta / 2
    ScalarField wavy(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        wavy.at(f) = 0.05 * std::sin(10.0 * x[0]);
    }
    ScalarField xi1 = modulus_field(wavy, H, omega, 0.5);
    ScalarField xi2 = modulus_field(wavy, H, omega, 0.25);
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        CHECK(xi2.at(f) <= xi1.at(f) / 2.0 + 1e-15);

    // spot check one node against a direct oscillation scan (same square
    // windows, same dyadic ladder, same cap)
    Index probe{dom.dims()[0] / 2, dom.dims()[1] / 2};
    std::size_t pf = dom.node_index(probe);
    VectorField grad = gradient_field(wavy);
    double cap = 0.5 * std::min({rho.at(pf), omega.at(pf), 1.0});
    double phi = std::min(h / 2.0, cap);
    for (int m = 0; h * std::pow(2.0, m) <= cap; ++m) {
        int w = 1 << m;
        double gx_min = 1e300, gx_max = -1e300, gy_min = 1e300, gy_max = -1e300;
        for (int dj = -w; dj <= w; ++dj)
            for (int di = -w; di <= w; ++di) {
                Index iv{probe[0] + di, probe[1] + dj};
                if (!dom.node_in_range(iv)) continue;
                Vec gr = grad.at(dom.node_index(iv));
                gx_min = std::min(gx_min, gr[0]);
                gx_max = std::max(gx_max, gr[0]);
                gy_min = std::min(gy_min, gr[1]);
                gy_max = std::max(gy_max, gr[1]);
            }
        double osc = std::hypot(gx_max - gx_min, gy_max - gy_min);
        if (osc <= 0.5 / 2.0) phi = std::max(phi, h * std::pow(2.0, m));
    }
    CHECK(xi1.at(pf) == doctest::Approx(0.5 * phi / 12.0).epsilon(1e-12));
}

TEST_CASE("lemma1_build: empty set, single point") {
    double h = 1.0 / 64;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 4);
    ScalarField omega(dom, 1.0);
    PipelineConfig cfg;

    PointCloud empty(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    Lemma1Result r0 = lemma1_build(empty, Vec{0.0, 1.0}, omega, 0.3, cfg);
    for (double v : r0.g.samples()) CHECK(v == 0.0);
    // H = {omega > 0}
    for (std::size_t f = 0; f < dom.cell_count(); ++f) {
        Index iv = dom.cell_at(f);
        CHECK(r0.H.occupied(f) == !dom.cell_in_padding(iv));
    }

    PointCloud one(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    one.add(Vec{0.5, 0.5});
    Lemma1Result r1 = lemma1_build(one, Vec{0.0, 1.0}, omega, 0.3, cfg);
    CHECK(r1.report.uncovered_points == 0);
    CHECK(r1.g.max_value() > 0.0);
    ScalarField rho = rho_field(full_box(dom));
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        double capv = std::min({1.0, rho.at(f) * rho.at(f), omega.at(f)});
        CHECK(r1.g.at(f) >= 0.0);
        CHECK(r1.g.at(f) <= capv + 1e-12);
    }
    CHECK(r1.H.occupied(dom.cell_of(Vec{0.5, 0.5})));
}

TEST_CASE("lemma2_build: degenerate directions and large sigma") {
    double h = 1.0 / 32;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    ScalarField omega(dom, 1.0), phi(dom, 1.0);
    PointCloud E(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    E.add(Vec{0.5, 0.5});
    PipelineConfig cfg;

    Lemma2Result a = lemma2_build(E, omega, phi, Vec{0.0, 0.0}, 0.5, cfg);
    CHECK(a.degenerate);
    for (double v : a.f.samples()) CHECK(v == 0.0);
    for (std::size_t f = 0; f < dom.node_count(); ++f) CHECK(a.psi.at(f) == phi.at(f));

    Lemma2Result b = lemma2_build(E, omega, phi, Vec{1.0, 0.0}, 1.5, cfg);
    CHECK(b.degenerate);
    for (double v : b.f.samples()) CHECK(v == 0.0);
}

TEST_CASE("run_recursion: K = 0 and phi = 0 stages change nothing") {
    double h = 1.0 / 32;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    GridSet H0 = full_box(dom);
    ScalarField f0(dom, 0.0), omega0(dom, 1.0);
    PointCloud E(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    E.add(Vec{0.25, 0.25});
    PipelineConfig cfg;

    BuildTrace t0 = run_recursion(E, f0, H0, omega0, {}, 0, cfg);
    CHECK(t0.stages.empty());
    CHECK(t0.f.size() == 1);

    // a stage whose bump misses E entirely: f stays identically f_0
    auto far_group = std::make_shared<BumpPartition>(
        std::vector<BumpSpec>{{Vec{0.8, 0.8}, 0.05}}, 1);
    StageConfig st;
    st.sigma = 0.5;
    st.direction = Vec{1.0, 0.0};
    st.group = far_group;
    st.bump_index = 0;
    BuildTrace t1 = run_recursion(E, f0, H0, omega0, {st}, 1, cfg);
    REQUIRE(t1.f.size() == 2);
    for (std::size_t f = 0; f < dom.node_count(); ++f) CHECK(t1.f[1].at(f) == t1.f[0].at(f));
}

TEST_CASE("run_recursion: cantor-product six alternating stages (smoke)") {
    double h = 1.0 / 64;
    PointCloud E = gen_cantor_product(1.0 / 3.0, 3, 17);
    GridDomain dom = GridDomain::cover(E.box_lo(), E.box_hi(), h, 4);
    GridSet H0 = full_box(dom);
    ScalarField f0(dom, 0.0), omega0(dom, 1.0);
    PipelineConfig cfg;
    cfg.staircase_distinct_cap = 24;
    cfg.lemma1_radii_cells = {4, 2};
    cfg.check_radii_cells = {4, 2};

    auto group = std::make_shared<BumpPartition>(
        std::vector<BumpSpec>{{Vec{0.5, 0.5}, 0.75}}, 1);
    std::vector<StageConfig> stages;
    for (int i = 0; i < 6; ++i) {
        StageConfig st;
        st.sigma = 0.5;
        st.direction = Vec{i % 2 == 0 ? 1.0 : -1.0, 0.0};
        st.group = group;
        st.bump_index = 0;
        stages.push_back(st);
    }
    BuildTrace trace = run_recursion(E, f0, H0, omega0, stages, 6, cfg);
    CHECK_FALSE(trace.aborted);
    REQUIRE(trace.stages.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) {
        const StageRecord& rec = trace.stages[j];
        CHECK(rec.staircase_k == 12);  // ceil(6/0.5)
        // |f_j - f_{j-1}| <= omega_{j-1} (amplitudes recorded per stage)
        CHECK(rec.max_step_change <= rec.omega_prev_max + 1e-12);
        // nesting and omega halving
        CHECK(trace.H[j + 1].subset_of(trace.H[j]));
        for (std::size_t f = 0; f < dom.node_count(); ++f)
            CHECK(trace.omega[j + 1].at(f) <= 0.5 * std::min(1.0, trace.omega[j].at(f)) + 1e-15);
    }
}

TEST_CASE("select_stages: tau formula, cover bound, density") {
    PointCloud E = gen_cantor_product(0.25, 3, 9);
    StageSelection sel = select_stages(E, 0.5, 2);
    REQUIRE(!sel.stages.empty());
    // spec worked example: eps = 0.5, level 1, n = 2 -> tau_1 = 3^-2 (0.25)^3 / 3
    double tau1 = std::pow(3.0, -2.0) * std::pow(0.25, 3.0) / 3.0;
    CHECK(tau1 == doctest::Approx(0.000578703703703703).epsilon(1e-12));
    for (const StageConfig& st : sel.stages) {
        if (st.level_i == 1) CHECK(st.sigma == tau1);
        CHECK(norm(st.direction) <= 1.0 + 1e-12);
    }
    GridDomain dom = GridDomain::cover(E.box_lo(), E.box_hi(), 1.0 / 32, 4);
    double cover = sel.sigma_cover_max(dom);
    CHECK(cover <= 0.5);
    // sum over levels is bounded by sum eps_i
    double eps_sum = 0.25 + 0.125;
    CHECK(cover <= eps_sum);
    CHECK(density_check(sel, E, 2.0 * 0.125) == 0);

    PointCloud bare(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    bare.add(Vec{0.5, 0.5});
    CHECK_THROWS(select_stages(bare, 0.5, 2));
}

TEST_CASE("theorem4_build: empty set; theorem9_build: K = 0") {
    double h = 1.0 / 32;
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, h, 2);
    ScalarField omega(dom, 1.0);
    PipelineConfig cfg;
    PointCloud empty(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    Theorem4Result r4 = theorem4_build(empty, 0.3, omega, 2, 2, cfg);
    for (double v : r4.trace.final_f().samples()) CHECK(v == 0.0);
    CHECK(r4.u.empty());

    PointCloud k2 = gen_four_corner_cantor(2);
    Theorem9Result r9 = theorem9_build(k2, 0, h, 2, cfg);
    for (double v : r9.trace.final_f().samples()) CHECK(v == 0.0);
    CHECK(r9.directions.empty());
}

TEST_CASE("zahorski_sum: weights, duplicates, Lipschitz triangle inequality") {
    GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 1.0 / 16, 2);
    ScalarField g(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        g.at(f) = std::sin(3.0 * x[0]) * 0.2 + 0.1 * x[1];
    }
    ZahorskiResult one = zahorski_sum({{g, 1, 1}});
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        CHECK(one.f.at(f) == doctest::Approx(0.25 * g.at(f)).epsilon(1e-15));

    ZahorskiResult two = zahorski_sum({{g, 1, 1}, {g, 1, 2}});
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        CHECK(two.f.at(f) == doctest::Approx(0.375 * g.at(f)).epsilon(1e-15));

    CHECK_THROWS(zahorski_sum({{g, 1, 1}, {g, 1, 1}}));

    double sum_lip = 0.25 * g.lipschitz() + 0.125 * g.lipschitz();
    CHECK(two.f.lipschitz() <= sum_lip + 1e-12);
}
