#include "conewidth/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "conewidth/distance.hpp"

namespace conewidth {

Theorem4Result theorem4_build(const PointCloud& E, double eps, const ScalarField& omega,
                              int K_pairs, int i_max, const PipelineConfig& cfg,
                              const StageSelectConfig& scfg) {
    if (K_pairs < 0) throw std::invalid_argument("theorem4_build: K must be >= 0");
    const GridDomain& dom = omega.domain();

    Theorem4Result out;
    out.eps = eps;

    std::vector<StageConfig> doubled;
    if (E.size() > 0) {
        out.selection = select_stages(E, eps / 2.0, i_max, scfg);
        for (const StageConfig& st : out.selection.stages) {
            doubled.push_back(st);
            StageConfig neg = st;
            neg.direction = st.direction * -1.0;
            doubled.push_back(neg);
        }
    }
    std::size_t want = 2 * static_cast<std::size_t>(K_pairs);
    std::size_t run_count = std::min(want, doubled.size());

    GridSet H0(dom);
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        Index cv = dom.cell_at(cf);
        if (!dom.cell_in_padding(cv)) H0.set_cell(cv, true);
    }
    // H_0 = {omega > 0} within the window
    {
        Index nv(dom.dim());
        for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
            if (!H0.occupied(cf)) continue;
            Index cv = dom.cell_at(cf);
            bool pos = true;
            std::size_t corners = std::size_t(1) << dom.dim();
            for (std::size_t mask = 0; mask < corners && pos; ++mask) {
                for (std::size_t i = 0; i < dom.dim(); ++i)
                    nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
                if (!(omega.at(dom.node_index(nv)) > 0.0)) pos = false;
            }
            if (!pos) H0.set_cell(cv, false);
        }
    }

    ScalarField f0(dom, 0.0);
    ScalarField omega0(dom);
    {
        ScalarField rho0 = rho_field(H0);
        for (std::size_t f = 0; f < dom.node_count(); ++f) {
            double r = rho0.at(f);
            omega0.at(f) = 0.5 * std::min({1.0, omega.at(f), r * r});
        }
    }

    out.trace = run_recursion(E, f0, H0, omega0, doubled, run_count, cfg);

    // u = gradient of the final field at the samples
    VectorField grad = gradient_field(out.trace.final_f());
    for (std::size_t p = 0; p < E.size(); ++p) {
        out.sample_points.push_back(E.point(p));
        Vec g = grad.eval(E.point(p));
        out.u.push_back(g);
        out.u_max = std::max(out.u_max, norm(g));
    }
    out.lip_measured = out.trace.final_f().lipschitz();

    double sigma_min = 1.0;
    for (std::size_t j = 0; j < run_count; ++j) sigma_min = std::min(sigma_min, doubled[j].sigma);
    out.tolerance = cfg.tolerance(dom.spacing(), tau_of_sigma(std::max(sigma_min, 1e-300)));
    for (std::size_t j = run_count; j < doubled.size(); ++j) out.tail_budget += doubled[j].sigma;
    return out;
}

namespace {
constexpr double kGoldenAngle = 2.399963229728653;  // 2*pi*(1 - 1/golden ratio)
}

Theorem9Result theorem9_build(const PointCloud& E, int K, double spacing, int padding,
                              const PipelineConfig& cfg) {
    if (K < 0) throw std::invalid_argument("theorem9_build: K must be >= 0");
    if (E.dim() != 2) throw std::invalid_argument("theorem9_build: n = 2 only");

    Theorem9Result out;
    GridDomain dom = GridDomain::cover(E.box_lo(), E.box_hi(), spacing, padding);
    const double h = dom.spacing();

    // uniformly-purely-unrectifiable surrogate: the samples carry full-space
    // tags and a probe of estimate_normal_cone accepts axis directions
    for (std::size_t p = 0; p < E.size(); ++p) {
        if (!E.normal(p) || !E.normal(p)->full_space) {
            out.probe_accepted = false;
            break;
        }
    }
    if (out.probe_accepted && E.size() > 0) {
        std::size_t probe_idx = E.size() / 2;
        auto est = estimate_normal_cone(E, E.point(probe_idx), {0.5}, {0.5},
                                        {Vec{1.0, 0.0}, Vec{0.0, 1.0}}, 0.8, cfg.s_max, h, padding);
        for (const auto& pr : est.probes) out.probe_accepted = out.probe_accepted && pr.accepted;
    }
    if (!out.probe_accepted && cfg.strict_width)
        throw std::runtime_error(
            "theorem9_build: the normal-cone probe rejected the uniform-unrectifiability claim");

    GridSet H0(dom);
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        Index cv = dom.cell_at(cf);
        if (!dom.cell_in_padding(cv)) H0.set_cell(cv, true);
    }
    ScalarField f0(dom, 0.0);
    ScalarField one(dom, 1.0);
    out.trace = run_recursion(E, f0, H0, one, {}, 0, cfg);
    out.lip_after.push_back(out.trace.final_f().lipschitz());

    for (int k = 1; k <= K && !out.trace.aborted; ++k) {
        double eta_k = std::pow(2.0, -(k + 1));
        double sigma = eta_k / (8.0 * (E.dim() + 1.0));
        double angle = k * kGoldenAngle;
        Vec e_k{std::cos(angle), std::sin(angle)};
        e_k *= 1.0 - std::pow(2.0, -k);
        out.directions.push_back(e_k);
        out.eta.push_back(eta_k);
        out.step_stage_begin.push_back(out.trace.stages.size());

        const ScalarField& f_prev = out.trace.final_f();
        VectorField grad_prev = gradient_field(f_prev);

        // gamma cover of E: hexagonal balls over which grad f oscillates <= eta/4.
        // Descending delta ladder; refining stops at the bump cap or the grid.
        auto build_cover = [&](double delta, std::vector<Vec>& centers,
                               std::vector<std::size_t>& witnesses) {
            centers.clear();
            witnesses.clear();
            double lo_x = E.box_lo()[0], lo_y = E.box_lo()[1];
            double hi_x = E.box_hi()[0], hi_y = E.box_hi()[1];
            double row_h = delta * std::sqrt(3.0) / 2.0;
            int rows = static_cast<int>(std::ceil((hi_y - lo_y + 1.2 * delta) / row_h)) + 1;
            int cols = static_cast<int>(std::ceil((hi_x - lo_x + 1.2 * delta) / delta)) + 2;
            for (int r = 0; r < rows; ++r) {
                double y = lo_y - 0.58 * delta + r * row_h;
                double x0 = lo_x - 0.58 * delta + (r % 2 == 1 ? delta / 2.0 : 0.0);
                for (int c = 0; c < cols; ++c) {
                    Vec center{x0 + c * delta, y};
                    double best = 1e300;
                    std::size_t bi = 0;
                    for (std::size_t p = 0; p < E.size(); ++p) {
                        double d = dist(center, E.point(p));
                        if (d < best) {
                            best = d;
                            bi = p;
                        }
                    }
                    if (best > 0.5774 * delta) continue;
                    centers.push_back(center);
                    witnesses.push_back(bi);
                }
            }
        };
        auto cover_osc = [&](const std::vector<Vec>& centers, double radius) {
            double worst = 0.0;
            for (const Vec& c : centers) {
                double gx_min = 1e300, gx_max = -1e300, gy_min = 1e300, gy_max = -1e300;
                int reach = static_cast<int>(std::ceil(radius / h)) + 1;
                Index c0 = dom.cell_of(c);
                Index iv(2);
                for (int dj = -reach; dj <= reach; ++dj) {
                    for (int di = -reach; di <= reach; ++di) {
                        iv[0] = c0[0] + di;
                        iv[1] = c0[1] + dj;
                        if (!dom.node_in_range(iv)) continue;
                        Vec x = dom.node(iv);
                        if (dist(x, c) > radius) continue;
                        Vec g = grad_prev.at(dom.node_index(iv));
                        gx_min = std::min(gx_min, g[0]);
                        gx_max = std::max(gx_max, g[0]);
                        gy_min = std::min(gy_min, g[1]);
                        gy_max = std::max(gy_max, g[1]);
                    }
                }
                if (gx_max >= gx_min)
                    worst = std::max(worst, std::hypot(gx_max - gx_min, gy_max - gy_min));
            }
            return worst;
        };

        std::vector<Vec> centers, cand_centers;
        std::vector<std::size_t> witnesses, cand_witnesses;
        double radius = 0.0, osc_final = 0.0;
        for (double delta = 1.0; delta >= 4.0 * h; delta /= 2.0) {
            build_cover(delta, cand_centers, cand_witnesses);
            if (cand_centers.empty()) continue;
            if (!centers.empty() &&
                static_cast<int>(cand_centers.size()) > cfg.theorem9_max_bumps)
                break;  // keep the coarser cover
            centers = cand_centers;
            witnesses = cand_witnesses;
            radius = 0.75 * delta;
            osc_final = cover_osc(centers, radius);
            if (osc_final <= eta_k / 4.0) break;
        }
        if (centers.empty()) {
            out.trace.aborted = true;
            out.trace.abort_reason = "theorem9_build: no cover of E fits the stage budget";
            break;
        }
        if (static_cast<std::size_t>(cfg.theorem9_max_bumps) < centers.size()) {
            centers.resize(static_cast<std::size_t>(cfg.theorem9_max_bumps));
            witnesses.resize(static_cast<std::size_t>(cfg.theorem9_max_bumps));
        }
        out.cover_osc_excess =
            std::max(out.cover_osc_excess, std::max(0.0, osc_final - eta_k / 4.0));

        std::vector<BumpSpec> bumps;
        for (const Vec& c : centers) bumps.push_back({c, radius});
        auto group = std::make_shared<BumpPartition>(bumps, 0);

        std::vector<StageConfig> stages;
        for (std::size_t m = 0; m < centers.size(); ++m) {
            Vec x_m = E.point(witnesses[m]);
            Vec e_odd = grad_prev.eval(x_m) * -1.0;
            // the paper's e_{2k-1} = -f'(x_m) has norm <= Lip(f_{k-1}) <= 1 - 2^-k
            double cap = 1.0 - std::pow(2.0, -k);
            if (norm(e_odd) > cap) e_odd = normalized(e_odd) * cap;
            StageConfig odd;
            odd.sigma = sigma;
            odd.direction = e_odd;
            odd.group = group;
            odd.bump_index = static_cast<int>(m);
            odd.level_i = k;
            odd.bump_k = static_cast<int>(2 * m);
            StageConfig even = odd;
            even.direction = e_k;
            even.bump_k = static_cast<int>(2 * m + 1);
            stages.push_back(std::move(odd));
            stages.push_back(std::move(even));
        }
        extend_recursion(out.trace, E, stages, stages.size(), cfg);
        out.lip_after.push_back(out.trace.final_f().lipschitz());
    }
    return out;
}

ZahorskiResult zahorski_sum(const std::vector<ZahorskiPiece>& pieces) {
    if (pieces.empty()) throw std::invalid_argument("zahorski_sum: empty piece list");
    std::set<std::pair<int, int>> seen;
    for (const ZahorskiPiece& p : pieces) {
        if (!seen.insert({p.k, p.j}).second)
            throw std::invalid_argument("zahorski_sum: duplicate (k,j) = (" + std::to_string(p.k) +
                                        "," + std::to_string(p.j) + ")");
        if (!(p.field.domain() == pieces.front().field.domain()))
            throw std::invalid_argument("zahorski_sum: domain mismatch");
    }
    ZahorskiResult out{ScalarField(pieces.front().field.domain(), 0.0), {}};
    for (const ZahorskiPiece& p : pieces) {
        double w = std::pow(2.0, -(p.k + p.j));
        out.weights.push_back(w);
        for (std::size_t f = 0; f < out.f.samples().size(); ++f)
            out.f.at(f) += w * p.field.at(f);
    }
    return out;
}

}  // namespace conewidth
