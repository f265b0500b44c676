#include "conewidth/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "conewidth/distance.hpp"
#include "conewidth/modulus.hpp"
#include "conewidth/mollify.hpp"

namespace conewidth {

double tau_of_sigma(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("tau_of_sigma: sigma must be > 0");
    return std::sin(std::atan(sigma / 15.0));
}

namespace {

GridSet cells_where_positive(const ScalarField& w) {
    const GridDomain& dom = w.domain();
    GridSet G(dom);
    Index nv(dom.dim());
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        Index cv = dom.cell_at(cf);
        if (dom.cell_in_padding(cv)) continue;
        bool pos = true;
        std::size_t corners = std::size_t(1) << dom.dim();
        for (std::size_t mask = 0; mask < corners && pos; ++mask) {
            for (std::size_t i = 0; i < dom.dim(); ++i) nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
            if (!(w.at(nv) > 0.0)) pos = false;
        }
        if (pos) G.set_cell(cv, true);
    }
    return G;
}

// Clamped sub-domain [lo, hi) of cells, padding 0, grid-aligned.
GridDomain subdomain(const GridDomain& dom, Index lo, Index hi) {
    Vec origin = dom.origin();
    std::vector<int> dims(dom.dim());
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        lo[i] = std::min(std::max(0, lo[i]), dom.dims()[i] - 1);
        hi[i] = std::min(dom.dims()[i], std::max(hi[i], lo[i] + 1));
        origin[i] += dom.spacing() * lo[i];
        dims[i] = hi[i] - lo[i];
    }
    return GridDomain(origin, dom.spacing(), dims, 0);
}

GridSet window_copy(const GridSet& G, const GridDomain& sub, const Index& lo) {
    GridSet out(sub);
    Index gv(sub.dim());
    for (std::size_t cf = 0; cf < sub.cell_count(); ++cf) {
        Index cv = sub.cell_at(cf);
        for (std::size_t i = 0; i < sub.dim(); ++i) gv[i] = cv[i] + lo[i];
        if (G.occupied(gv)) out.set_cell(cv, true);
    }
    return out;
}

}  // namespace

Lemma1Result lemma1_build(const PointCloud& E, const Vec& e_unit, const ScalarField& omega,
                          double eps, const PipelineConfig& cfg) {
    const GridDomain& dom = omega.domain();
    const std::size_t n = dom.dim();
    const double h = dom.spacing();
    if (!(eps > 0.0)) throw std::invalid_argument("lemma1_build: eps must be > 0");
    Vec e = normalized(e_unit);

    GridSet G = cells_where_positive(omega);
    Lemma1Result out{ScalarField(dom, 0.0), G, {}};
    if (E.size() == 0 || G.empty()) return out;  // g = 0, H = {omega > 0}

    ScalarField rhoG = rho_field(G);
    // cap field: min(1, rho_G^2, omega)
    ScalarField capbase(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        double r = rhoG.at(f);
        capbase.at(f) = std::min({1.0, r * r, omega.at(f)});
    }

    // Ball cover of G: lattice candidates plus one candidate per E point, with
    // adaptive radii 0.85 * min(bump_radius, rho_G); a hole-filling pass keeps
    // the uncovered fringe inside {rho small}, where the 2^-k rho^2 cap makes
    // the coverage edge harmless.
    std::vector<BumpSpec> bumps;
    {
        auto rho_lower = [&](const Vec& c) {
            // 1-Lipschitz lower bound from the node field
            double best = 0.0;
            Index base = dom.cell_of(c);
            Index nv(n);
            std::size_t corners = std::size_t(1) << n;
            for (std::size_t mask = 0; mask < corners; ++mask) {
                for (std::size_t i = 0; i < n; ++i) nv[i] = base[i] + ((mask >> i) & 1 ? 1 : 0);
                Vec xn = dom.node(nv);
                best = std::max(best, rhoG.at(dom.node_index(nv)) - dist(xn, c));
            }
            return best;
        };
        auto try_add = [&](const Vec& c) {
            if (static_cast<int>(bumps.size()) >= cfg.k_max_bumps) return;
            double r = std::min(cfg.bump_radius, 0.85 * rho_lower(c));
            if (r < 2.0 * h) return;
            for (const BumpSpec& b : bumps)
                if (dist(c, b.center) < 0.7 * b.radius) return;
            bumps.push_back({c, r});
        };
        double step = std::max(h, 0.7 * cfg.bump_radius);
        Vec lo = dom.box_lo(), hi = dom.box_hi();
        std::vector<int> counts(n);
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) {
            counts[i] = static_cast<int>(std::floor((hi[i] - lo[i]) / step)) + 1;
            total *= static_cast<std::size_t>(counts[i]);
        }
        for (std::size_t k = 0; k < total; ++k) {
            std::size_t rem = k;
            Vec c(n);
            for (std::size_t i = 0; i < n; ++i) {
                c[i] = lo[i] + step * static_cast<double>(rem % counts[i]);
                rem /= static_cast<std::size_t>(counts[i]);
            }
            if (dom.in_box(c)) try_add(c);
        }
        for (std::size_t p = 0; p < E.size(); ++p) try_add(E.point(p));
        for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
            if (static_cast<int>(bumps.size()) >= cfg.k_max_bumps) break;
            if (!G.occupied(cf)) continue;
            Index cv = dom.cell_at(cf);
            Vec c = dom.node(cv);
            for (std::size_t i = 0; i < n; ++i) c[i] += h / 2.0;
            bool covered = false;
            for (const BumpSpec& b : bumps)
                if (dist(c, b.center) < b.radius) covered = true;
            if (covered) continue;
            double r = std::min(cfg.bump_radius, 0.85 * rho_lower(c));
            if (r >= 2.0 * h) bumps.push_back({c, r});
        }
    }
    if (bumps.empty()) {
        out.report.uncovered_points = E.size();
        return out;  // G too thin to carry any bump: g = 0, H = G
    }
    std::sort(bumps.begin(), bumps.end(), [](const BumpSpec& a, const BumpSpec& b) {
        return a.center.components() < b.center.components();
    });
    BumpPartition part(bumps, 0);

    // coverage field (sum of raw bumps) accumulated over bump boxes
    ScalarField coverage(dom, 0.0);
    std::vector<std::array<Index, 2>> boxes(part.size());
    for (std::size_t k = 0; k < part.size(); ++k) {
        const BumpSpec& b = part.bump(k);
        Index blo(n), bhi(n);
        for (std::size_t i = 0; i < n; ++i) {
            blo[i] = std::max(0, static_cast<int>(std::floor((b.center[i] - b.radius - dom.origin()[i]) / h)) - 1);
            bhi[i] = std::min(dom.dims()[i], static_cast<int>(std::ceil((b.center[i] + b.radius - dom.origin()[i]) / h)) + 1);
        }
        boxes[k] = {blo, bhi};
        Index iv(n);
        for (int j = blo[1]; j <= bhi[1]; ++j) {
            for (int i = blo[0]; i <= bhi[0]; ++i) {
                iv[0] = i;
                iv[1] = j;
                coverage.at(dom.node_index(iv)) += part.raw(k, dom.node(iv));
            }
        }
    }
    auto weight_at = [&](std::size_t k, const Vec& x) {
        double raw = part.raw(k, x);
        if (raw == 0.0) return 0.0;
        double cov = coverage.eval(x);
        return cov > 0.0 ? raw / cov : 0.0;
    };

    for (std::size_t p = 0; p < E.size(); ++p)
        if (!(part.coverage(E.point(p)) > 0.0)) ++out.report.uncovered_points;
    if (out.report.uncovered_points > 0 && cfg.strict_width) {
        std::ostringstream msg;
        msg << "lemma1_build: " << out.report.uncovered_points
            << " E point(s) uncovered by the partition (bump_radius too small for G)";
        throw std::runtime_error(msg.str());
    }

    const double tau = tau_of_sigma(7.0 * eps);
    Cone cone(e, tau);
    out.report.width_excess = 1.0;

    // overlap count M among bumps that meet E (the pointwise Lip-error bound
    // sums over touching bumps only); budgets are allocated uniformly as
    // eps_k = eps / (2 * 1.05 * M * m_k), which keeps sum_(touching) eps_k m_k < eps/2
    std::vector<char> nonempty(part.size(), 0);
    for (std::size_t k = 0; k < part.size(); ++k)
        for (std::size_t p = 0; p < E.size(); ++p)
            if (dist(E.point(p), part.bump(k).center) < part.bump(k).radius) {
                nonempty[k] = 1;
                break;
            }
    int M = 1;
    {
        std::vector<int> count(dom.node_count(), 0);
        Index iv(n);
        for (std::size_t k = 0; k < part.size(); ++k) {
            if (!nonempty[k]) continue;
            const Index &blo = boxes[k][0], &bhi = boxes[k][1];
            for (int j = blo[1]; j <= bhi[1]; ++j)
                for (int i = blo[0]; i <= bhi[0]; ++i) {
                    iv[0] = i;
                    iv[1] = j;
                    if (part.raw(k, dom.node(iv)) > 0.0) {
                        int& c = count[dom.node_index(iv)];
                        M = std::max(M, ++c);
                    }
                }
        }
    }

    ScalarField g(dom, 0.0);
    GridSet H = G;
    // drop cells whose coverage vanishes at some corner (outside the glued region)
    {
        Index nv(n);
        for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
            if (!H.occupied(cf)) continue;
            Index cv = dom.cell_at(cf);
            bool pos = true;
            std::size_t corners = std::size_t(1) << n;
            for (std::size_t mask = 0; mask < corners && pos; ++mask) {
                for (std::size_t i = 0; i < n; ++i) nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
                if (!(coverage.at(dom.node_index(nv)) > 0.0)) pos = false;
            }
            if (!pos) H.set_cell(cv, false);
        }
    }

    for (std::size_t k = 0; k < part.size(); ++k) {
        const BumpSpec& b = part.bump(k);
        const Index &blo = boxes[k][0], &bhi = boxes[k][1];

        if (!nonempty[k]) {
            out.report.bumps.push_back({b.center, b.radius, 0.0, 0.0, 0.0});
            continue;  // G_k = empty width-zero superset; g_k = 0
        }
        PointCloud E_local(n, E.box_lo(), E.box_hi());
        for (std::size_t p = 0; p < E.size(); ++p)
            if (dist(E.point(p), b.center) < b.radius) E_local.add(E.point(p));

        // m_k = 1 + sup ||grad phi_k||, finite differences over the bump box
        double mk = 1.0;
        {
            Index iv(n);
            for (int j = blo[1]; j <= bhi[1]; ++j) {
                for (int i = blo[0]; i <= bhi[0]; ++i) {
                    iv[0] = i;
                    iv[1] = j;
                    Vec x = dom.node(iv);
                    if (part.raw(k, x) == 0.0) continue;
                    double g2 = 0.0;
                    for (std::size_t a = 0; a < n; ++a) {
                        Vec xp = x, xm = x;
                        xp[a] += h;
                        xm[a] -= h;
                        double d = (weight_at(k, xp) - weight_at(k, xm)) / (2.0 * h);
                        g2 += d * d;
                    }
                    mk = std::max(mk, 1.0 + std::sqrt(g2));
                }
            }
        }

        double eps_k = eps / (2.0 * 1.05 * static_cast<double>(M) * mk);

        // local window for this bump: ball + largest neighborhood radius + margin
        double r_max_l = cfg.lemma1_radii_cells.front() * h;
        Index wlo(n), whi(n);
        for (std::size_t i = 0; i < n; ++i) {
            wlo[i] = static_cast<int>(std::floor((b.center[i] - b.radius - r_max_l - dom.origin()[i]) / h)) -
                     cfg.s_max - 1;
            whi[i] = static_cast<int>(std::ceil((b.center[i] + b.radius + r_max_l - dom.origin()[i]) / h)) +
                     cfg.s_max + 1;
        }
        GridDomain sub = subdomain(dom, wlo, whi);
        Index lo_clamped(n);
        for (std::size_t i = 0; i < n; ++i)
            lo_clamped[i] = static_cast<int>(std::llround((sub.origin()[i] - dom.origin()[i]) / h));
        GridSet G_window = window_copy(G, sub, lo_clamped);

        Lemma1Report::Bump rep{b.center, b.radius, eps_k, 0.0, 0.0};
        GridSet chosen(sub);
        bool found = false;
        for (double rc : cfg.lemma1_radii_cells) {
            double r = rc * h;
            GridSet Gk = neighborhood(E_local, r, sub).set.intersect(G_window);
            double wv = width_dp(Gk, cone, cfg.s_max).value;
            rep.width_measured = wv;
            rep.nbhd_radius = r;
            if (wv <= eps_k) {
                chosen = Gk;
                found = true;
                break;
            }
            chosen = Gk;  // keep the smallest-radius candidate
        }
        if (!found) {
            double excess = rep.width_measured / std::max(eps_k, 1e-300);
            out.report.width_excess = std::max(out.report.width_excess, excess);
            if (cfg.strict_width) {
                std::ostringstream msg;
                msg << "lemma1_build: width budget unattainable for bump " << k << ": measured "
                    << rep.width_measured << " > eps_k " << eps_k << " at radius " << rep.nbhd_radius;
                throw std::runtime_error(msg.str());
            }
        }
        out.report.bumps.push_back(rep);

        ScalarField gk = width_function(chosen, cone, cfg.s_max);

        // accumulate g_k * phi_k; the partition cancels the phi-gradient error
        // where neighboring g_k agree, and the capbase clamp below bounds the rest
        {
            Index iv(n), lv(n);
            for (int j = blo[1]; j <= bhi[1]; ++j) {
                for (int i = blo[0]; i <= bhi[0]; ++i) {
                    iv[0] = i;
                    iv[1] = j;
                    Vec x = dom.node(iv);
                    double w = weight_at(k, x);
                    if (w == 0.0) continue;
                    bool in_sub = true;
                    for (std::size_t a = 0; a < n; ++a) {
                        lv[a] = iv[a] - lo_clamped[a];
                        if (lv[a] < 0 || lv[a] > sub.dims()[a]) in_sub = false;
                    }
                    double gkv = in_sub ? gk.at(sub.node_index(lv)) : 0.0;
                    g.at(dom.node_index(iv)) += gkv * w;
                }
            }
        }

        // H excludes support cells that left G_k
        {
            Index cv(n), nv(n), lv(n);
            for (int j = std::max(0, blo[1] - 1); j < std::min(dom.dims()[1], bhi[1] + 1); ++j) {
                for (int i = std::max(0, blo[0] - 1); i < std::min(dom.dims()[0], bhi[0] + 1); ++i) {
                    cv[0] = i;
                    cv[1] = j;
                    std::size_t cf = dom.cell_index(cv);
                    if (!H.occupied(cf)) continue;
                    bool touches = false;
                    std::size_t corners = std::size_t(1) << n;
                    for (std::size_t mask = 0; mask < corners && !touches; ++mask) {
                        for (std::size_t a = 0; a < n; ++a) nv[a] = cv[a] + ((mask >> a) & 1 ? 1 : 0);
                        if (part.raw(k, dom.node(nv)) > 0.0) touches = true;
                    }
                    if (!touches) continue;
                    bool in_gk = true;
                    for (std::size_t a = 0; a < n; ++a) {
                        lv[a] = cv[a] - lo_clamped[a];
                        if (lv[a] < 0 || lv[a] >= sub.dims()[a]) in_gk = false;
                    }
                    if (in_gk) in_gk = chosen.occupied(sub.cell_index(lv));
                    if (!in_gk) H.set_cell(cv, false);
                }
            }
        }
    }

    // 0 <= g <= min(1, rho_G^2, omega): clamp the glued sum once
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        g.at(f) = std::min(g.at(f), capbase.at(f));

    out.g = std::move(g);
    out.H = std::move(H);
    return out;
}

namespace {

struct StaircaseEntry {
    ScalarField g;
    GridSet H;
    StaircaseEntry(ScalarField g_, GridSet H_) : g(std::move(g_)), H(std::move(H_)) {}
};

}  // namespace

Lemma2Result lemma2_build(const PointCloud& E, const ScalarField& omega, const ScalarField& phi,
                          const Vec& e, double sigma, const PipelineConfig& cfg) {
    const GridDomain& dom = omega.domain();
    if (!(phi.domain() == dom)) throw std::invalid_argument("lemma2_build: domain mismatch");
    const std::size_t n = dom.dim();
    const double enorm = norm(e);

    Lemma2Result out{ScalarField(dom, 0.0), phi, cells_where_positive(omega), false, 0, 0, false,
                     1.0,                   {}};
    if (enorm == 0.0 || sigma >= 1.0) {
        out.degenerate = true;
        return out;  // f = 0, psi = phi, H = {omega > 0}
    }

    Vec ehat = e;
    ehat *= 1.0 / enorm;
    const double eps = sigma / 7.0;
    const long long kk = static_cast<long long>(std::ceil(6.0 / sigma));
    out.k = kk;
    const int q = cfg.staircase_phi_levels;

    // phi quantized down to m/q at nodes; per-cell integer min over corners
    const std::size_t cells = dom.cell_count();
    std::vector<int> mcell(cells, 0);
    {
        std::vector<int> mnode(dom.node_count());
        for (std::size_t f = 0; f < dom.node_count(); ++f) {
            double v = phi.at(f);
            int m = static_cast<int>(std::floor(v * q + 1e-12));
            mnode[f] = std::max(0, std::min(q, m));
        }
        Index nv(n);
        for (std::size_t cf = 0; cf < cells; ++cf) {
            Index cv = dom.cell_at(cf);
            int m = q;
            std::size_t corners = std::size_t(1) << n;
            for (std::size_t mask = 0; mask < corners; ++mask) {
                for (std::size_t i = 0; i < n; ++i) nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
                m = std::min(m, mnode[dom.node_index(nv)]);
            }
            mcell[cf] = m;
        }
    }

    GridSet G0 = out.H;  // {omega > 0}
    GridSet H_prev(dom);
    {
        // H_0 = G_0 ∩ {phi > 0}
        for (std::size_t cf = 0; cf < cells; ++cf)
            if (G0.occupied(cf) && mcell[cf] > 0) H_prev.set_cell(dom.cell_at(cf), true);
        // quantization note: phi > 0 with phi*q < 1 floors to 0; use raw phi
        Index nv(n);
        for (std::size_t cf = 0; cf < cells; ++cf) {
            if (!G0.occupied(cf) || H_prev.occupied(cf)) continue;
            Index cv = dom.cell_at(cf);
            bool pos = true;
            std::size_t corners = std::size_t(1) << n;
            for (std::size_t mask = 0; mask < corners && pos; ++mask) {
                for (std::size_t i = 0; i < n; ++i) nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
                if (!(phi.at(dom.node_index(nv)) > 0.0)) pos = false;
            }
            if (pos) H_prev.set_cell(cv, true);
        }
    }

    std::vector<StaircaseEntry> entries;
    std::map<std::vector<std::uint8_t>, int> memo;
    ScalarField sum_g(dom, 0.0);

    long long i = 1;
    while (i <= kk) {
        GridSet Gi(dom);
        bool nonempty = false;
        for (std::size_t cf = 0; cf < cells; ++cf) {
            if (H_prev.occupied(cf) &&
                static_cast<long long>(mcell[cf]) * kk > i * static_cast<long long>(q)) {
                Gi.set_cell(dom.cell_at(cf), true);
                nonempty = true;
            }
        }
        if (!nonempty) {
            out.runs.push_back({i, kk, -1});
            break;
        }

        int id;
        auto it = memo.find(Gi.occupancy());
        if (it != memo.end()) {
            id = it->second;
        } else if (out.distinct_stages >= cfg.staircase_distinct_cap && !entries.empty()) {
            out.distinct_cap_hit = true;
            if (cfg.strict_width)
                throw std::runtime_error("lemma2_build: staircase distinct-stage cap exceeded");
            id = static_cast<int>(entries.size()) - 1;  // degraded: reuse the last stage
        } else {
            PointCloud E_i(n, E.box_lo(), E.box_hi());
            for (std::size_t p = 0; p < E.size(); ++p) {
                Index cv = dom.cell_of(E.point(p));
                if (Gi.occupied(cv)) E_i.add(E.point(p));
            }
            ScalarField rhoGi = rho_field(Gi);
            ScalarField omega_i(dom);
            for (std::size_t f = 0; f < dom.node_count(); ++f) {
                double r = rhoGi.at(f);
                omega_i.at(f) = 0.5 * std::min(omega.at(f), r * r);
            }
            Lemma1Result l1 = lemma1_build(E_i, ehat, omega_i, eps, cfg);
            out.width_excess = std::max(out.width_excess, l1.report.width_excess);
            id = static_cast<int>(entries.size());
            entries.emplace_back(std::move(l1.g), std::move(l1.H));
            memo.emplace(Gi.occupancy(), id);
            ++out.distinct_stages;
        }

        const GridSet& Hi = entries[static_cast<std::size_t>(id)].H;

        // run end: fixed point allows jumping to the next phi-threshold crossing
        long long i_end = i;
        {
            GridSet Gnext(dom);
            for (std::size_t cf = 0; cf < cells; ++cf)
                if (Hi.occupied(cf) &&
                    static_cast<long long>(mcell[cf]) * kk > (i + 1) * static_cast<long long>(q))
                    Gnext.set_cell(dom.cell_at(cf), true);
            if (Gnext == Gi) {
                long long next_change = kk + 1;
                for (std::size_t cf = 0; cf < cells; ++cf) {
                    if (!Gi.occupied(cf)) continue;
                    long long fe =
                        (static_cast<long long>(mcell[cf]) * kk + q - 1) / static_cast<long long>(q);
                    // first index i' with i' >= mcell*kk/q, i.e. cell leaves the set
                    next_change = std::min(next_change, fe);
                }
                i_end = std::min(kk, next_change - 1);
                if (i_end < i) i_end = i;
            }
        }
        out.runs.push_back({i, i_end, id});
        double count = static_cast<double>(i_end - i + 1);
        const ScalarField& gi = entries[static_cast<std::size_t>(id)].g;
        double scale = count / static_cast<double>(kk);
        for (std::size_t f = 0; f < dom.node_count(); ++f) sum_g.at(f) += scale * gi.at(f);

        H_prev = Hi;
        i = i_end + 1;
    }

    // j(x) = max{ j : x in G_j } and psi at nodes; node membership is taken by
    // closure (any incident occupied cell). The G chain is replayed per run.
    const std::size_t nodes = dom.node_count();
    std::vector<long long> jmax(nodes, 0);
    std::vector<std::uint8_t> inG0(nodes, 0);
    {
        Index nv(n);
        for (std::size_t cf = 0; cf < cells; ++cf) {
            if (!G0.occupied(cf)) continue;
            Index c = dom.cell_at(cf);
            for (int dj = 0; dj <= 1; ++dj)
                for (int di = 0; di <= 1; ++di) {
                    nv[0] = c[0] + di;
                    nv[1] = c[1] + dj;
                    inG0[dom.node_index(nv)] = 1;
                }
        }
        GridSet Hp(dom);
        for (std::size_t cf = 0; cf < cells; ++cf)
            if (G0.occupied(cf) && mcell[cf] > 0) Hp.set_cell(dom.cell_at(cf), true);
        for (const StaircaseRun& run : out.runs) {
            if (run.gset_id < 0) break;
            GridSet Gi(dom);
            for (std::size_t cf = 0; cf < cells; ++cf)
                if (Hp.occupied(cf) && static_cast<long long>(mcell[cf]) * kk >
                                           run.i_begin * static_cast<long long>(q))
                    Gi.set_cell(dom.cell_at(cf), true);
            for (std::size_t cf = 0; cf < cells; ++cf) {
                if (!Gi.occupied(cf)) continue;
                Index c = dom.cell_at(cf);
                for (int dj = 0; dj <= 1; ++dj)
                    for (int di = 0; di <= 1; ++di) {
                        nv[0] = c[0] + di;
                        nv[1] = c[1] + dj;
                        jmax[dom.node_index(nv)] = std::max(jmax[dom.node_index(nv)], run.i_end);
                    }
            }
            Hp = entries[static_cast<std::size_t>(run.gset_id)].H;
        }
    }

    ScalarField psi(dom, 0.0);
    for (std::size_t f = 0; f < nodes; ++f) {
        if (!inG0[f]) continue;
        double v = std::min(static_cast<double>(jmax[f] + 2) / static_cast<double>(kk), phi.at(f));
        psi.at(f) = std::max(0.0, v);
    }

    // H = union over runs of {cells of H_run : phi < (i_end + 2)/k}, plus the
    // j = 0 layer {cells of H_0 : phi < 2/k}
    GridSet H_l2(dom);
    {
        Index nv(n);
        auto add_layer = [&](const GridSet& S, double bound) {
            for (std::size_t cf = 0; cf < cells; ++cf) {
                if (!S.occupied(cf)) continue;
                Index cv = dom.cell_at(cf);
                bool ok = true;
                std::size_t corners = std::size_t(1) << n;
                for (std::size_t mask = 0; mask < corners && ok; ++mask) {
                    for (std::size_t a = 0; a < n; ++a) nv[a] = cv[a] + ((mask >> a) & 1 ? 1 : 0);
                    if (!(phi.at(dom.node_index(nv)) < bound)) ok = false;
                }
                if (ok) H_l2.set_cell(cv, true);
            }
        };
        GridSet H0(dom);
        for (std::size_t cf = 0; cf < cells; ++cf)
            if (G0.occupied(cf) && mcell[cf] > 0) H0.set_cell(dom.cell_at(cf), true);
        add_layer(H0, 2.0 / static_cast<double>(kk));
        for (const StaircaseRun& run : out.runs) {
            if (run.gset_id < 0) continue;
            add_layer(entries[static_cast<std::size_t>(run.gset_id)].H,
                      static_cast<double>(run.i_end + 2) / static_cast<double>(kk));
        }
    }

    // mollified gluing toward Phi = psi * ehat with xi = 5 min(1/k, phi)
    VectorField Phi(dom);
    ScalarField xi(dom), omega_hat(dom);
    ScalarField rhoH = rho_field(H_l2);
    for (std::size_t f = 0; f < nodes; ++f) {
        Vec v = ehat;
        v *= psi.at(f);
        Phi.set(f, v);
        xi.at(f) = 5.0 * std::min(1.0 / static_cast<double>(kk), phi.at(f));
        double r = rhoH.at(f);
        omega_hat.at(f) = 0.2 * std::min({omega.at(f), phi.at(f), r * r});
    }
    MollifyConfig mcfg;
    mcfg.k_max_bumps = cfg.k_max_bumps;
    mcfg.fd_slack_factor = cfg.fd_slack_factor;
    mcfg.strict = false;
    MollifyResult mr = mollify_glue(sum_g, H_l2, Phi, xi, omega_hat, mcfg);

    out.f = field_scale(mr.f, enorm);
    out.psi = std::move(psi);
    out.H = std::move(H_l2);
    return out;
}

namespace {

ScalarField stage_phi_field(const StageConfig& stage, const GridDomain& dom) {
    ScalarField phi(dom, 0.0);
    for (std::size_t f = 0; f < dom.node_count(); ++f)
        phi.at(f) = stage.phi(dom.node(dom.node_at(f)), dom.dim());
    return phi;
}

}  // namespace

void extend_recursion(BuildTrace& trace, const PointCloud& E,
                      const std::vector<StageConfig>& stages, std::size_t K,
                      const PipelineConfig& cfg) {
    if (trace.aborted) return;
    if (K > stages.size()) throw std::invalid_argument("run_recursion: K exceeds stage count");
    const GridDomain dom = trace.f.back().domain();  // by value: trace vectors reallocate
    const double h = dom.spacing();

    for (std::size_t j = 0; j < K; ++j) {
        const StageConfig& stage = stages[j];
        const ScalarField& f_prev = trace.f.back();
        const GridSet& H_prev = trace.H.back();
        const ScalarField& omega_prev = trace.omega.back();

        StageRecord rec;
        rec.sigma = stage.sigma;
        rec.direction = stage.direction;
        rec.omega_prev_max = omega_prev.max_value();

        ScalarField phi_j = stage_phi_field(stage, dom);
        PointCloud E_j(dom.dim(), E.box_lo(), E.box_hi());
        for (std::size_t p = 0; p < E.size(); ++p)
            if (phi_j.eval(E.point(p)) > 0.0) E_j.add(E.point(p));

        // width hypothesis w_{e, tau(sigma)}(E ∩ {phi > 0}) = 0, checked as
        // measured width <= threshold at the configured radii ladder
        double enorm = norm(stage.direction);
        if (E_j.size() > 0 && enorm > 0.0 && stage.sigma < 1.0) {
            std::vector<double> radii;
            for (double rc : cfg.check_radii_cells) radii.push_back(rc * h);
            Vec ehat = stage.direction;
            ehat *= 1.0 / enorm;
            rec.width_measured =
                width_of_set(E_j, Cone(ehat, tau_of_sigma(stage.sigma)), radii, cfg.s_max, dom).value;
            rec.width_ok = rec.width_measured <= cfg.width_threshold;
            if (!rec.width_ok && cfg.strict_width) {
                trace.aborted = true;
                std::ostringstream msg;
                msg << "stage " << trace.stages.size() + 1 << ": width hypothesis failed (measured "
                    << rec.width_measured << " > threshold " << cfg.width_threshold << ")";
                trace.abort_reason = msg.str();
                trace.stages.push_back(rec);
                return;
            }
        }

        Lemma2Result l2 = lemma2_build(E_j, omega_prev, phi_j, stage.direction, stage.sigma, cfg);
        rec.staircase_k = l2.k;
        rec.distinct_stages = l2.distinct_stages;
        rec.width_excess = l2.width_excess;

        ScalarField f_j = field_add(f_prev, l2.f);
        GridSet H_j = H_prev.intersect(l2.H);

        rec.max_step_change = l2.f.max_abs();

        // psi_j = phi_j on H_j (sampled at H_j closure nodes)
        {
            double dev = 0.0;
            Index nv(dom.dim());
            for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
                if (!H_j.occupied(cf)) continue;
                Index cv = dom.cell_at(cf);
                for (int dj2 = 0; dj2 <= 1; ++dj2)
                    for (int di = 0; di <= 1; ++di) {
                        nv[0] = cv[0] + di;
                        nv[1] = cv[1] + dj2;
                        std::size_t f = dom.node_index(nv);
                        dev = std::max(dev, std::abs(l2.psi.at(f) - phi_j.at(f)));
                    }
            }
            rec.psi_phi_dev_on_H = dev;
        }

        // increment identity at E samples: ||∇f_j - ∇f_{j-1} - psi e_j|| <= sigma
        {
            VectorField grad_inc = gradient_field(l2.f);
            double dev = 0.0;
            for (std::size_t p = 0; p < E_j.size(); ++p) {
                const Vec& x = E_j.point(p);
                Vec gi = grad_inc.eval(x);
                Vec target = stage.direction;
                target *= l2.psi.eval(x);
                dev = std::max(dev, norm(gi - target) - stage.sigma);
            }
            rec.grad_increment_dev = dev;
        }

        // omega_j = 1/2 min(1, omega_{j-1}, xi_j, rho_{H_j}^2)
        ScalarField xi_j = modulus_field(f_j, H_j, omega_prev, std::min(1.0, stage.sigma));
        ScalarField rhoH = rho_field(H_j);
        ScalarField omega_j(dom);
        for (std::size_t f = 0; f < dom.node_count(); ++f) {
            double r = rhoH.at(f);
            omega_j.at(f) = 0.5 * std::min({1.0, omega_prev.at(f), xi_j.at(f), r * r});
        }

        trace.stages.push_back(rec);
        if (trace.keep_fields) {
            trace.f.push_back(std::move(f_j));
            trace.psi.push_back(std::move(l2.psi));
        } else {
            trace.f.back() = std::move(f_j);
            if (trace.psi.empty()) trace.psi.push_back(std::move(l2.psi));
            else trace.psi.back() = std::move(l2.psi);
        }
        trace.H.push_back(std::move(H_j));
        trace.omega.push_back(std::move(omega_j));
    }
}

BuildTrace run_recursion(const PointCloud& E, const ScalarField& f0, const GridSet& H0,
                         const ScalarField& omega0, const std::vector<StageConfig>& stages,
                         std::size_t K, const PipelineConfig& cfg, bool keep_fields) {
    BuildTrace trace;
    trace.keep_fields = keep_fields;
    const GridDomain& dom = f0.domain();
    trace.f.push_back(f0);
    trace.H.push_back(H0);
    // enforce omega_0 <= 1/2 min(1, rho_{H_0}^2) (the proof's harmless assumption)
    ScalarField rho0 = rho_field(H0);
    ScalarField om0(dom);
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        double r = rho0.at(f);
        om0.at(f) = std::min(omega0.at(f), 0.5 * std::min(1.0, r * r));
    }
    trace.omega.push_back(std::move(om0));
    extend_recursion(trace, E, stages, K, cfg);
    return trace;
}

}  // namespace conewidth
