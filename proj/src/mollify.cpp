#include "conewidth/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "conewidth/distance.hpp"

namespace conewidth {

namespace {

// Discrete mollification of g at node iv: radial bump kernel of scale s sampled
// on node offsets, renormalized. s < h degenerates to the identity.
double convolve_at(const ScalarField& g, const Index& iv, double s) {
    const GridDomain& dom = g.domain();
    const double h = dom.spacing();
    if (s < h) return g.at(iv);
    const int reach = static_cast<int>(std::floor(s / h));
    double acc = 0.0, wsum = 0.0;
    Index jv(dom.dim());
    std::size_t total = 1;
    for (std::size_t i = 0; i < dom.dim(); ++i) total *= static_cast<std::size_t>(2 * reach + 1);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rem = k;
        double r2 = 0.0;
        for (std::size_t i = 0; i < dom.dim(); ++i) {
            int off = static_cast<int>(rem % (2 * reach + 1)) - reach;
            rem /= static_cast<std::size_t>(2 * reach + 1);
            jv[i] = iv[i] + off;
            r2 += double(off) * off;
        }
        double w = bump_profile(std::sqrt(r2) * h / s);
        if (w == 0.0) continue;
        bool ok = true;
        for (std::size_t i = 0; i < dom.dim(); ++i)
            if (jv[i] < 0 || jv[i] > dom.dims()[i]) ok = false;
        if (!ok) continue;  // kernel clipped at the box; renormalization absorbs it
        acc += w * g.at(jv);
        wsum += w;
    }
    return wsum > 0.0 ? acc / wsum : g.at(iv);
}

}  // namespace

MollifyResult mollify_glue(const ScalarField& g, const GridSet& H, const VectorField& Phi,
                           const ScalarField& xi, const ScalarField& omega,
                           const MollifyConfig& cfg) {
    const GridDomain& dom = g.domain();
    if (!(H.domain() == dom)) throw std::invalid_argument("mollify_glue: domain mismatch");
    const double h = dom.spacing();
    const double lip_g = g.lipschitz();
    const double fd_slack = cfg.fd_slack_factor * h * (1.0 + lip_g);

    // nodes interior to H: all incident cells occupied
    const std::size_t nodes = dom.node_count();
    std::vector<std::uint8_t> interior(nodes, 0);
    for (std::size_t f = 0; f < nodes; ++f) {
        Index iv = dom.node_at(f);
        bool all = true, any = false;
        Index c(dom.dim());
        std::size_t corners = std::size_t(1) << dom.dim();
        for (std::size_t mask = 0; mask < corners; ++mask) {
            bool valid = true;
            for (std::size_t i = 0; i < dom.dim(); ++i) {
                c[i] = iv[i] - ((mask >> i) & 1 ? 1 : 0);
                if (c[i] < 0 || c[i] >= dom.dims()[i]) valid = false;
            }
            bool occ = valid && H.occupied(dom.cell_index(c));
            all = all && occ;
            any = any || occ;
        }
        interior[f] = all ? 1 : 0;
        (void)any;
    }

    // precondition: ||grad g - Phi|| <= 1.1 xi + fd slack at interior nodes of H
    VectorField grad_g = gradient_field(g);
    MollifyResult out{g, {}, 0, 0.0, 0.0};
    {
        double worst = 0.0;
        std::size_t worst_node = 0;
        for (std::size_t f = 0; f < nodes; ++f) {
            if (!interior[f]) continue;
            double dev = norm(grad_g.at(f) - Phi.at(f)) - (1.1 * xi.at(f) + fd_slack);
            if (dev > worst) {
                worst = dev;
                worst_node = f;
            }
        }
        out.precondition_excess = worst;
        if (worst > 0.0 && cfg.strict) {
            Index iv = dom.node_at(worst_node);
            std::ostringstream msg;
            msg << "mollify_glue: ||g' - Phi|| exceeds xi at node (";
            for (std::size_t i = 0; i < iv.size(); ++i) msg << (i ? "," : "") << iv[i];
            msg << ") by " << worst;
            throw std::runtime_error(msg.str());
        }
    }

    // U = H ∩ {xi > 0} as cells (all corners positive)
    GridSet U(dom);
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        if (!H.occupied(cf)) continue;
        Index cv = dom.cell_at(cf);
        bool pos = true;
        Index nv(dom.dim());
        std::size_t corners = std::size_t(1) << dom.dim();
        for (std::size_t mask = 0; mask < corners && pos; ++mask) {
            for (std::size_t i = 0; i < dom.dim(); ++i) nv[i] = cv[i] + ((mask >> i) & 1 ? 1 : 0);
            if (!(xi.at(nv) > 0.0)) pos = false;
        }
        if (pos && !dom.cell_in_padding(cv)) U.set_cell(cv, true);
    }
    if (U.empty()) return out;  // nothing to glue: f = g everywhere

    // omega_0 = 1/2 min(1, xi*omega, omega, rho_U^2)
    ScalarField rhoU = rho_field(U);
    ScalarField omega0(dom);
    for (std::size_t f = 0; f < nodes; ++f) {
        double r = rhoU.at(f);
        omega0.at(f) =
            0.5 * std::min({1.0, xi.at(f) * omega.at(f), omega.at(f), r * r});
    }

    // glue only where balls B(x, r<omega_0) are resolvable: omega_0 >= 2h
    const double floor_r = 2.0 * h;
    std::vector<BumpSpec> bumps;
    {
        // greedy cover of {omega_0 >= floor} nodes, lex order
        for (std::size_t f = 0; f < nodes && bumps.size() < static_cast<std::size_t>(cfg.k_max_bumps);
             ++f) {
            if (omega0.at(f) < floor_r) continue;
            Vec x = dom.node(dom.node_at(f));
            bool covered = false;
            for (const BumpSpec& b : bumps)
                if (dist(x, b.center) < 0.6 * b.radius) covered = true;
            if (covered) continue;
            double r = 0.9 * omega0.at(f);
            bumps.push_back({x, r});
        }
    }
    if (bumps.empty()) return out;
    BumpPartition part(bumps, 0);
    out.bump_count = part.size();

    // per-bump supports (node lists) and gradient bounds of the normalized weights
    std::vector<std::vector<std::size_t>> support(part.size());
    for (std::size_t f = 0; f < nodes; ++f) {
        Vec x = dom.node(dom.node_at(f));
        for (std::size_t k = 0; k < part.size(); ++k)
            if (part.raw(k, x) > 0.0) support[k].push_back(f);
    }

    ScalarField f_out = g;
    std::vector<double> fk(nodes, 0.0), wk(nodes, 0.0);
    std::vector<double> accum(nodes, 0.0), wsum(nodes, 0.0);
    out.scales.assign(part.size(), 0.0);

    for (std::size_t k = 0; k < part.size(); ++k) {
        // m_k = 1 + sup ||grad phi_k|| (measured on the support by finite differences)
        double mk = 1.0;
        for (std::size_t f : support[k]) {
            Index iv = dom.node_at(f);
            double g2 = 0.0;
            for (std::size_t i = 0; i < dom.dim(); ++i) {
                Index up = iv, dn = iv;
                up[i] = std::min(iv[i] + 1, dom.dims()[i]);
                dn[i] = std::max(iv[i] - 1, 0);
                double d = (part.weight(k, dom.node(up)) - part.weight(k, dom.node(dn))) /
                           ((up[i] - dn[i]) * h);
                g2 += d * d;
            }
            mk = std::max(mk, 1.0 + std::sqrt(g2));
        }

        // choose s_k on a descending dyadic ladder; s = 0 is the identity rung
        double s = std::min(part.bump(k).radius, 8.0 * h);
        double chosen = 0.0;
        while (true) {
            bool ok = true;
            double kk = static_cast<double>(k + 1);
            for (std::size_t f : support[k]) {
                Index iv = dom.node_at(f);
                double fkv = convolve_at(g, iv, s);
                double w0 = omega0.at(f);
                if (std::abs(fkv - g.at(f)) > std::pow(2.0, -kk - 1.0) * w0 / mk + 1e-15) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                // gradient condition ||f_k' - Phi|| <= xi + omega_0 (+ fd slack)
                for (std::size_t f : support[k]) {
                    if (!interior[f]) continue;
                    Index iv = dom.node_at(f);
                    double gx2 = 0.0;
                    Vec fd(dom.dim());
                    for (std::size_t i = 0; i < dom.dim(); ++i) {
                        Index up = iv, dn = iv;
                        up[i] = std::min(iv[i] + 1, dom.dims()[i]);
                        dn[i] = std::max(iv[i] - 1, 0);
                        fd[i] = (convolve_at(g, up, s) - convolve_at(g, dn, s)) /
                                ((up[i] - dn[i]) * h);
                    }
                    double dev = norm(fd - Phi.at(f));
                    if (dev > xi.at(f) + omega0.at(f) + fd_slack + 1e-15) {
                        ok = false;
                        break;
                    }
                    (void)gx2;
                }
            }
            if (ok) {
                chosen = s;
                break;
            }
            if (s < h) {
                chosen = 0.0;  // identity: bounds hold via the precondition
                break;
            }
            s /= 2.0;
        }
        out.scales[k] = chosen;

        for (std::size_t f : support[k]) {
            Index iv = dom.node_at(f);
            double w = part.weight(k, dom.node(iv));
            if (w == 0.0) continue;
            double val = chosen > 0.0 ? convolve_at(g, iv, chosen) : g.at(f);
            accum[f] += w * val;
            wsum[f] += w;
        }
    }

    for (std::size_t f = 0; f < nodes; ++f) {
        if (wsum[f] > 0.0) {
            // weights sum to 1 on the covered region; fold any residual into g
            double v = accum[f] + (1.0 - wsum[f]) * g.at(f);
            f_out.at(f) = v;
            out.max_dev = std::max(out.max_dev, std::abs(v - g.at(f)));
        }
    }
    out.f = std::move(f_out);
    return out;
}

}  // namespace conewidth
