#include "conewidth/stages.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace conewidth {

namespace {

// Deterministic lattice net of the closed unit ball: cubic lattice of spacing
// eps/sqrt(n) intersected with the ball, lex-ordered. Covers B within eps.
std::vector<Vec> unit_ball_net(std::size_t n, double eps) {
    double step = eps / std::sqrt(static_cast<double>(n));
    int reach = static_cast<int>(std::ceil(1.0 / step));
    std::vector<Vec> net;
    std::vector<int> idx(n, -reach);
    while (true) {
        Vec v(n);
        double norm2v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = idx[i] * step;
            norm2v += v[i] * v[i];
        }
        if (norm2v <= 1.0 + 1e-12) net.push_back(v);
        std::size_t a = 0;
        while (a < n && ++idx[a] > reach) {
            idx[a] = -reach;
            ++a;
        }
        if (a == n) break;
    }
    return net;
}

// Nearest member of N(E,x) ∩ B to the direction u: for a single claimed normal
// the set is the segment {t e_x : |t| <= 1}; full space gives u itself.
Vec nearest_normal_member(const NormalData& nd, const Vec& u, double* distance) {
    if (nd.full_space) {
        if (distance) *distance = 0.0;
        return u;
    }
    double t = std::max(-1.0, std::min(1.0, dot(nd.direction, u)));
    Vec m = nd.direction;
    m *= t;
    if (distance) *distance = dist(m, u);
    return m;
}

struct HexCover {
    std::vector<Vec> centers;
    std::vector<std::size_t> witness;  // index into the matched point list
    double radius = 0.0;
};

// Hexagonal-lattice ball cover of the given points: spacing delta, radius
// 0.75*delta; only lattice points within 0.577*delta of a point are kept, and
// each kept ball must fit inside its witness's validity ball.
HexCover hex_cover(const std::vector<Vec>& pts, const std::vector<double>& deltas, double spacing) {
    HexCover cover;
    if (pts.empty()) return cover;
    cover.radius = 0.75 * spacing;
    double lo_x = pts[0][0], hi_x = pts[0][0], lo_y = pts[0][1], hi_y = pts[0][1];
    for (const Vec& p : pts) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    double margin = 0.58 * spacing;
    double row_h = spacing * std::sqrt(3.0) / 2.0;
    int rows = static_cast<int>(std::ceil((hi_y - lo_y + 2 * margin) / row_h)) + 1;
    int cols = static_cast<int>(std::ceil((hi_x - lo_x + 2 * margin) / spacing)) + 2;
    for (int r = 0; r < rows; ++r) {
        double y = lo_y - margin + r * row_h;
        double x0 = lo_x - margin + (r % 2 == 1 ? spacing / 2.0 : 0.0);
        for (int c = 0; c < cols; ++c) {
            Vec center{x0 + c * spacing, y};
            double best = 1e300;
            std::size_t bi = 0;
            for (std::size_t p = 0; p < pts.size(); ++p) {
                double d = dist(center, pts[p]);
                if (d < best) {
                    best = d;
                    bi = p;
                }
            }
            if (best > 0.5774 * spacing) continue;
            if (best + cover.radius > deltas[bi] + 1e-12) continue;  // outside validity
            cover.centers.push_back(center);
            cover.witness.push_back(bi);
        }
    }
    return cover;
}

}  // namespace

StageSelection select_stages(const PointCloud& E, double eps, int i_max,
                             const StageSelectConfig& cfg) {
    if (!(eps > 0.0)) throw std::invalid_argument("select_stages: eps must be > 0");
    if (i_max < 1) throw std::invalid_argument("select_stages: i_max must be >= 1");
    const std::size_t n = E.dim();
    if (n != 2) throw std::invalid_argument("select_stages: hexagonal covers are n = 2 only");
    for (std::size_t p = 0; p < E.size(); ++p)
        if (!E.normal(p))
            throw std::invalid_argument("select_stages: point " + std::to_string(p) +
                                        " has no normal data");

    StageSelection sel;
    for (int i = 1; i <= i_max; ++i) {
        double eps_i = std::pow(2.0, -i) * eps;
        double tau_i = std::pow(3.0, -double(n)) * std::pow(eps_i, double(n) + 1.0) / (double(n) + 1.0);
        std::vector<Vec> net = unit_ball_net(n, eps_i);
        sel.levels.push_back({eps_i, tau_i, net.size(),
                              static_cast<std::size_t>(std::pow(3.0, double(n)) *
                                                       std::pow(eps_i, -double(n)))});

        for (std::size_t j = 0; j < net.size(); ++j) {
            // E_{i,j}: points whose normal set approaches e_{i,j} within eps_i
            std::vector<Vec> pts;
            std::vector<double> deltas;
            std::vector<Vec> members;  // nearest N(E,x) member per matched point
            for (std::size_t p = 0; p < E.size(); ++p) {
                double d;
                Vec m = nearest_normal_member(*E.normal(p), net[j], &d);
                if (d < eps_i) {
                    pts.push_back(E.point(p));
                    deltas.push_back(E.normal(p)->delta);
                    members.push_back(m);
                }
            }
            if (pts.empty()) continue;

            double dmin = deltas[0];
            for (double d : deltas) dmin = std::min(dmin, d);
            double spacing = std::min(cfg.ball_cap, dmin / 1.35);
            HexCover cover = hex_cover(pts, deltas, spacing);
            if (cover.centers.empty()) continue;

            std::size_t count = cover.centers.size();
            if (count > static_cast<std::size_t>(cfg.bumps_per_group)) {
                count = static_cast<std::size_t>(cfg.bumps_per_group);
                sel.truncated = true;
            }
            std::vector<BumpSpec> bumps;
            for (std::size_t k = 0; k < count; ++k)
                bumps.push_back({cover.centers[k], cover.radius});
            auto group = std::make_shared<BumpPartition>(bumps, 0);

            for (std::size_t k = 0; k < count; ++k) {
                StageConfig st;
                st.sigma = tau_i;
                st.direction = members[cover.witness[k]];
                st.group = group;
                st.bump_index = static_cast<int>(k);
                st.level_i = i;
                st.net_j = static_cast<int>(j);
                st.bump_k = static_cast<int>(k);
                sel.stages.push_back(std::move(st));
            }
        }
    }

    // measured partition order: max bumps positive at any stage's own center
    // and at a probe set of E points
    int M = 0;
    std::map<const BumpPartition*, std::vector<Vec>> probes;
    for (const StageConfig& st : sel.stages)
        probes[st.group.get()].push_back(st.group->bump(st.bump_index).center);
    for (auto& [group, centers] : probes) {
        for (const Vec& x : centers) {
            int m = 0;
            for (std::size_t k = 0; k < group->size(); ++k)
                if (group->raw(k, x) > 0.0) ++m;
            M = std::max(M, m);
        }
        for (std::size_t p = 0; p < E.size(); ++p) {
            int m = 0;
            for (std::size_t k = 0; k < group->size(); ++k)
                if (group->raw(k, E.point(p)) > 0.0) ++m;
            M = std::max(M, m);
        }
    }
    sel.max_overlap = M;
    return sel;
}

double StageSelection::sigma_cover_max(const GridDomain& dom) const {
    double worst = 0.0;
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Vec x = dom.node(dom.node_at(f));
        double acc = 0.0;
        for (const StageConfig& st : stages)
            if (st.group && st.group->raw(static_cast<std::size_t>(st.bump_index), x) > 0.0)
                acc += st.sigma;
        worst = std::max(worst, acc);
    }
    return worst;
}

std::size_t density_check(const StageSelection& sel, const PointCloud& E, double eta) {
    std::size_t failures = 0;
    for (std::size_t p = 0; p < E.size(); ++p) {
        const auto& nd = E.normal(p);
        if (!nd) {
            ++failures;
            continue;
        }
        // e := the point's claimed unit normal (any direction for full-space tags)
        bool ok = false;
        for (const StageConfig& st : sel.stages) {
            if (!(st.sigma < eta)) continue;
            double d = nd->full_space ? 0.0 : dist(nd->direction, st.direction);
            if (d >= eta) continue;
            if (st.phi(E.point(p), E.dim()) >= 1.0 - 1e-12) {
                ok = true;
                break;
            }
        }
        if (!ok) ++failures;
    }
    return failures;
}

}  // namespace conewidth
