#include "conewidth/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace conewidth {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// 2D sparse max-table over squares of side 2^k, corner-anchored.
struct MaxTable {
    int nx, ny, levels;
    std::vector<std::vector<double>> t;  // t[k][j*nx+i] = max over [i, i+2^k) x [j, j+2^k)

    MaxTable(const std::vector<double>& base, int nx_, int ny_, int levels_)
        : nx(nx_), ny(ny_), levels(levels_) {
        t.resize(levels + 1);
        t[0] = base;
        for (int k = 1; k <= levels; ++k) {
            t[k] = t[k - 1];
            int half = 1 << (k - 1);
            for (int j = 0; j < ny; ++j) {
                int j2 = std::min(j + half, ny - 1);
                for (int i = 0; i < nx; ++i) {
                    int i2 = std::min(i + half, nx - 1);
                    const auto& p = t[k - 1];
                    double m = p[std::size_t(j) * nx + i];
                    m = std::max(m, p[std::size_t(j) * nx + i2]);
                    m = std::max(m, p[std::size_t(j2) * nx + i]);
                    m = std::max(m, p[std::size_t(j2) * nx + i2]);
                    t[k][std::size_t(j) * nx + i] = m;
                }
            }
        }
    }

    // max over the clamped window [i-w, i+w] x [j-w, j+w], window width 2w+1
    double window(int i, int j, int w) const {
        int lo_i = std::max(0, i - w), hi_i = std::min(nx - 1, i + w);
        int lo_j = std::max(0, j - w), hi_j = std::min(ny - 1, j + w);
        int wi = hi_i - lo_i + 1, wj = hi_j - lo_j + 1;
        int k = 0;
        while ((1 << (k + 1)) <= std::min(wi, wj) && k + 1 <= levels) ++k;
        int si = hi_i - (1 << k) + 1, sj = hi_j - (1 << k) + 1;
        const auto& p = t[k];
        double m = p[std::size_t(lo_j) * nx + lo_i];
        m = std::max(m, p[std::size_t(lo_j) * nx + si]);
        m = std::max(m, p[std::size_t(sj) * nx + lo_i]);
        m = std::max(m, p[std::size_t(sj) * nx + si]);
        // powers-of-two squares cover the window only when wi,wj <= 2^{k+1};
        // our windows have wi = wj = 2w+1 <= 2^{k+1} by construction of k
        return m;
    }
};
}  // namespace

ScalarField modulus_field(const ScalarField& g, const GridSet& H, const ScalarField& omega,
                          double eta) {
    const GridDomain& dom = g.domain();
    if (dom.dim() != 2) throw std::invalid_argument("modulus_field: implemented for n = 2");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("modulus_field: eta in (0,1]");
    const double h = dom.spacing();
    const int nx = dom.dims()[0] + 1, ny = dom.dims()[1] + 1;
    const std::size_t nodes = dom.node_count();

    std::vector<std::uint8_t> inH(nodes, 0);
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        if (!H.occupied(cf)) continue;
        Index cv = dom.cell_at(cf);
        for (int dj = 0; dj <= 1; ++dj)
            for (int di = 0; di <= 1; ++di)
                inH[dom.node_index(Index{cv[0] + di, cv[1] + dj})] = 1;
    }

    VectorField grad = gradient_field(g);
    ScalarField rho = rho_field(H);

    ScalarField cap(dom);
    double cmax = 0.0;
    for (std::size_t f = 0; f < nodes; ++f) {
        cap.at(f) = 0.5 * std::min({rho.at(f), omega.at(f), 1.0});
        if (inH[f]) cmax = std::max(cmax, cap.at(f));
    }
    int m_max = 0;
    while (h * std::pow(2.0, m_max + 1) <= cmax && m_max < 24) ++m_max;
    int levels = m_max + 2;

    // component extrema tables over H (masked with ∓inf)
    std::vector<double> cx_max(nodes), cx_min(nodes), cy_max(nodes), cy_min(nodes);
    for (std::size_t f = 0; f < nodes; ++f) {
        Vec gr = grad.at(f);
        cx_max[f] = inH[f] ? gr[0] : -kInf;
        cx_min[f] = inH[f] ? -gr[0] : -kInf;
        cy_max[f] = inH[f] ? gr[1] : -kInf;
        cy_min[f] = inH[f] ? -gr[1] : -kInf;
    }
    MaxTable tx_max(cx_max, nx, ny, levels), tx_min(cx_min, nx, ny, levels);
    MaxTable ty_max(cy_max, nx, ny, levels), ty_min(cy_min, nx, ny, levels);

    // phi: largest dyadic radius h*2^m with oscillation <= eta/2, capped; a
    // sub-grid radius h/2 is vacuously valid (no second node in the window)
    ScalarField xi(dom);
    for (std::size_t f = 0; f < nodes; ++f) {
        if (!inH[f]) {
            xi.at(f) = 0.0;
            continue;
        }
        Index iv = dom.node_at(f);
        double phi = std::min(h / 2.0, cap.at(f));
        for (int m = m_max; m >= 0; --m) {
            double radius = h * std::pow(2.0, m);
            if (radius > cap.at(f)) continue;
            int w = 1 << m;
            double rx = tx_max.window(iv[0], iv[1], w) + tx_min.window(iv[0], iv[1], w);
            double ry = ty_max.window(iv[0], iv[1], w) + ty_min.window(iv[0], iv[1], w);
            if (rx == -kInf || ry == -kInf) continue;  // window entirely outside H
            double osc = std::sqrt(rx * rx + ry * ry);
            if (osc <= eta / 2.0) {
                phi = std::max(phi, radius);
                break;
            }
        }
        xi.at(f) = eta * phi / 12.0;
    }
    return xi;
}

}  // namespace conewidth
