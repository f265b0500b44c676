#include "conewidth/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewidth {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas y(q) = (q - s)^2 + f(s) (Felzenszwalb-Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& out) {
    const int n = static_cast<int>(f.size());
    out.assign(f.size(), kInf);
    std::vector<int> v(f.size());
    std::vector<double> z(f.size() + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k] && k > 0) --k;
            else break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) return;
    int kk = 0;
    for (int q = 0; q < n; ++q) {
        while (z[kk + 1] < q) ++kk;
        int p = v[kk];
        out[q] = double(q - p) * (q - p) + f[p];
    }
}
}  // namespace

std::vector<double> complement_distance_at_nodes(const GridSet& G) {
    const GridDomain& dom = G.domain();
    if (dom.dim() != 2)
        throw std::invalid_argument("complement_distance_at_nodes: implemented for n = 2");
    const int nx = dom.dims()[0], ny = dom.dims()[1];
    const double h = dom.spacing();

    // Complement cells are solid squares. For node (i,j) and complement cell (a,b):
    //   dist^2 = dx(a,i)^2 + dy(b,j)^2, dx = max(0, a-i, i-(a+1)) etc (lattice units).
    // gsq(s,j) = squared vertical distance from node row j to the nearest complement
    // cell among the cell columns adjacent to node column s; horizontal F-H pass
    // over s then yields the exact squared distance.
    std::vector<double> gsq(static_cast<std::size_t>(nx + 1) * (ny + 1), kInf);
    auto gref = [&](int s, int j) -> double& {
        return gsq[static_cast<std::size_t>(j) * (nx + 1) + s];
    };

    std::vector<double> dy(ny + 1);
    for (int a = 0; a < nx; ++a) {
        auto complement = [&](int b) {
            Index iv{a, b};
            return !G.occupied(iv);
        };
        int last_below = -1;  // virtual complement row spanning [-1, 0]
        for (int j = 0; j <= ny; ++j) {
            if (j > 0 && complement(j - 1)) last_below = j - 1;
            dy[j] = std::max(0.0, double(j - (last_below + 1)));
        }
        int next_above = ny;  // virtual complement row spanning [ny, ny+1]
        for (int j = ny; j >= 0; --j) {
            if (j < ny && complement(j)) next_above = j;
            dy[j] = std::min(dy[j], std::max(0.0, double(next_above - j)));
        }
        for (int j = 0; j <= ny; ++j) {
            double v = dy[j] * dy[j];
            if (v < gref(a, j)) gref(a, j) = v;
            if (v < gref(a + 1, j)) gref(a + 1, j) = v;
        }
    }
    // Virtual complement columns beyond the box: boundary node columns sit on them.
    for (int j = 0; j <= ny; ++j) {
        gref(0, j) = 0.0;
        gref(nx, j) = 0.0;
    }

    std::vector<double> row(nx + 1), out_row;
    std::vector<double> result(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j) {
        for (int s = 0; s <= nx; ++s) row[s] = gref(s, j);
        edt_1d(row, out_row);
        for (int s = 0; s <= nx; ++s)
            result[static_cast<std::size_t>(j) * (nx + 1) + s] = h * std::sqrt(out_row[s]);
    }
    return result;  // layout matches GridDomain::node_index for n = 2
}

double point_to_cell_distance(const GridDomain& domain, const Index& iv, const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < domain.dim(); ++i) {
        double lo = domain.origin()[i] + domain.spacing() * iv[i];
        double hi = lo + domain.spacing();
        double d = 0.0;
        if (x[i] < lo) d = lo - x[i];
        else if (x[i] > hi) d = x[i] - hi;
        s += d * d;
    }
    return std::sqrt(s);
}

double distance_to_complement(const GridSet& G, const Vec& x) {
    const GridDomain& dom = G.domain();
    if (x.dim() != dom.dim()) throw std::invalid_argument("distance_to_complement: dimension mismatch");
    if (!dom.in_box(x)) throw std::invalid_argument("distance_to_complement: point outside domain box");

    // If x lies in no occupied cell's closure, the distance is 0.
    bool touching = false;
    {
        Index c0 = dom.cell_of(x);
        std::size_t n = dom.dim();
        for (std::size_t mask = 0; mask < (std::size_t(1) << n) && !touching; ++mask) {
            Index iv = c0;
            bool valid = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (std::size_t(1) << i)) {
                    double lo = dom.origin()[i] + dom.spacing() * c0[i];
                    if (std::abs(x[i] - lo) < 1e-12) iv[i] = c0[i] - 1;
                    else valid = false;
                }
            }
            if (valid && dom.cell_in_range(iv) && G.occupied(iv)) touching = true;
        }
    }
    if (!touching) return 0.0;

    double best = kInf;
    const auto& dims = dom.dims();
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        best = std::min(best, x[i] - dom.origin()[i]);
        best = std::min(best, dom.origin()[i] + dom.spacing() * dims[i] - x[i]);
    }
    for (std::size_t flat = 0; flat < dom.cell_count(); ++flat) {
        if (G.occupied(flat)) continue;
        double d = point_to_cell_distance(dom, dom.cell_at(flat), x);
        if (d < best) best = d;
    }
    return std::max(0.0, best);
}

Neighborhood neighborhood(const PointCloud& E, double r, const GridDomain& domain) {
    if (!(r > 0.0)) throw std::invalid_argument("neighborhood: r must be > 0");
    Neighborhood out{GridSet(domain), r < domain.spacing() / 2.0};
    const double h = domain.spacing();
    const int reach = static_cast<int>(std::ceil(r / h)) + 1;
    const std::size_t n = domain.dim();
    Index iv(n);
    for (std::size_t p = 0; p < E.size(); ++p) {
        const Vec& x = E.point(p);
        Index c = domain.cell_of(x);
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(2 * reach + 1);
        for (std::size_t k = 0; k < total; ++k) {
            std::size_t rem = k;
            for (std::size_t i = 0; i < n; ++i) {
                iv[i] = c[i] - reach + static_cast<int>(rem % (2 * reach + 1));
                rem /= static_cast<std::size_t>(2 * reach + 1);
            }
            if (!domain.cell_in_range(iv)) continue;
            if (point_to_cell_distance(domain, iv, x) < r) out.set.mark_if_allowed(iv);
        }
    }
    return out;
}

}  // namespace conewidth
