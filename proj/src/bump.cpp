#include "conewidth/bump.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "conewidth/distance.hpp"

namespace conewidth {

double bump_profile(double t) {
    double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

double BumpPartition::raw(std::size_t k, const Vec& x) const {
    const BumpSpec& b = bumps_[k];
    return bump_profile(dist(x, b.center) / b.radius);
}

double BumpPartition::coverage(const Vec& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < bumps_.size(); ++k) s += raw(k, x);
    return s;
}

double BumpPartition::weight(std::size_t k, const Vec& x) const {
    double r = raw(k, x);
    if (r == 0.0) return 0.0;
    return r / coverage(x);
}

bool ball_inside(const GridSet& G, const Vec& center, double radius) {
    const GridDomain& dom = G.domain();
    const double h = dom.spacing();
    const int reach = static_cast<int>(std::ceil(radius / h)) + 1;
    Index c = dom.cell_of(center);
    Index iv(dom.dim());
    std::size_t total = 1;
    for (std::size_t i = 0; i < dom.dim(); ++i) total *= static_cast<std::size_t>(2 * reach + 1);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rem = k;
        for (std::size_t i = 0; i < dom.dim(); ++i) {
            iv[i] = c[i] - reach + static_cast<int>(rem % (2 * reach + 1));
            rem /= static_cast<std::size_t>(2 * reach + 1);
        }
        if (point_to_cell_distance(dom, iv, center) >= radius) continue;
        if (!dom.cell_in_range(iv) || !G.occupied(dom.cell_index(iv))) return false;
    }
    return true;
}

BumpPartition build_partition(const std::vector<Carrier>& carriers,
                              const std::vector<Vec>& required_points) {
    std::vector<BumpSpec> bumps;
    for (const Carrier& c : carriers) {
        if (!(c.radius > 0.0)) throw std::invalid_argument("build_partition: radius must be > 0");
        if (c.carrier && !ball_inside(*c.carrier, c.center, c.radius))
            throw std::invalid_argument("build_partition: ball leaves its carrier set");
        bumps.push_back({c.center, c.radius});
    }
    BumpPartition part(bumps, 0);

    std::vector<Vec> gaps;
    for (const Vec& p : required_points)
        if (part.coverage(p) <= 0.0) gaps.push_back(p);
    if (!gaps.empty()) {
        std::ostringstream msg;
        msg << "build_partition: " << gaps.size() << " requested point(s) uncovered:";
        for (std::size_t i = 0; i < gaps.size() && i < 8; ++i) {
            msg << " (";
            for (std::size_t a = 0; a < gaps[i].dim(); ++a) msg << (a ? "," : "") << gaps[i][a];
            msg << ")";
        }
        throw std::invalid_argument(msg.str());
    }

    // measured overlap bound: max number of bumps positive at any carrier node
    int overlap = 0;
    if (!carriers.empty() && carriers.front().carrier) {
        const GridDomain& dom = carriers.front().carrier->domain();
        for (std::size_t f = 0; f < dom.node_count(); ++f) {
            Vec x = dom.node(dom.node_at(f));
            int m = 0;
            for (std::size_t k = 0; k < part.size(); ++k)
                if (part.raw(k, x) > 0.0) ++m;
            overlap = std::max(overlap, m);
        }
    } else {
        for (std::size_t k = 0; k < part.size(); ++k) {
            int m = 0;
            for (std::size_t j = 0; j < part.size(); ++j)
                if (part.raw(j, part.bump(k).center) > 0.0) ++m;
            overlap = std::max(overlap, m);
        }
    }
    return BumpPartition(std::move(bumps), overlap);
}

}  // namespace conewidth
