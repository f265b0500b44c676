#pragma once

#include "conewidth/cone.hpp"
#include "conewidth/grid.hpp"
#include "conewidth/pointcloud.hpp"

namespace conewidth {

/// 4^depth corner points of the planar four-corner Cantor construction
/// (contraction 1/4 toward the unit-square corners), tagged "all directions".
PointCloud gen_four_corner_cantor(int depth);

/// Endpoints of the depth-level intervals of the middle-(1-2*ratio) Cantor set,
/// crossed with y samples on [0,1]. Normal data: e_x = (1,0), delta = 1.
PointCloud gen_cantor_product(double ratio, int depth, int y_samples = 65);

/// Graphs of phi_k = phi/k, phi(s) = (1-s^2)^2 on [-1,1], k = 0, +-1..+-k_max,
/// with unit normals proportional to (-phi_k'(s), 1).
PointCloud gen_graph_family(int k_max, int samples);

double graph_family_bump(double s);        // (1-s^2)^2
double graph_family_bump_deriv(double s);  // -4s(1-s^2)

/// A rational line y = (p/q)x + r/s, or x = r/s when vertical.
struct RationalLine {
    bool vertical = false;
    double slope = 0.0;      // p/q (non-vertical)
    double intercept = 0.0;  // r/s
    Vec direction() const {
        if (vertical) return Vec{0.0, 1.0};
        double n = std::sqrt(1.0 + slope * slope);
        return Vec{1.0 / n, slope / n};
    }
};

/// Deterministic enumeration of rational lines: tuples (p,q,r,s), q >= 0,
/// gcd-reduced, ordered by max(|p|,q,|r|,s) then lexicographically; q = 0 means
/// the vertical line x = r/s. Returns the first `count` lines.
std::vector<RationalLine> enumerate_rational_lines(int count);

struct LineNeighborhoodResult {
    GridSet set;
    int kept_lines = 0;  // lines passing the J-filter among the first line_count
};

/// Union of open (eps_budget * 2^-j)-strips around the first line_count rational
/// lines whose direction u passes |<u,e>| < aperture/2, rasterized on `domain`.
LineNeighborhoodResult gen_line_neighborhood_set(int line_count, double eps_budget,
                                                 const Cone& cone, const GridDomain& domain);

}  // namespace conewidth
