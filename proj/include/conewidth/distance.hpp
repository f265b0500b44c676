#pragma once

#include <vector>

#include "conewidth/grid.hpp"
#include "conewidth/pointcloud.hpp"

namespace conewidth {

/// rho_G(x): Euclidean distance from x to the closed complement of the open set
/// represented by G (the exterior of the domain box counts as complement).
/// Returns 0 when x is not inside G.
double distance_to_complement(const GridSet& G, const Vec& x);

/// distance_to_complement evaluated at every node, via an exact separable
/// distance transform (complement cells are solid squares, not centers).
std::vector<double> complement_distance_at_nodes(const GridSet& G);

struct Neighborhood {
    GridSet set;
    bool under_resolved = false;  // r < h/2: cells may miss geometry between samples
};

/// Open grid superset of E: flags every cell whose closure meets some B(p, r).
Neighborhood neighborhood(const PointCloud& E, double r, const GridDomain& domain);

/// Distance from point x to the closed axis-aligned cell `iv` of `domain`.
double point_to_cell_distance(const GridDomain& domain, const Index& iv, const Vec& x);

}  // namespace conewidth
