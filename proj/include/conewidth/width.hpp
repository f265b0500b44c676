#pragma once

#include <cstdint>
#include <vector>

#include "conewidth/cone.hpp"
#include "conewidth/distance.hpp"
#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"
#include "conewidth/pointcloud.hpp"

namespace conewidth {

/// One maximal-length portion of a lattice segment, with the open cells it can
/// lie in. Face-running segments (a zero step component) carry the two adjacent
/// cells; the portion counts when any candidate cell is occupied.
struct SegmentPiece {
    std::vector<Index> cells;  // candidate cell offsets relative to the start node
    double length_lattice;     // length in lattice units (multiply by h)
};

/// Quantized cone directions: integer lattice offsets inside the cone,
/// ||d||_inf <= s_max, primitive (no collinear duplicates), lex-ordered.
struct StepSet {
    Cone cone;
    int s_max;
    std::vector<Index> steps;
    std::vector<std::vector<SegmentPiece>> patterns;  // per step, translation-invariant
};

StepSet build_step_set(const Cone& cone, int s_max);

/// Exact pieces of the segment from lattice node 0 to node d (rational walk).
std::vector<SegmentPiece> segment_pattern(const Index& d);

/// Length of [a,b] inside the open set G (grid clipping; boundary immaterial).
double inside_length(const Vec& a, const Vec& b, const GridSet& G);

/// Cone-monotone lattice polyline.
struct ConePath {
    std::vector<Index> nodes;
    /// Re-score against a grid using the step patterns; throws if a consecutive
    /// difference is not a member of `steps`.
    double score(const GridSet& G, const StepSet& steps) const;
};

struct WidthResult {
    double value = 0.0;
    ConePath argmax_path;
    int s_max = 0;
    double aperture = 0.0;
    double spacing = 0.0;
};

/// Full DP table: best inside-length over paths ending at each node.
struct WidthDP {
    std::vector<double> value_at_node;  // node-indexed
    std::vector<std::int32_t> back_step;  // step id into StepSet, -1 = path start
    double value = 0.0;
    std::size_t argmax_node = 0;
    StepSet steps;
};

WidthDP width_dp(const GridSet& G, const Cone& cone, int s_max);
WidthResult width_open(const GridSet& G, const Cone& cone, int s_max);

/// Independent oracle: memoized depth-first recursion over predecessor steps.
/// Refuses grids with more than 400 nodes.
double width_brute_force(const GridSet& G, const Cone& cone, int s_max);

struct WidthOfSetEntry {
    double radius;
    double value;
    bool under_resolved;
};
struct WidthOfSet {
    std::vector<WidthOfSetEntry> entries;  // in the given (strictly decreasing) order
    double value = 0.0;                    // smallest-radius entry
};

/// Eq.-(D2) surrogate: width of shrinking open neighborhoods of E.
WidthOfSet width_of_set(const PointCloud& E, const Cone& cone, const std::vector<double>& radii,
                        int s_max, const GridDomain& domain);

/// Width function of Eq. (g): forward-ray search over the DP field, sampled at
/// h/2 with multilinear interpolation, clamped at 0. The DP runs on a grid
/// enlarged by an empty margin (curves live on all of R^n; empty cells add no
/// gain but carry the transverse recovery past the window edge). margin < 0
/// picks ceil(width/h) + s_max automatically.
ScalarField width_function(const GridSet& G, const Cone& cone, int s_max, int margin = -1);
/// Raw variant on the given DP table, no virtual margin.
ScalarField width_function(const WidthDP& dp, const GridDomain& domain);

struct DirectionProbe {
    Vec direction;
    struct Sample {
        double eps;
        double r;
        double value;  // smallest-ladder-radius width of E ∩ B(x,r)
    };
    std::vector<Sample> samples;
    bool accepted = false;
};

struct NormalConeEstimate {
    Vec point;
    double threshold;
    std::vector<DirectionProbe> probes;
};

/// Numerical surrogate of N(E,x): direction accepted iff for every eps some r
/// gives width_of_set(E ∩ B(x,r), cone(e,eps), ladder from r/4) <= threshold * r.
NormalConeEstimate estimate_normal_cone(const PointCloud& E, const Vec& x,
                                        const std::vector<double>& eps_list,
                                        const std::vector<double>& r_list,
                                        const std::vector<Vec>& directions, double threshold,
                                        int s_max, double spacing, int padding = 4);

}  // namespace conewidth
