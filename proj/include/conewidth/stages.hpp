#pragma once

#include "conewidth/pipeline.hpp"

namespace conewidth {

struct StageSelection {
    std::vector<StageConfig> stages;  // ordered by (level i, net j, bump k)
    struct Level {
        double eps_i;
        double tau_i;
        std::size_t net_size;
        std::size_t net_bound;  // 3^n eps_i^-n
    };
    std::vector<Level> levels;
    int max_overlap = 0;        // measured partition order bound M
    bool truncated = false;     // some (i,j) group hit the bump cap
    /// max over grid nodes of sum_l sigma_l 1_{spt phi_l} (conclusion (1) value)
    double sigma_cover_max(const GridDomain& dom) const;
};

struct StageSelectConfig {
    int bumps_per_group = 16;   // cap per (i,j) partition
    double ball_cap = 0.4;      // upper bound on the cover lattice spacing
};

/// Lemma-3 stage selection: eps_i = 2^-i eps, tau_i = 3^-n eps_i^{n+1}/(n+1),
/// lattice direction nets, per-(i,j) hexagonal ball covers of the matching
/// points subordinated to their validity balls.
StageSelection select_stages(const PointCloud& E, double eps, int i_max,
                             const StageSelectConfig& cfg = {});

/// Conclusion (3) surrogate: every point has some stage with sigma_l < eta,
/// ||e_x-member - e_l|| < eta and phi_l(x) = 1, checked at eta = 2 eps_{i_max}.
/// Returns the number of failing points.
std::size_t density_check(const StageSelection& sel, const PointCloud& E, double eta);

}  // namespace conewidth
