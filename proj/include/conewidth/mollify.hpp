#pragma once

#include "conewidth/bump.hpp"
#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"

namespace conewidth {

struct MollifyConfig {
    int k_max_bumps = 64;
    double fd_slack_factor = 2.0;  // finite-difference slack = factor*h*(1+Lip(g))
    bool strict = true;            // strict: error on precondition violation
};

struct MollifyResult {
    ScalarField f;
    std::vector<double> scales;  // chosen mollification scale per bump (0 = identity)
    std::size_t bump_count = 0;
    double max_dev = 0.0;        // measured max |f - g|
    double precondition_excess = 0.0;  // worst  ||grad g - Phi|| - (1.1 xi + slack), <= 0 when clean
};

/// Patchwise mollified gluing: f = g outside H ∩ {xi > 0}; inside, a partition
/// of bumps replaces g by convolutions g * eta_s with per-bump scales chosen so
/// that |f_k - g| <= 2^{-k-1} m_k^{-1} omega_0 and ||f_k' - Phi|| <= xi + omega_0
/// hold at sampled nodes. omega_0 = (1/2) min(1, xi*omega, omega, rho_U^2).
MollifyResult mollify_glue(const ScalarField& g, const GridSet& H, const VectorField& Phi,
                           const ScalarField& xi, const ScalarField& omega,
                           const MollifyConfig& cfg = {});

}  // namespace conewidth
