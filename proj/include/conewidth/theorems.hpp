#pragma once

#include "conewidth/pipeline.hpp"
#include "conewidth/stages.hpp"

namespace conewidth {

struct Theorem4Result {
    BuildTrace trace;
    StageSelection selection;
    std::vector<Vec> sample_points;
    std::vector<Vec> u;  // gradient surrogate f'_{2K} at the samples
    double eps = 0.0;
    double lip_measured = 0.0;
    double u_max = 0.0;
    double tolerance = 0.0;  // 2h(1 + 1/alpha_eff) at the smallest stage aperture
    double tail_budget = 0.0;  // sum of sigma over selected-but-unrun stages
};

/// Theorem-4 pipeline: Lemma-3 stages at budget eps/2, doubled with negated
/// directions, 2K recursion stages, u = interpolated gradient of f_{2K} at E.
Theorem4Result theorem4_build(const PointCloud& E, double eps, const ScalarField& omega,
                              int K_pairs, int i_max, const PipelineConfig& cfg,
                              const StageSelectConfig& scfg = {});

struct Theorem9Result {
    BuildTrace trace;
    std::vector<Vec> directions;    // e_k, ||e_k|| = 1 - 2^-k
    std::vector<double> eta;        // 2^-(k+1)
    std::vector<double> lip_after;  // measured Lip(f_k)
    std::vector<std::size_t> step_stage_begin;
    bool probe_accepted = true;     // estimate_normal_cone surrogate at samples
    double cover_osc_excess = 0.0;  // gradient oscillation beyond eta/4 on covers
};

/// Theorem-9 pipeline: K lemma-U steps, step k targeting the k-th direction of
/// a golden-angle sequence rescaled to norm 1 - 2^-k, with eta_k = 2^-(k+1) and
/// paired stages e = -f'(x_m), e = e_k over an oscillation-controlled cover.
Theorem9Result theorem9_build(const PointCloud& E, int K, double spacing, int padding,
                              const PipelineConfig& cfg);

struct ZahorskiPiece {
    ScalarField field;
    int k = 0, j = 0;
};
struct ZahorskiResult {
    ScalarField f;
    std::vector<double> weights;  // 2^-(k+j) per piece, in input order
};

/// Finite Zahorski sum f = sum_{(k,j)} 2^-(k+j) g_{k,j}; duplicate (k,j) pairs
/// are rejected.
ZahorskiResult zahorski_sum(const std::vector<ZahorskiPiece>& pieces);

}  // namespace conewidth
