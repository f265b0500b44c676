#pragma once

#include <memory>
#include <string>
#include <vector>

#include "conewidth/bump.hpp"
#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"
#include "conewidth/pointcloud.hpp"
#include "conewidth/width.hpp"

namespace conewidth {

/// tau(sigma) = sin(arctan(sigma/15)); tan(beta) = sigma/15 < (sigma/7)/2.
double tau_of_sigma(double sigma);

struct PipelineConfig {
    int s_max = 3;
    double width_threshold = 0.1;   // stage hypothesis: measured width <= threshold
    bool strict_width = false;      // strict: abort on width failures; else record
    int k_max_bumps = 64;           // partition size cap (lemma 1 covers)
    double bump_radius = 0.22;      // lemma-1 cover ball radius (absolute)
    int staircase_phi_levels = 32;  // phi quantization ladder for the staircase
    int staircase_distinct_cap = 96;  // distinct lemma-1 evaluations per lemma-2 call
    std::vector<double> lemma1_radii_cells = {16, 8, 4, 2};  // neighborhood ladder, in h units
    std::vector<double> check_radii_cells = {16, 4, 2};      // stage width-check ladder
    int theorem9_max_bumps = 8;     // gamma-cover cap per lemma-U step
    double fd_slack_factor = 2.0;
    /// Effective aperture for reported tolerances: the step set cannot separate
    /// apertures below the s_max slope cap.
    double alpha_eff(double alpha) const {
        double floor = 1.0 / std::sqrt(1.0 + double(s_max) * s_max);
        return std::max(alpha, floor);
    }
    double tolerance(double spacing, double alpha) const {
        return 2.0 * spacing * (1.0 + 1.0 / alpha_eff(alpha));
    }
};

struct Lemma1Report {
    struct Bump {
        Vec center;
        double radius;
        double eps_budget;
        double width_measured;
        double nbhd_radius;
    };
    std::vector<Bump> bumps;
    double width_excess = 0.0;  // max measured/budget, 1 when every bump fits
    std::size_t uncovered_points = 0;
};

struct Lemma1Result {
    ScalarField g;
    GridSet H;
    Lemma1Report report;
};

/// Width-function sum of the Lemma-1 construction: a partition of unity on
/// G = {omega > 0}, per-bump open neighborhoods G_k of E with width budget
/// eps_k, g = sum_k min(g_k phi_k, 2^-k min(1, rho_G^2, omega)).
Lemma1Result lemma1_build(const PointCloud& E, const Vec& e_unit, const ScalarField& omega,
                          double eps, const PipelineConfig& cfg);

/// One construction stage: direction, budget sigma, and the bump providing phi.
/// phi_l(x) = min(1, (n+1) * group->weight(index, x)); a group of one bump whose
/// weight is identically 1 on its support gives phi = 1 there.
struct StageConfig {
    double sigma = 0.0;
    Vec direction;  // ||e|| <= 1; zero direction is the degenerate stage
    std::shared_ptr<const BumpPartition> group;
    int bump_index = 0;
    int level_i = 0, net_j = 0, bump_k = 0;  // provenance (i, j, k)
    double phi(const Vec& x, std::size_t n) const {
        if (!group) return 1.0;
        return std::min(1.0, double(n + 1) * group->weight(static_cast<std::size_t>(bump_index), x));
    }
};

struct StaircaseRun {
    long long i_begin = 0, i_end = 0;
    int gset_id = -1;  // index into distinct sets; -1 = empty set
};

struct Lemma2Result {
    ScalarField f;    // scaled by ||e||
    ScalarField psi;
    GridSet H;
    bool degenerate = false;
    long long k = 0;
    int distinct_stages = 0;
    bool distinct_cap_hit = false;
    double width_excess = 0.0;
    std::vector<StaircaseRun> runs;
};

Lemma2Result lemma2_build(const PointCloud& E, const ScalarField& omega, const ScalarField& phi,
                          const Vec& e, double sigma, const PipelineConfig& cfg);

struct StageRecord {
    double sigma = 0.0;
    Vec direction;
    double width_measured = 0.0;
    bool width_ok = true;
    long long staircase_k = 0;
    int distinct_stages = 0;
    double width_excess = 0.0;
    double max_step_change = 0.0;   // max |f_j - f_{j-1}|
    double omega_prev_max = 0.0;
    double psi_phi_dev_on_H = 0.0;  // max |psi - phi| over H_j nodes
    double grad_increment_dev = 0.0;  // max over E nodes of ||∇f_j-∇f_{j-1}-psi e_j|| - sigma_j
};

struct BuildTrace {
    std::vector<ScalarField> f;      // f_0 .. f_K (f_j kept when keep_fields)
    std::vector<GridSet> H;          // H_0 .. H_K
    std::vector<ScalarField> omega;  // omega_0 .. omega_K
    std::vector<ScalarField> psi;    // psi_1 .. psi_K
    std::vector<StageRecord> stages;
    bool aborted = false;
    std::string abort_reason;
    bool keep_fields = true;

    const ScalarField& final_f() const { return f.back(); }
    const ScalarField& final_omega() const { return omega.back(); }
    const GridSet& final_H() const { return H.back(); }
};

/// Lemma-2x recursion: iterates lemma2_build + modulus_field, recording the
/// trace. Width hypotheses are checked numerically per stage; failures abort
/// in strict mode and are recorded otherwise.
BuildTrace run_recursion(const PointCloud& E, const ScalarField& f0, const GridSet& H0,
                         const ScalarField& omega0, const std::vector<StageConfig>& stages,
                         std::size_t K, const PipelineConfig& cfg, bool keep_fields = true);

/// Continue an existing trace with more stages (theorem-9 steps reuse this).
void extend_recursion(BuildTrace& trace, const PointCloud& E,
                      const std::vector<StageConfig>& stages, std::size_t K,
                      const PipelineConfig& cfg);

}  // namespace conewidth
