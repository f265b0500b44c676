#pragma once

#include <vector>

#include "conewidth/field.hpp"
#include "conewidth/pointcloud.hpp"

namespace conewidth {

/// Exact Lipschitz constant of the multilinear interpolant of f.
double lipschitz_estimate(const ScalarField& f);

struct DerivativeEstimate {
    Vec point;
    Vec direction;
    std::vector<double> scales;     // t = 2^-j, j = j_min..j_max
    std::vector<double> quotients;  // (f(x + t y) - f(x)) / t
    double upper = 0.0;             // max quotient (limsup surrogate)
    double lower = 0.0;             // min quotient (liminf surrogate)
};

/// One-sided difference quotients over a dyadic scale ladder.
DerivativeEstimate dini_derivatives(const ScalarField& f, const Vec& x, const Vec& y, int j_min,
                                    int j_max);

struct ResidualProfile {
    Vec point;
    Vec target;  // the linear map e
    std::vector<std::pair<double, double>> residuals;  // (r, sampled sup residual / r)
    double min_residual = 0.0;  // liminf surrogate
};

/// Per-radius normalized sup deviation from the linear map e over a fixed
/// low-discrepancy ball sample (golden-angle directions x radial shells).
ResidualProfile residual_profile(const ScalarField& f, const Vec& x, const Vec& e,
                                 const std::vector<double>& radii, int ball_samples);

struct GapRow {
    std::size_t sample = 0;
    Vec y;
    double gap = 0.0;    // upper - lower Dini
    double bound = 0.0;  // 2 sup <e, y> over the sample's claimed normal set
    bool pass = false;
};
struct GapReport {
    std::vector<GapRow> rows;
    double slack = 0.0;
    double pass_rate = 0.0;
};

/// Derivative-gap certificate against 2*sup{<e,y>: e in N(E,x), ||e|| <= 1}.
GapReport gap_report(const ScalarField& f, const PointCloud& E, const std::vector<Vec>& ys,
                     int j_min, int j_max, double slack);

struct ExampleECheck {
    double min_upper = 0.0;
    std::size_t argmin_index = 0;
    Vec argmin_point;
};

/// Example-"e" scan: minimum upper Dini derivative along the normal field.
/// Throws unless the measured Lipschitz constant is at most 1 + lip_tolerance.
ExampleECheck example_e_check(const ScalarField& f, const PointCloud& E, int j_min, int j_max,
                              double lip_tolerance);

}  // namespace conewidth
