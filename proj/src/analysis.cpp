#include "conewidth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conewidth {

double lipschitz_estimate(const ScalarField& f) { return f.lipschitz(); }

DerivativeEstimate dini_derivatives(const ScalarField& f, const Vec& x, const Vec& y, int j_min,
                                    int j_max) {
    if (j_min > j_max) throw std::invalid_argument("dini_derivatives: j_min > j_max");
    const GridDomain& dom = f.domain();
    DerivativeEstimate est;
    est.point = x;
    est.direction = y;
    double fx = f.eval(x);
    for (int j = j_min; j <= j_max; ++j) {
        double t = std::pow(2.0, -j);
        Vec probe = x + y * t;
        if (!dom.in_box(probe)) {
            std::ostringstream msg;
            msg << "dini_derivatives: probe escapes the domain at j = " << j;
            throw std::invalid_argument(msg.str());
        }
        est.scales.push_back(t);
        est.quotients.push_back((f.eval(probe) - fx) / t);
    }
    est.upper = *std::max_element(est.quotients.begin(), est.quotients.end());
    est.lower = *std::min_element(est.quotients.begin(), est.quotients.end());
    return est;
}

namespace {
constexpr double kGolden = 0.6180339887498949;  // 1/phi
}

ResidualProfile residual_profile(const ScalarField& f, const Vec& x, const Vec& e,
                                 const std::vector<double>& radii, int ball_samples) {
    if (radii.empty()) throw std::invalid_argument("residual_profile: radii empty");
    if (ball_samples < 4) throw std::invalid_argument("residual_profile: ball_samples >= 4");
    const GridDomain& dom = f.domain();
    if (x.dim() != 2) throw std::invalid_argument("residual_profile: n = 2 sampling pattern");
    ResidualProfile prof;
    prof.point = x;
    prof.target = e;
    double fx = f.eval(x);
    const int shells = 4;
    const int dirs = std::max(1, ball_samples);
    for (double r : radii) {
        double worst = 0.0;
        for (int m = 0; m < dirs; ++m) {
            double theta = 2.0 * 3.14159265358979323846 * std::fmod(m * kGolden, 1.0);
            for (int s = 1; s <= shells; ++s) {
                double rho = r * s / shells;
                Vec yv{rho * std::cos(theta), rho * std::sin(theta)};
                Vec probe = x + yv;
                if (!dom.in_box(probe))
                    throw std::invalid_argument("residual_profile: probe escapes the domain");
                double dev = std::abs(f.eval(probe) - fx - dot(e, yv)) / r;
                worst = std::max(worst, dev);
            }
        }
        prof.residuals.emplace_back(r, worst);
    }
    prof.min_residual = prof.residuals.front().second;
    for (const auto& [r, v] : prof.residuals) prof.min_residual = std::min(prof.min_residual, v);
    return prof;
}

GapReport gap_report(const ScalarField& f, const PointCloud& E, const std::vector<Vec>& ys,
                     int j_min, int j_max, double slack) {
    GapReport rep;
    rep.slack = slack;
    std::size_t passed = 0, total = 0;
    for (std::size_t p = 0; p < E.size(); ++p) {
        for (const Vec& y : ys) {
            GapRow row;
            row.sample = p;
            row.y = y;
            DerivativeEstimate est = dini_derivatives(f, E.point(p), y, j_min, j_max);
            row.gap = est.upper - est.lower;
            double bound = 0.0;
            if (E.normal(p)) {
                if (E.normal(p)->full_space) {
                    bound = 2.0 * norm(y);
                } else {
                    bound = 2.0 * std::abs(dot(E.normal(p)->direction, y));
                }
            }
            row.bound = bound;
            row.pass = row.gap >= bound - slack;
            passed += row.pass ? 1 : 0;
            ++total;
            rep.rows.push_back(std::move(row));
        }
    }
    rep.pass_rate = total > 0 ? static_cast<double>(passed) / static_cast<double>(total) : 1.0;
    return rep;
}

ExampleECheck example_e_check(const ScalarField& f, const PointCloud& E, int j_min, int j_max,
                              double lip_tolerance) {
    double lip = f.lipschitz();
    if (lip > 1.0 + lip_tolerance) {
        std::ostringstream msg;
        msg << "example_e_check: measured Lipschitz constant " << lip << " exceeds 1 + "
            << lip_tolerance;
        throw std::invalid_argument(msg.str());
    }
    ExampleECheck out;
    bool first = true;
    for (std::size_t p = 0; p < E.size(); ++p) {
        if (!E.normal(p) || E.normal(p)->full_space) continue;
        DerivativeEstimate est =
            dini_derivatives(f, E.point(p), E.normal(p)->direction, j_min, j_max);
        if (first || est.upper < out.min_upper) {
            out.min_upper = est.upper;
            out.argmin_index = p;
            out.argmin_point = E.point(p);
            first = false;
        }
    }
    if (first) throw std::invalid_argument("example_e_check: no samples with directed normals");
    return out;
}

}  // namespace conewidth
