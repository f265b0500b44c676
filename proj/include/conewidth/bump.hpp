#pragma once

#include <vector>

#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"

namespace conewidth {

/// The fixed C-infinity profile: b(t) = exp(1 - 1/(1-t^2)) for |t| < 1, else 0.
double bump_profile(double t);

struct BumpSpec {
    Vec center;
    double radius;
};

/// Normalized bump weights over a finite ball cover. Weights sum to 1 wherever
/// any raw bump is positive; the measured overlap bound M is recorded.
class BumpPartition {
public:
    BumpPartition() = default;
    BumpPartition(std::vector<BumpSpec> bumps, int overlap_bound)
        : bumps_(std::move(bumps)), overlap_(overlap_bound) {}

    std::size_t size() const { return bumps_.size(); }
    const BumpSpec& bump(std::size_t k) const { return bumps_[k]; }
    int overlap_bound() const { return overlap_; }

    double raw(std::size_t k, const Vec& x) const;
    double coverage(const Vec& x) const;  // sum of raw bumps
    double weight(std::size_t k, const Vec& x) const;

private:
    std::vector<BumpSpec> bumps_;
    int overlap_ = 0;
};

struct Carrier {
    Vec center;
    double radius;
    const GridSet* carrier;  // ball must fit inside this open set
};

/// Builds normalized weights from carrier balls. Throws when a ball leaves its
/// carrier or a required point is uncovered (the error lists the gaps).
BumpPartition build_partition(const std::vector<Carrier>& carriers,
                              const std::vector<Vec>& required_points = {});

/// True when every cell whose closure meets B(center, radius) is occupied.
bool ball_inside(const GridSet& G, const Vec& center, double radius);

}  // namespace conewidth
