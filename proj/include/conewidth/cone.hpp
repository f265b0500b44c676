#pragma once

#include <cmath>
#include <stdexcept>

#include "conewidth/vec.hpp"

namespace conewidth {

/// Cone C_{e,alpha} = { v : <v,e> >= alpha * ||v|| }, axis e unit, aperture in (0,1].
/// Small apertures are wide cones (nearly a half-space), aperture 1 is the ray along e.
class Cone {
public:
    Cone(const Vec& axis, double aperture) : axis_(axis), aperture_(aperture) {
        double n = norm(axis);
        if (n == 0.0) throw std::invalid_argument("Cone: zero axis");
        if (std::abs(n - 1.0) > 1e-12) axis_ *= 1.0 / n;
        if (!(aperture > 0.0 && aperture <= 1.0))
            throw std::invalid_argument("Cone: aperture must be in (0,1]");
    }

    const Vec& axis() const { return axis_; }
    double aperture() const { return aperture_; }

private:
    Vec axis_;
    double aperture_;
};

/// Membership test of Definition-style cones; the zero vector is a member.
inline bool cone_contains(const Cone& cone, const Vec& v) {
    check_same_dim(cone.axis(), v, "cone_contains");
    return dot(v, cone.axis()) >= cone.aperture() * norm(v);
}

}  // namespace conewidth
