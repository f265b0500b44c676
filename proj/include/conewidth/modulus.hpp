#pragma once

#include "conewidth/field.hpp"
#include "conewidth/grid.hpp"

namespace conewidth {

/// Linear-approximation modulus: phi(x) is the largest dyadic radius h*2^m with
/// finite-difference gradient oscillation of g at most eta/2 over the square
/// window of that half-width intersected with H, capped by
/// (1/2) min(rho_H, omega, 1). Returns xi = eta * phi / 12, zero outside H.
ScalarField modulus_field(const ScalarField& g, const GridSet& H, const ScalarField& omega,
                          double eta);

}  // namespace conewidth
