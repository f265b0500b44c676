#pragma once

#include <optional>
#include <vector>

#include "conewidth/grid.hpp"

namespace conewidth {

/// Grid-sampled real function with multilinear interpolation between nodes.
/// Evaluation outside the box clamps to the box (constant extension).
class ScalarField {
public:
    explicit ScalarField(GridDomain domain, double fill = 0.0)
        : domain_(std::move(domain)), samples_(domain_.node_count(), fill) {}
    ScalarField(GridDomain domain, std::vector<double> samples)
        : domain_(std::move(domain)), samples_(std::move(samples)) {
        if (samples_.size() != domain_.node_count())
            throw std::invalid_argument("ScalarField: sample count mismatch");
    }

    const GridDomain& domain() const { return domain_; }
    const std::vector<double>& samples() const { return samples_; }
    double at(std::size_t flat) const { return samples_[flat]; }
    double& at(std::size_t flat) {
        lip_.reset();
        return samples_[flat];
    }
    double at(const Index& iv) const { return samples_[domain_.node_index(iv)]; }
    void set(const Index& iv, double v) {
        lip_.reset();
        samples_[domain_.node_index(iv)] = v;
    }

    double eval(const Vec& x) const;

    /// Exact Lipschitz constant of the interpolant: max over cells of the max
    /// gradient norm, attained at cell corners (the gradient is multilinear and
    /// its norm coordinate-wise convex). Cached.
    double lipschitz() const;

    double max_abs() const;
    double max_value() const;

private:
    GridDomain domain_;
    std::vector<double> samples_;
    mutable std::optional<double> lip_;
};

/// One Vec per node; used for gradients and target derivative fields.
class VectorField {
public:
    explicit VectorField(GridDomain domain)
        : domain_(std::move(domain)), data_(domain_.node_count() * domain_.dim(), 0.0) {}

    const GridDomain& domain() const { return domain_; }
    Vec at(std::size_t flat) const {
        Vec v(domain_.dim());
        for (std::size_t i = 0; i < domain_.dim(); ++i) v[i] = data_[flat * domain_.dim() + i];
        return v;
    }
    void set(std::size_t flat, const Vec& v) {
        for (std::size_t i = 0; i < domain_.dim(); ++i) data_[flat * domain_.dim() + i] = v[i];
    }
    Vec eval(const Vec& x) const;  // multilinear per component

private:
    GridDomain domain_;
    std::vector<double> data_;
};

/// Finite-difference gradient at nodes: central in the interior, one-sided at
/// the box faces.
VectorField gradient_field(const ScalarField& f);

/// Pointwise min / algebra helpers (same domain required).
ScalarField field_min(const ScalarField& a, const ScalarField& b);
ScalarField field_min(const ScalarField& a, double cap);
ScalarField field_scale(const ScalarField& a, double s);
ScalarField field_add(const ScalarField& a, const ScalarField& b);

/// rho_G as a field: distance-to-complement sampled at nodes.
ScalarField rho_field(const GridSet& G);

}  // namespace conewidth
