#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "conewidth/vec.hpp"

namespace conewidth {

/// Per-point claim that a direction lies in N(E,x), valid inside B(x, delta).
/// `full_space` encodes "every direction" (uniformly purely unrectifiable tagging).
struct NormalData {
    Vec direction;          // unit; ignored when full_space
    double delta = 1.0;     // validity radius > 0
    bool full_space = false;
};

/// Finite sample of a set E with optional normal data and its bounding box.
class PointCloud {
public:
    PointCloud(std::size_t dim, Vec box_lo, Vec box_hi)
        : dim_(dim), box_lo_(std::move(box_lo)), box_hi_(std::move(box_hi)) {}

    std::size_t dim() const { return dim_; }
    const Vec& box_lo() const { return box_lo_; }
    const Vec& box_hi() const { return box_hi_; }

    void add(const Vec& p) {
        check_point(p);
        points_.push_back(p);
        normals_.push_back(std::nullopt);
    }
    void add(const Vec& p, NormalData nd) {
        check_point(p);
        if (!nd.full_space) {
            if (std::abs(norm(nd.direction) - 1.0) > 1e-12)
                throw std::invalid_argument("PointCloud: normal direction must be unit");
        }
        if (!(nd.delta > 0.0)) throw std::invalid_argument("PointCloud: delta must be > 0");
        points_.push_back(p);
        normals_.push_back(std::move(nd));
    }

    std::size_t size() const { return points_.size(); }
    const Vec& point(std::size_t i) const { return points_[i]; }
    const std::optional<NormalData>& normal(std::size_t i) const { return normals_[i]; }
    const std::vector<Vec>& points() const { return points_; }

    bool all_have_normals() const {
        for (const auto& n : normals_)
            if (!n) return false;
        return true;
    }

private:
    void check_point(const Vec& p) {
        if (p.dim() != dim_) throw std::invalid_argument("PointCloud: point dimension mismatch");
        for (std::size_t i = 0; i < dim_; ++i)
            if (p[i] < box_lo_[i] - 1e-12 || p[i] > box_hi_[i] + 1e-12)
                throw std::invalid_argument("PointCloud: point outside the declared box");
    }

    std::size_t dim_;
    Vec box_lo_, box_hi_;
    std::vector<Vec> points_;
    std::vector<std::optional<NormalData>> normals_;
};

}  // namespace conewidth
