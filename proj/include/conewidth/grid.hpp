#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "conewidth/vec.hpp"

namespace conewidth {

using Index = std::vector<int>;  // per-axis integer tuple

/// Axis-aligned lattice over a padded box. `dims` are cell counts per axis
/// (padding rings included); nodes are cell corners, dims[i]+1 per axis.
class GridDomain {
public:
    GridDomain(Vec origin, double spacing, std::vector<int> dims, int padding)
        : origin_(std::move(origin)), h_(spacing), dims_(std::move(dims)), padding_(padding) {
        if (h_ <= 0.0) throw std::invalid_argument("GridDomain: spacing must be > 0");
        if (padding_ < 0) throw std::invalid_argument("GridDomain: padding must be >= 0");
        if (dims_.size() != origin_.dim())
            throw std::invalid_argument("GridDomain: dims/origin dimension mismatch");
        for (int d : dims_) {
            if (d < 1) throw std::invalid_argument("GridDomain: all dims must be >= 1");
            if (d <= 2 * padding_ && padding_ > 0)
                throw std::invalid_argument("GridDomain: dims must exceed twice the padding");
        }
    }

    /// Domain whose unpadded box covers [lo, hi], with `padding` empty rings around it.
    static GridDomain cover(const Vec& lo, const Vec& hi, double spacing, int padding) {
        check_same_dim(lo, hi, "GridDomain::cover");
        std::vector<int> dims(lo.dim());
        Vec origin(lo.dim());
        for (std::size_t i = 0; i < lo.dim(); ++i) {
            double len = hi[i] - lo[i];
            if (len <= 0.0) throw std::invalid_argument("GridDomain::cover: empty box");
            int inner = static_cast<int>(std::ceil(len / spacing - 1e-9));
            dims[i] = inner + 2 * padding;
            origin[i] = lo[i] - padding * spacing;
        }
        return GridDomain(origin, spacing, dims, padding);
    }

    std::size_t dim() const { return dims_.size(); }
    double spacing() const { return h_; }
    const Vec& origin() const { return origin_; }
    const std::vector<int>& dims() const { return dims_; }
    int padding() const { return padding_; }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (int d : dims_) n *= static_cast<std::size_t>(d);
        return n;
    }
    std::size_t node_count() const {
        std::size_t n = 1;
        for (int d : dims_) n *= static_cast<std::size_t>(d + 1);
        return n;
    }

    /// node(i) = origin + h*i
    Vec node(const Index& iv) const {
        Vec x = origin_;
        for (std::size_t i = 0; i < dims_.size(); ++i) x[i] += h_ * iv[i];
        return x;
    }

    bool cell_in_range(const Index& iv) const {
        for (std::size_t i = 0; i < dims_.size(); ++i)
            if (iv[i] < 0 || iv[i] >= dims_[i]) return false;
        return true;
    }
    bool node_in_range(const Index& iv) const {
        for (std::size_t i = 0; i < dims_.size(); ++i)
            if (iv[i] < 0 || iv[i] > dims_[i]) return false;
        return true;
    }
    bool cell_in_padding(const Index& iv) const {
        for (std::size_t i = 0; i < dims_.size(); ++i)
            if (iv[i] < padding_ || iv[i] >= dims_[i] - padding_) return true;
        return false;
    }

    std::size_t cell_index(const Index& iv) const {
        std::size_t idx = 0, stride = 1;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            idx += static_cast<std::size_t>(iv[i]) * stride;
            stride *= static_cast<std::size_t>(dims_[i]);
        }
        return idx;
    }
    std::size_t node_index(const Index& iv) const {
        std::size_t idx = 0, stride = 1;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            idx += static_cast<std::size_t>(iv[i]) * stride;
            stride *= static_cast<std::size_t>(dims_[i] + 1);
        }
        return idx;
    }
    Index cell_at(std::size_t flat) const {
        Index iv(dims_.size());
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            iv[i] = static_cast<int>(flat % static_cast<std::size_t>(dims_[i]));
            flat /= static_cast<std::size_t>(dims_[i]);
        }
        return iv;
    }
    Index node_at(std::size_t flat) const {
        Index iv(dims_.size());
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            iv[i] = static_cast<int>(flat % static_cast<std::size_t>(dims_[i] + 1));
            flat /= static_cast<std::size_t>(dims_[i] + 1);
        }
        return iv;
    }

    /// Cell containing x (clamped to range); box membership is checked separately.
    Index cell_of(const Vec& x) const {
        Index iv(dims_.size());
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            int c = static_cast<int>(std::floor((x[i] - origin_[i]) / h_));
            if (c < 0) c = 0;
            if (c >= dims_[i]) c = dims_[i] - 1;
            iv[i] = c;
        }
        return iv;
    }

    bool in_box(const Vec& x) const {
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (x[i] < origin_[i] - 1e-12 || x[i] > origin_[i] + h_ * dims_[i] + 1e-12) return false;
        }
        return true;
    }

    Vec box_lo() const { return origin_; }
    Vec box_hi() const {
        Vec x = origin_;
        for (std::size_t i = 0; i < dims_.size(); ++i) x[i] += h_ * dims_[i];
        return x;
    }

    friend bool operator==(const GridDomain& a, const GridDomain& b) {
        return a.origin_.components() == b.origin_.components() && a.h_ == b.h_ &&
               a.dims_ == b.dims_ && a.padding_ == b.padding_;
    }

private:
    Vec origin_;
    double h_;
    std::vector<int> dims_;
    int padding_;
};

/// Open set represented as a union of open grid cells. Padding cells stay empty.
class GridSet {
public:
    explicit GridSet(GridDomain domain)
        : domain_(std::move(domain)), occ_(domain_.cell_count(), 0) {}

    const GridDomain& domain() const { return domain_; }
    const std::vector<std::uint8_t>& occupancy() const { return occ_; }

    bool occupied(std::size_t flat) const { return occ_[flat] != 0; }
    bool occupied(const Index& iv) const {
        return domain_.cell_in_range(iv) && occ_[domain_.cell_index(iv)] != 0;
    }

    void set_cell(const Index& iv, bool value) {
        if (!domain_.cell_in_range(iv)) throw std::invalid_argument("GridSet: cell out of range");
        if (value && domain_.cell_in_padding(iv))
            throw std::invalid_argument("GridSet: padding cells must stay empty");
        occ_[domain_.cell_index(iv)] = value ? 1 : 0;
    }
    /// Like set_cell but silently ignores padding / out-of-range cells.
    void mark_if_allowed(const Index& iv) {
        if (!domain_.cell_in_range(iv) || domain_.cell_in_padding(iv)) return;
        occ_[domain_.cell_index(iv)] = 1;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : occ_) n += b;
        return n;
    }
    bool empty() const { return count() == 0; }

    bool subset_of(const GridSet& other) const {
        for (std::size_t i = 0; i < occ_.size(); ++i)
            if (occ_[i] && !other.occ_[i]) return false;
        return true;
    }

    GridSet intersect(const GridSet& other) const {
        GridSet r(domain_);
        for (std::size_t i = 0; i < occ_.size(); ++i) r.occ_[i] = occ_[i] & other.occ_[i];
        return r;
    }
    GridSet unite(const GridSet& other) const {
        GridSet r(domain_);
        for (std::size_t i = 0; i < occ_.size(); ++i) r.occ_[i] = occ_[i] | other.occ_[i];
        return r;
    }

    friend bool operator==(const GridSet& a, const GridSet& b) {
        return a.domain_ == b.domain_ && a.occ_ == b.occ_;
    }

private:
    GridDomain domain_;
    std::vector<std::uint8_t> occ_;
};

}  // namespace conewidth
