#include "conewidth/field.hpp"

#include <algorithm>
#include <cmath>

#include "conewidth/distance.hpp"

namespace conewidth {

namespace {
// Multilinear evaluation helper over the 2^n corners of the containing cell.
template <typename Fetch>
double eval_multilinear(const GridDomain& dom, const Vec& x, Fetch fetch) {
    const std::size_t n = dom.dim();
    Index cell(n);
    std::vector<double> frac(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (x[i] - dom.origin()[i]) / dom.spacing();
        u = std::max(0.0, std::min(u, static_cast<double>(dom.dims()[i])));
        int c = static_cast<int>(std::floor(u));
        if (c >= dom.dims()[i]) c = dom.dims()[i] - 1;
        cell[i] = c;
        frac[i] = u - c;
    }
    double acc = 0.0;
    Index corner(n);
    for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            bool hi = mask & (std::size_t(1) << i);
            corner[i] = cell[i] + (hi ? 1 : 0);
            w *= hi ? frac[i] : 1.0 - frac[i];
        }
        if (w != 0.0) acc += w * fetch(corner);
    }
    return acc;
}
}  // namespace

double ScalarField::eval(const Vec& x) const {
    if (x.dim() != domain_.dim()) throw std::invalid_argument("ScalarField::eval: dimension mismatch");
    return eval_multilinear(domain_, x,
                            [&](const Index& iv) { return samples_[domain_.node_index(iv)]; });
}

double ScalarField::lipschitz() const {
    if (lip_) return *lip_;
    const std::size_t n = domain_.dim();
    const double h = domain_.spacing();
    double best = 0.0;
    Index cell(n), a(n), b(n);
    const std::size_t cells = domain_.cell_count();
    for (std::size_t flat = 0; flat < cells; ++flat) {
        Index cv = domain_.cell_at(flat);
        // max over corner assignments s in {0,1}^n of ||(d_i f at s_{-i})||
        for (std::size_t s = 0; s < (std::size_t(1) << n); ++s) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    int off = (s & (std::size_t(1) << j)) ? 1 : 0;
                    a[j] = cv[j] + (j == i ? 0 : off);
                    b[j] = cv[j] + (j == i ? 1 : off);
                }
                double d = (samples_[domain_.node_index(b)] - samples_[domain_.node_index(a)]) / h;
                acc += d * d;
            }
            best = std::max(best, acc);
        }
    }
    lip_ = std::sqrt(best);
    return *lip_;
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}
double ScalarField::max_value() const {
    double m = samples_.empty() ? 0.0 : samples_[0];
    for (double v : samples_) m = std::max(m, v);
    return m;
}

Vec VectorField::eval(const Vec& x) const {
    Vec out(domain_.dim());
    for (std::size_t i = 0; i < domain_.dim(); ++i) {
        out[i] = eval_multilinear(domain_, x, [&](const Index& iv) {
            return data_[domain_.node_index(iv) * domain_.dim() + i];
        });
    }
    return out;
}

VectorField gradient_field(const ScalarField& f) {
    const GridDomain& dom = f.domain();
    const std::size_t n = dom.dim();
    const double h = dom.spacing();
    VectorField g(dom);
    const std::size_t nodes = dom.node_count();
    Index up(n), dn(n);
    for (std::size_t flat = 0; flat < nodes; ++flat) {
        Index iv = dom.node_at(flat);
        Vec grad(n);
        for (std::size_t i = 0; i < n; ++i) {
            up = iv;
            dn = iv;
            if (iv[i] > 0 && iv[i] < dom.dims()[i]) {
                up[i] = iv[i] + 1;
                dn[i] = iv[i] - 1;
                grad[i] = (f.at(up) - f.at(dn)) / (2.0 * h);
            } else if (iv[i] == 0) {
                up[i] = 1;
                grad[i] = (f.at(up) - f.at(iv)) / h;
            } else {
                dn[i] = iv[i] - 1;
                grad[i] = (f.at(iv) - f.at(dn)) / h;
            }
        }
        g.set(flat, grad);
    }
    return g;
}

ScalarField field_min(const ScalarField& a, const ScalarField& b) {
    if (!(a.domain() == b.domain())) throw std::invalid_argument("field_min: domain mismatch");
    ScalarField r(a.domain());
    for (std::size_t i = 0; i < a.samples().size(); ++i) r.at(i) = std::min(a.at(i), b.at(i));
    return r;
}
ScalarField field_min(const ScalarField& a, double cap) {
    ScalarField r(a.domain());
    for (std::size_t i = 0; i < a.samples().size(); ++i) r.at(i) = std::min(a.at(i), cap);
    return r;
}
ScalarField field_scale(const ScalarField& a, double s) {
    ScalarField r(a.domain());
    for (std::size_t i = 0; i < a.samples().size(); ++i) r.at(i) = s * a.at(i);
    return r;
}
ScalarField field_add(const ScalarField& a, const ScalarField& b) {
    if (!(a.domain() == b.domain())) throw std::invalid_argument("field_add: domain mismatch");
    ScalarField r(a.domain());
    for (std::size_t i = 0; i < a.samples().size(); ++i) r.at(i) = a.at(i) + b.at(i);
    return r;
}

ScalarField rho_field(const GridSet& G) {
    return ScalarField(G.domain(), complement_distance_at_nodes(G));
}

}  // namespace conewidth
