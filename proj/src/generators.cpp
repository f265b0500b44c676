#include "conewidth/generators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace conewidth {

PointCloud gen_four_corner_cantor(int depth) {
    if (depth < 1 || depth > 8)
        throw std::invalid_argument("gen_four_corner_cantor: depth must be in [1,8]");
    PointCloud cloud(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    const double corners[4][2] = {{0.0, 0.0}, {0.75, 0.0}, {0.0, 0.75}, {0.75, 0.75}};
    std::size_t count = 1;
    for (int d = 0; d < depth; ++d) count *= 4;
    for (std::size_t code = 0; code < count; ++code) {
        double x = 0.0, y = 0.0, scale = 1.0;
        std::size_t c = code;
        for (int d = 0; d < depth; ++d) {
            int digit = static_cast<int>(c % 4);
            c /= 4;
            x += scale * corners[digit][0];
            y += scale * corners[digit][1];
            scale *= 0.25;
        }
        NormalData nd;
        nd.full_space = true;
        nd.delta = 1.0;
        nd.direction = Vec{1.0, 0.0};
        cloud.add(Vec{x, y}, nd);
    }
    return cloud;
}

namespace {
void cantor_intervals(double ratio, int depth, double lo, double hi,
                      std::vector<std::pair<double, double>>& out) {
    if (depth == 0) {
        out.emplace_back(lo, hi);
        return;
    }
    double len = hi - lo;
    cantor_intervals(ratio, depth - 1, lo, lo + ratio * len, out);
    cantor_intervals(ratio, depth - 1, hi - ratio * len, hi, out);
}
}  // namespace

PointCloud gen_cantor_product(double ratio, int depth, int y_samples) {
    if (!(ratio > 0.0 && ratio < 0.5))
        throw std::invalid_argument("gen_cantor_product: ratio must be in (0, 1/2)");
    if (depth < 1 || depth > 10)
        throw std::invalid_argument("gen_cantor_product: depth must be in [1,10]");
    if (y_samples < 2) throw std::invalid_argument("gen_cantor_product: y_samples must be >= 2");
    std::vector<std::pair<double, double>> intervals;
    cantor_intervals(ratio, depth, 0.0, 1.0, intervals);
    PointCloud cloud(2, Vec{0.0, 0.0}, Vec{1.0, 1.0});
    NormalData nd;
    nd.direction = Vec{1.0, 0.0};
    nd.delta = 1.0;
    for (const auto& [a, b] : intervals) {
        for (double x : {a, b}) {
            for (int j = 0; j < y_samples; ++j) {
                double y = static_cast<double>(j) / (y_samples - 1);
                cloud.add(Vec{x, y}, nd);
            }
        }
    }
    return cloud;
}

double graph_family_bump(double s) {
    double t = 1.0 - s * s;
    return t * t;
}
double graph_family_bump_deriv(double s) { return -4.0 * s * (1.0 - s * s); }

PointCloud gen_graph_family(int k_max, int samples) {
    if (k_max < 1) throw std::invalid_argument("gen_graph_family: k_max must be >= 1");
    if (samples < 16) throw std::invalid_argument("gen_graph_family: samples must be >= 16");
    PointCloud cloud(2, Vec{-1.0, -1.0}, Vec{1.0, 1.0});
    std::vector<int> ks;
    ks.push_back(0);
    for (int k = 1; k <= k_max; ++k) {
        ks.push_back(k);
        ks.push_back(-k);
    }
    for (int k : ks) {
        for (int i = 0; i < samples; ++i) {
            double s = -1.0 + 2.0 * i / (samples - 1);
            double y = (k == 0) ? 0.0 : graph_family_bump(s) / k;
            double dy = (k == 0) ? 0.0 : graph_family_bump_deriv(s) / k;
            NormalData nd;
            nd.direction = normalized(Vec{-dy, 1.0});
            nd.delta = 1.0;
            cloud.add(Vec{s, y}, nd);
        }
    }
    return cloud;
}

std::vector<RationalLine> enumerate_rational_lines(int count) {
    if (count < 1) throw std::invalid_argument("enumerate_rational_lines: count must be >= 1");
    // tuples (p, q, r, s): slope p/q (q >= 1) or vertical when q == 0 (then p == 1),
    // intercept r/s (s >= 1); coprime pairs; ordered by max(|p|,q,|r|,s), then lex.
    struct Tuple {
        int p, q, r, s;
    };
    std::vector<RationalLine> lines;
    std::vector<Tuple> seen;
    for (int bound = 1; static_cast<int>(lines.size()) < count && bound <= 64; ++bound) {
        std::vector<Tuple> batch;
        for (int p = -bound; p <= bound; ++p) {
            for (int q = 0; q <= bound; ++q) {
                if (q == 0 && p != 1) continue;
                if (q > 0 && std::gcd(std::abs(p), q) != 1) continue;
                for (int r = -bound; r <= bound; ++r) {
                    for (int s = 1; s <= bound; ++s) {
                        if (std::gcd(std::abs(r), s) != 1) continue;
                        int m = std::max({std::abs(p), q, std::abs(r), s});
                        if (m != bound) continue;  // new tuples only at this bound
                        batch.push_back({p, q, r, s});
                    }
                }
            }
        }
        auto key = [](const Tuple& t) {
            return std::array<int, 6>{std::abs(t.p), t.p < 0, t.q, std::abs(t.r), t.r < 0, t.s};
        };
        std::sort(batch.begin(), batch.end(),
                  [&](const Tuple& a, const Tuple& b) { return key(a) < key(b); });
        for (const Tuple& t : batch) {
            RationalLine L;
            if (t.q == 0) {
                L.vertical = true;
                L.intercept = static_cast<double>(t.r) / t.s;
            } else {
                L.slope = static_cast<double>(t.p) / t.q;
                L.intercept = static_cast<double>(t.r) / t.s;
            }
            lines.push_back(L);
            if (static_cast<int>(lines.size()) == count) break;
        }
    }
    if (static_cast<int>(lines.size()) < count)
        throw std::invalid_argument("enumerate_rational_lines: count too large for the enumeration bound");
    return lines;
}

LineNeighborhoodResult gen_line_neighborhood_set(int line_count, double eps_budget,
                                                 const Cone& cone, const GridDomain& domain) {
    if (line_count < 1) throw std::invalid_argument("gen_line_neighborhood_set: line_count >= 1");
    if (!(eps_budget > 0.0)) throw std::invalid_argument("gen_line_neighborhood_set: eps_budget > 0");
    if (domain.dim() != 2) throw std::invalid_argument("gen_line_neighborhood_set: n = 2 only");
    auto lines = enumerate_rational_lines(line_count);
    LineNeighborhoodResult out{GridSet(domain), 0};
    const double h = domain.spacing();
    const double eta = cone.aperture();
    for (int j = 0; j < line_count; ++j) {
        const RationalLine& L = lines[j];
        if (std::abs(dot(L.direction(), cone.axis())) >= 0.5 * eta) continue;
        ++out.kept_lines;
        double eps_j = eps_budget * std::pow(2.0, -(j + 1));
        // strip {x : dist(x, L) < eps_j}; a cell intersects it iff the line's signed
        // distance at the cell center is < eps_j + max projection of the half-extents
        double nx, ny, c;  // line as nx*x + ny*y = c with (nx,ny) unit normal
        if (L.vertical) {
            nx = 1.0;
            ny = 0.0;
            c = L.intercept;
        } else {
            double n = std::sqrt(L.slope * L.slope + 1.0);
            nx = -L.slope / n;
            ny = 1.0 / n;
            c = L.intercept / n;
        }
        double reach = (std::abs(nx) + std::abs(ny)) * h / 2.0;
        for (std::size_t flat = 0; flat < domain.cell_count(); ++flat) {
            Index iv = domain.cell_at(flat);
            double cx = domain.origin()[0] + h * (iv[0] + 0.5);
            double cy = domain.origin()[1] + h * (iv[1] + 0.5);
            double d = std::abs(nx * cx + ny * cy - c);
            if (d < eps_j + reach) out.set.mark_if_allowed(iv);
        }
    }
    return out;
}

}  // namespace conewidth
