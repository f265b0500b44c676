#include "conewidth/width.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace conewidth {

namespace {

long long floor_div(long long a, long long b) {  // b > 0
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

struct Frac {
    long long num, den;  // den > 0
};
bool frac_less(const Frac& a, const Frac& b) { return a.num * b.den < b.num * a.den; }
bool frac_eq(const Frac& a, const Frac& b) { return a.num * b.den == b.num * a.den; }

bool lex_less(const Index& a, const Index& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

}  // namespace

std::vector<SegmentPiece> segment_pattern(const Index& d) {
    const std::size_t n = d.size();
    double dnorm = 0.0;
    for (int c : d) dnorm += static_cast<double>(c) * c;
    dnorm = std::sqrt(dnorm);

    std::vector<Frac> times;
    times.push_back({0, 1});
    times.push_back({1, 1});
    for (std::size_t i = 0; i < n; ++i) {
        long long m = std::abs(static_cast<long long>(d[i]));
        for (long long k = 1; k < m; ++k) times.push_back({k, m});
    }
    std::sort(times.begin(), times.end(), frac_less);
    times.erase(std::unique(times.begin(), times.end(), frac_eq), times.end());

    std::vector<SegmentPiece> pieces;
    for (std::size_t s = 0; s + 1 < times.size(); ++s) {
        const Frac &ta = times[s], &tb = times[s + 1];
        // midpoint (ta + tb)/2 = (ta.num*tb.den + tb.num*ta.den) / (2*ta.den*tb.den)
        long long mn = ta.num * tb.den + tb.num * ta.den;
        long long md = 2 * ta.den * tb.den;
        Index base(n);
        std::vector<std::size_t> free_axes;
        for (std::size_t i = 0; i < n; ++i) {
            if (d[i] == 0) {
                base[i] = 0;
                free_axes.push_back(i);  // on the face between cells -1 and 0
            } else {
                base[i] = static_cast<int>(floor_div(static_cast<long long>(d[i]) * mn, md));
            }
        }
        SegmentPiece piece;
        for (std::size_t mask = 0; mask < (std::size_t(1) << free_axes.size()); ++mask) {
            Index cell = base;
            for (std::size_t fi = 0; fi < free_axes.size(); ++fi)
                if (mask & (std::size_t(1) << fi)) cell[free_axes[fi]] = -1;
            piece.cells.push_back(cell);
        }
        double ta_d = static_cast<double>(ta.num) / ta.den;
        double tb_d = static_cast<double>(tb.num) / tb.den;
        piece.length_lattice = (tb_d - ta_d) * dnorm;
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

StepSet build_step_set(const Cone& cone, int s_max) {
    if (s_max < 1) throw std::invalid_argument("build_step_set: s_max must be >= 1");
    const std::size_t n = cone.axis().dim();
    StepSet out{cone, s_max, {}, {}};
    const int w = 2 * s_max + 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(w);
    std::vector<Index> kept;
    for (std::size_t k = 0; k < total; ++k) {
        Index d(n);
        std::size_t rem = k;
        bool zero = true;
        int g = 0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = static_cast<int>(rem % w) - s_max;
            rem /= static_cast<std::size_t>(w);
            if (d[i] != 0) zero = false;
            g = std::gcd(g, std::abs(d[i]));
        }
        if (zero || g != 1) continue;  // primitive representatives only
        Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = d[i];
        if (!cone_contains(cone, v)) continue;
        kept.push_back(d);
    }
    std::sort(kept.begin(), kept.end(), lex_less);
    if (kept.empty())
        throw std::runtime_error(
            "build_step_set: no lattice step fits the cone; increase s_max to quantize a "
            "narrower aperture");
    out.steps = std::move(kept);
    out.patterns.reserve(out.steps.size());
    for (const Index& d : out.steps) out.patterns.push_back(segment_pattern(d));
    return out;
}

double inside_length(const Vec& a, const Vec& b, const GridSet& G) {
    const GridDomain& dom = G.domain();
    check_same_dim(a, b, "inside_length");
    if (a.dim() != dom.dim()) throw std::invalid_argument("inside_length: dimension mismatch");
    const std::size_t n = dom.dim();
    const double h = dom.spacing();
    double seglen = dist(a, b);
    if (seglen == 0.0) return 0.0;

    // clip to the domain box
    double t0 = 0.0, t1 = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = dom.origin()[i], hi = lo + h * dom.dims()[i];
        double di = b[i] - a[i];
        if (di == 0.0) {
            if (a[i] < lo || a[i] > hi) return 0.0;
        } else {
            double u = (lo - a[i]) / di, v = (hi - a[i]) / di;
            if (u > v) std::swap(u, v);
            t0 = std::max(t0, u);
            t1 = std::min(t1, v);
        }
    }
    if (t0 >= t1) return 0.0;

    std::vector<double> times{t0, t1};
    for (std::size_t i = 0; i < n; ++i) {
        double di = b[i] - a[i];
        if (di == 0.0) continue;
        double lo = (a[i] + t0 * di - dom.origin()[i]) / h;
        double hi = (a[i] + t1 * di - dom.origin()[i]) / h;
        if (lo > hi) std::swap(lo, hi);
        for (int k = static_cast<int>(std::ceil(lo - 1e-12)); k <= static_cast<int>(std::floor(hi + 1e-12)); ++k) {
            double t = (dom.origin()[i] + k * h - a[i]) / di;
            if (t > t0 + 1e-15 && t < t1 - 1e-15) times.push_back(t);
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-14; }),
                times.end());

    double acc = 0.0;
    Index cell(n);
    for (std::size_t s = 0; s + 1 < times.size(); ++s) {
        double tm = 0.5 * (times[s] + times[s + 1]);
        bool occupied = false;
        // cells containing the midpoint; face-running axes contribute both sides
        std::vector<std::size_t> free_axes;
        for (std::size_t i = 0; i < n; ++i) {
            double u = (a[i] + tm * (b[i] - a[i]) - dom.origin()[i]) / h;
            double fl = std::floor(u);
            if (b[i] - a[i] == 0.0 && std::abs(u - std::round(u)) < 1e-12) {
                cell[i] = static_cast<int>(std::round(u));  // on the face; check i-1 and i
                free_axes.push_back(i);
            } else {
                cell[i] = static_cast<int>(fl);
            }
        }
        for (std::size_t mask = 0; mask < (std::size_t(1) << free_axes.size()) && !occupied; ++mask) {
            Index c = cell;
            for (std::size_t fi = 0; fi < free_axes.size(); ++fi)
                if (mask & (std::size_t(1) << fi)) c[free_axes[fi]] -= 1;
            if (G.occupied(c)) occupied = true;
        }
        if (occupied) acc += (times[s + 1] - times[s]) * seglen;
    }
    return acc;
}

namespace {

// Gain of the step ending at node y coming from node p = y - d, using the
// translation-invariant pattern anchored at p. Lengths in spacing units.
double step_gain(const GridSet& G, const Index& p, const std::vector<SegmentPiece>& pattern,
                 double h) {
    const GridDomain& dom = G.domain();
    double acc = 0.0;
    Index c(p.size());
    for (const SegmentPiece& piece : pattern) {
        bool occupied = false;
        for (const Index& rel : piece.cells) {
            bool ok = true;
            for (std::size_t i = 0; i < c.size(); ++i) {
                c[i] = p[i] + rel[i];
                if (c[i] < 0 || c[i] >= dom.dims()[i]) {
                    ok = false;
                    break;
                }
            }
            if (ok && G.occupied(dom.cell_index(c))) {
                occupied = true;
                break;
            }
        }
        if (occupied) acc += piece.length_lattice * h;
    }
    return acc;
}

std::vector<std::size_t> node_order(const GridDomain& dom, const Vec& axis) {
    const std::size_t count = dom.node_count();
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::vector<double> key(count);
    std::vector<Index> tuples(count);
    for (std::size_t f = 0; f < count; ++f) {
        tuples[f] = dom.node_at(f);
        double k = 0.0;
        for (std::size_t i = 0; i < dom.dim(); ++i) k += tuples[f][i] * axis[i];
        key[f] = k;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        return lex_less(tuples[a], tuples[b]);
    });
    return order;
}

}  // namespace

WidthDP width_dp(const GridSet& G, const Cone& cone, int s_max) {
    const GridDomain& dom = G.domain();
    WidthDP dp{{}, {}, 0.0, 0, build_step_set(cone, s_max)};
    const std::size_t count = dom.node_count();
    dp.value_at_node.assign(count, 0.0);
    dp.back_step.assign(count, -1);

    // Steps iterated so that predecessors appear in ascending lex order: with
    // strict improvement this breaks ties toward the lexicographically smaller
    // predecessor. p = y - d, so iterate d in descending lex order.
    std::vector<std::size_t> step_order(dp.steps.steps.size());
    std::iota(step_order.begin(), step_order.end(), std::size_t(0));
    std::reverse(step_order.begin(), step_order.end());

    const double h = dom.spacing();
    auto order = node_order(dom, cone.axis());
    Index p(dom.dim());
    for (std::size_t f : order) {
        Index y = dom.node_at(f);
        double best = 0.0;
        std::int32_t back = -1;
        for (std::size_t si : step_order) {
            const Index& d = dp.steps.steps[si];
            bool ok = true;
            for (std::size_t i = 0; i < dom.dim(); ++i) {
                p[i] = y[i] - d[i];
                if (p[i] < 0 || p[i] > dom.dims()[i]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            double cand = dp.value_at_node[dom.node_index(p)] +
                          step_gain(G, p, dp.steps.patterns[si], h);
            if (cand > best) {
                best = cand;
                back = static_cast<std::int32_t>(si);
            }
        }
        dp.value_at_node[f] = best;
        dp.back_step[f] = back;
        if (best > dp.value) {
            dp.value = best;
            dp.argmax_node = f;
        }
    }
    return dp;
}

double ConePath::score(const GridSet& G, const StepSet& steps) const {
    if (nodes.size() < 2) return 0.0;
    const GridDomain& dom = G.domain();
    double acc = 0.0;
    double prev_key = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < nodes.size(); ++s) {
        Index d(dom.dim());
        for (std::size_t i = 0; i < dom.dim(); ++i) d[i] = nodes[s + 1][i] - nodes[s][i];
        auto it = std::find(steps.steps.begin(), steps.steps.end(), d);
        if (it == steps.steps.end()) throw std::runtime_error("ConePath: step not in the step set");
        std::size_t si = static_cast<std::size_t>(it - steps.steps.begin());
        acc = acc + step_gain(G, nodes[s], steps.patterns[si], dom.spacing());
        double key = 0.0;
        for (std::size_t i = 0; i < dom.dim(); ++i) key += nodes[s][i] * steps.cone.axis()[i];
        if (key <= prev_key - 1e-12) throw std::runtime_error("ConePath: not strictly advancing");
        prev_key = key;
    }
    return acc;
}

WidthResult width_open(const GridSet& G, const Cone& cone, int s_max) {
    WidthDP dp = width_dp(G, cone, s_max);
    WidthResult r;
    r.value = dp.value;
    r.s_max = s_max;
    r.aperture = cone.aperture();
    r.spacing = G.domain().spacing();
    if (dp.value > 0.0) {
        std::vector<Index> rev;
        const GridDomain& dom = G.domain();
        std::size_t f = dp.argmax_node;
        rev.push_back(dom.node_at(f));
        while (dp.back_step[f] >= 0) {
            const Index& d = dp.steps.steps[static_cast<std::size_t>(dp.back_step[f])];
            Index p = dom.node_at(f);
            for (std::size_t i = 0; i < dom.dim(); ++i) p[i] -= d[i];
            rev.push_back(p);
            f = dom.node_index(p);
        }
        std::reverse(rev.begin(), rev.end());
        r.argmax_path.nodes = std::move(rev);
    }
    return r;
}

double width_brute_force(const GridSet& G, const Cone& cone, int s_max) {
    const GridDomain& dom = G.domain();
    if (dom.node_count() > 400)
        throw std::runtime_error("width_brute_force: refusing grids with more than 400 nodes");
    StepSet steps = build_step_set(cone, s_max);
    std::vector<std::size_t> step_order(steps.steps.size());
    std::iota(step_order.begin(), step_order.end(), std::size_t(0));
    std::reverse(step_order.begin(), step_order.end());

    const double h = dom.spacing();
    const std::size_t count = dom.node_count();
    std::vector<double> memo(count, -1.0);
    std::vector<std::uint8_t> state(count, 0);  // 0 = fresh, 1 = on stack, 2 = done

    std::function<double(std::size_t)> best_into = [&](std::size_t f) -> double {
        if (state[f] == 2) return memo[f];
        if (state[f] == 1) throw std::runtime_error("width_brute_force: cycle detected");
        state[f] = 1;
        Index y = dom.node_at(f);
        Index p(dom.dim());
        double best = 0.0;
        for (std::size_t si : step_order) {
            const Index& d = steps.steps[si];
            bool ok = true;
            for (std::size_t i = 0; i < dom.dim(); ++i) {
                p[i] = y[i] - d[i];
                if (p[i] < 0 || p[i] > dom.dims()[i]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            double cand = best_into(dom.node_index(p)) + step_gain(G, p, steps.patterns[si], h);
            if (cand > best) best = cand;
        }
        state[f] = 2;
        memo[f] = best;
        return best;
    };

    double value = 0.0;
    for (std::size_t f = 0; f < count; ++f) value = std::max(value, best_into(f));
    return value;
}

WidthOfSet width_of_set(const PointCloud& E, const Cone& cone, const std::vector<double>& radii,
                        int s_max, const GridDomain& domain) {
    if (radii.empty()) throw std::invalid_argument("width_of_set: radii list empty");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] > radii[i + 1]))
            throw std::invalid_argument("width_of_set: radii must be strictly decreasing");
    WidthOfSet out;
    for (double r : radii) {
        Neighborhood nb = neighborhood(E, r, domain);
        WidthResult w = width_open(nb.set, cone, s_max);
        out.entries.push_back({r, w.value, nb.under_resolved});
    }
    out.value = out.entries.back().value;
    return out;
}

ScalarField width_function(const WidthDP& dp, const GridDomain& dom) {
    ScalarField V(dom, dp.value_at_node);
    ScalarField g(dom, 0.0);
    const double h = dom.spacing();
    const double he = h / 2.0;
    const Vec& e = dp.steps.cone.axis();
    const double vmax = dp.value;
    const std::size_t count = dom.node_count();
    Vec lo = dom.box_lo(), hi = dom.box_hi();
    for (std::size_t f = 0; f < count; ++f) {
        Index iv = dom.node_at(f);
        Vec x = dom.node(iv);
        double best = 0.0;
        for (int j = 0;; ++j) {
            double s = j * he;
            if (s > vmax - best) break;  // no sample can improve the clamped max
            Vec pos = x;
            bool inside = true;
            for (std::size_t i = 0; i < dom.dim(); ++i) {
                pos[i] += s * e[i];
                if (pos[i] < lo[i] - 1e-12 || pos[i] > hi[i] + 1e-12) inside = false;
            }
            if (!inside) break;
            double cand = V.eval(pos) - s;
            if (cand > best) best = cand;
        }
        g.at(f) = best;
    }
    return g;
}

ScalarField width_function(const GridSet& G, const Cone& cone, int s_max, int margin) {
    const GridDomain& dom = G.domain();
    WidthDP dp = width_dp(G, cone, s_max);
    if (margin < 0)
        margin = std::min(256, static_cast<int>(std::ceil(dp.value / dom.spacing())) + s_max + 1);
    if (margin == 0) return width_function(dp, dom);

    // enlarged window: same occupied cells, extra empty rings
    Vec origin = dom.origin();
    std::vector<int> dims = dom.dims();
    for (std::size_t i = 0; i < dom.dim(); ++i) {
        origin[i] -= margin * dom.spacing();
        dims[i] += 2 * margin;
    }
    GridDomain big(origin, dom.spacing(), dims, dom.padding() + margin);
    GridSet Gbig(big);
    Index shifted(dom.dim());
    for (std::size_t cf = 0; cf < dom.cell_count(); ++cf) {
        if (!G.occupied(cf)) continue;
        Index cv = dom.cell_at(cf);
        for (std::size_t i = 0; i < dom.dim(); ++i) shifted[i] = cv[i] + margin;
        Gbig.set_cell(shifted, true);
    }
    WidthDP dp_big = width_dp(Gbig, cone, s_max);
    ScalarField g_big = width_function(dp_big, big);

    ScalarField g(dom, 0.0);
    Index nv(dom.dim());
    for (std::size_t f = 0; f < dom.node_count(); ++f) {
        Index iv = dom.node_at(f);
        for (std::size_t i = 0; i < dom.dim(); ++i) nv[i] = iv[i] + margin;
        g.at(f) = g_big.at(big.node_index(nv));
    }
    return g;
}

NormalConeEstimate estimate_normal_cone(const PointCloud& E, const Vec& x,
                                        const std::vector<double>& eps_list,
                                        const std::vector<double>& r_list,
                                        const std::vector<Vec>& directions, double threshold,
                                        int s_max, double spacing, int padding) {
    if (eps_list.empty() || r_list.empty() || directions.empty())
        throw std::invalid_argument("estimate_normal_cone: lists must be nonempty");
    // x must sit on E (within one spacing)
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < E.size(); ++i) dmin = std::min(dmin, dist(E.point(i), x));
    if (!(dmin <= spacing))
        throw std::invalid_argument("estimate_normal_cone: x is not within one spacing of E");

    NormalConeEstimate est{x, threshold, {}};
    for (const Vec& dir : directions) {
        DirectionProbe probe;
        probe.direction = normalized(dir);
        bool all_eps_ok = true;
        for (double eps : eps_list) {
            bool some_r_ok = false;
            for (double r : r_list) {
                // localized point set E ∩ B(x, r)
                PointCloud local(E.dim(), E.box_lo(), E.box_hi());
                for (std::size_t i = 0; i < E.size(); ++i)
                    if (dist(E.point(i), x) < r) local.add(E.point(i));
                double value = 0.0;
                if (local.size() > 0) {
                    Vec lo(x.dim()), hi(x.dim());
                    for (std::size_t i = 0; i < x.dim(); ++i) {
                        lo[i] = x[i] - r;
                        hi[i] = x[i] + r;
                    }
                    GridDomain dom = GridDomain::cover(lo, hi, spacing, padding);
                    // Eq.-(D2) ladder from r/4 down to the grid floor
                    std::vector<double> ladder;
                    double floor_r = std::max(2.0 * spacing, r / 256.0);
                    for (double rr = r / 4.0; rr > floor_r; rr /= 2.0) ladder.push_back(rr);
                    ladder.push_back(std::min(std::max(floor_r, spacing * 0.51), r / 4.0));
                    std::vector<double> clean;
                    for (double rr : ladder)
                        if (clean.empty() || rr < clean.back() - 1e-15) clean.push_back(rr);
                    value = width_of_set(local, Cone(probe.direction, eps), clean, s_max, dom).value;
                }
                probe.samples.push_back({eps, r, value});
                if (value <= threshold * r) some_r_ok = true;
            }
            if (!some_r_ok) all_eps_ok = false;
        }
        probe.accepted = all_eps_ok;
        est.probes.push_back(std::move(probe));
    }
    return est;
}

}  // namespace conewidth
