#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace conewidth {

/// Point / direction in R^n. Dimension is fixed at construction (default n = 2).
class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t n) : c_(n, 0.0) {}
    Vec(std::initializer_list<double> vals) : c_(vals) {}
    explicit Vec(std::vector<double> vals) : c_(std::move(vals)) {}

    std::size_t dim() const { return c_.size(); }
    double operator[](std::size_t i) const { return c_[i]; }
    double& operator[](std::size_t i) { return c_[i]; }
    const std::vector<double>& components() const { return c_; }

    Vec& operator+=(const Vec& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (double& v : c_) v *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator*(Vec a, double s) { return a *= s; }

private:
    std::vector<double> c_;
};

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
    if (a.dim() != b.dim())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * a[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline double dist(const Vec& a, const Vec& b) {
    check_same_dim(a, b, "dist");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec normalized(const Vec& a) {
    double n = norm(a);
    if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
    Vec r = a;
    r *= 1.0 / n;
    return r;
}

}  // namespace conewidth
