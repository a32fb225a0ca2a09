#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bridgelab {

// Dense vector in R^d. Dimensions here are desk-scale (d <= 16 in practice),
// so plain loops beat any linear-algebra dependency.
using Vec = std::vector<double>;

inline void check_same_size(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    }
}

inline Vec add(const Vec& a, const Vec& b) {
    check_same_size(a, b, "add");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_same_size(a, b, "sub");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(double c, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

// r += c * a, the only compound update the solvers need.
inline void axpy(double c, const Vec& a, Vec& r) {
    check_same_size(a, r, "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += c * a[i];
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

inline bool all_finite(const Vec& a) {
    for (double x : a) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Square matrix in R^{d x d}, row major. Only needed for log-density
// Hessians, which stay tiny.
struct Mat {
    std::size_t d = 0;
    std::vector<double> m;  // d*d entries

    explicit Mat(std::size_t dim) : d(dim), m(dim * dim, 0.0) {}
    double& at(std::size_t i, std::size_t j) { return m[i * d + j]; }
    double at(std::size_t i, std::size_t j) const { return m[i * d + j]; }
};

inline Vec matvec(const Mat& A, const Vec& x) {
    if (x.size() != A.d) throw std::invalid_argument("matvec: dimension mismatch");
    Vec r(A.d, 0.0);
    for (std::size_t i = 0; i < A.d; ++i) {
        for (std::size_t j = 0; j < A.d; ++j) r[i] += A.at(i, j) * x[j];
    }
    return r;
}

}  // namespace bridgelab
