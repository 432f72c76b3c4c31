#pragma once
// Exact feasibility of {A x = b, |x_j| <= bound} over the rationals.
// A nonempty bounded polyhedron has a vertex; at a vertex some n - rank(A)
// coordinates sit at a bound and the rest are pinned by the equalities. We
// try every such choice.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <optional>
#include <vector>

namespace exact_lp {

using Q = boost::multiprecision::cpp_rational;
using QMat = std::vector<std::vector<Q>>;

inline Q to_q(double v) {
    // doubles are dyadic rationals, so this conversion is exact
    int e = 0;
    double mant = std::frexp(v, &e);
    auto scaled = static_cast<long long>(std::ldexp(mant, 53));
    Q q(scaled);
    int shift = e - 53;
    Q two(2);
    for (; shift > 0; --shift) q *= two;
    for (; shift < 0; ++shift) q /= two;
    return q;
}

// Gaussian elimination; returns the rank and reduces [M | rhs] in place.
inline int rref(QMat& M, std::vector<Q>& rhs, std::vector<int>& pivots) {
    const int rows = static_cast<int>(M.size());
    const int cols = rows ? static_cast<int>(M[0].size()) : 0;
    int r = 0;
    pivots.clear();
    for (int c = 0; c < cols && r < rows; ++c) {
        int p = -1;
        for (int i = r; i < rows; ++i)
            if (M[i][c] != 0) {
                p = i;
                break;
            }
        if (p < 0) continue;
        std::swap(M[p], M[r]);
        std::swap(rhs[p], rhs[r]);
        Q inv = Q(1) / M[r][c];
        for (int j = c; j < cols; ++j) M[r][j] *= inv;
        rhs[r] *= inv;
        for (int i = 0; i < rows; ++i)
            if (i != r && M[i][c] != 0) {
                Q f = M[i][c];
                for (int j = c; j < cols; ++j) M[i][j] -= f * M[r][j];
                rhs[i] -= f * rhs[r];
            }
        pivots.push_back(c);
        ++r;
    }
    return r;
}

inline int rank_of(const QMat& A) {
    QMat M = A;
    std::vector<Q> rhs(M.size(), Q(0));
    std::vector<int> piv;
    return rref(M, rhs, piv);
}

// unique solution of M x = rhs, or nullopt if inconsistent or underdetermined
inline std::optional<std::vector<Q>> solve_unique(QMat M, std::vector<Q> rhs, int cols) {
    std::vector<int> piv;
    int r = rref(M, rhs, piv);
    for (std::size_t i = static_cast<std::size_t>(r); i < rhs.size(); ++i)
        if (rhs[i] != 0) return std::nullopt;
    if (r != cols) return std::nullopt;
    std::vector<Q> x(static_cast<std::size_t>(cols));
    for (int i = 0; i < r; ++i) x[static_cast<std::size_t>(piv[static_cast<std::size_t>(i)])] = rhs[static_cast<std::size_t>(i)];
    return x;
}

inline bool feasible(const Eigen::MatrixXd& Ad, const Eigen::VectorXd& bd, double bound_d) {
    const int m = static_cast<int>(Ad.rows()), n = static_cast<int>(Ad.cols());
    QMat A(static_cast<std::size_t>(m), std::vector<Q>(static_cast<std::size_t>(n)));
    std::vector<Q> b(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) A[i][j] = to_q(Ad(i, j));
        b[i] = to_q(bd(i));
    }
    const Q bound = to_q(bound_d);
    if (m == 0) return bound >= 0;
    const int r = rank_of(A);
    const int k = n - r;  // coordinates fixed at a bound
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        std::vector<int> fixed, freev;
        for (int j = 0; j < n; ++j) (mask >> j & 1u ? fixed : freev).push_back(j);
        for (unsigned signs = 0; signs < (1u << k); ++signs) {
            std::vector<Q> rhs = b;
            for (int f = 0; f < k; ++f) {
                Q v = (signs >> f & 1u) ? bound : -bound;
                for (int i = 0; i < m; ++i) rhs[i] -= A[i][fixed[f]] * v;
            }
            QMat sub(static_cast<std::size_t>(m), std::vector<Q>(freev.size()));
            for (int i = 0; i < m; ++i)
                for (std::size_t j = 0; j < freev.size(); ++j) sub[i][j] = A[i][freev[j]];
            if (freev.empty()) {
                bool ok = true;
                for (const auto& v : rhs) ok = ok && v == 0;
                if (ok) return true;
                continue;
            }
            auto x = solve_unique(sub, rhs, static_cast<int>(freev.size()));
            if (!x) continue;
            bool inside = true;
            for (const auto& v : *x) inside = inside && v <= bound && v >= -bound;
            if (inside) return true;
        }
    }
    return false;
}

}  // namespace exact_lp
