#include "lowlogit/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lowlogit/core.hpp"

namespace lowlogit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense tableau for  min c.x  s.t.  M x = rhs,  lo <= x <= up,
// where the last `rows` columns start as the basis.
struct Tableau {
    Eigen::MatrixXd T;  // B^{-1} M
    Eigen::VectorXd xb;
    std::vector<int> basis;
    std::vector<char> at_upper;
    std::vector<char> is_basic;
    Eigen::VectorXd lo, up;
    int pivots = 0;

    double value(int j) const { return at_upper[static_cast<std::size_t>(j)] ? up(j) : lo(j); }
};

void run_simplex(Tableau& tb, const Eigen::VectorXd& cost, double piv_tol) {
    const Eigen::Index m = tb.T.rows(), n = tb.T.cols();
    const double dj_tol = 1e-10;
    const int max_iter = 200000;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::RowVectorXd cb(m);
        for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(tb.basis[static_cast<std::size_t>(i)]);
        Eigen::RowVectorXd dj = cost.transpose() - cb * tb.T;

        // Bland: lowest-index improving column
        int e = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (tb.is_basic[static_cast<std::size_t>(j)] || tb.up(j) <= tb.lo(j)) continue;
            bool upper = tb.at_upper[static_cast<std::size_t>(j)];
            if ((!upper && dj(j) < -dj_tol) || (upper && dj(j) > dj_tol)) {
                e = static_cast<int>(j);
                break;
            }
        }
        if (e < 0) return;

        const double dir = tb.at_upper[static_cast<std::size_t>(e)] ? -1.0 : 1.0;
        double theta = tb.up(e) - tb.lo(e);
        int leave = -1;
        bool leave_to_upper = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            double g = dir * tb.T(i, e);
            int bv = tb.basis[static_cast<std::size_t>(i)];
            double lim;
            bool to_upper;
            if (g > piv_tol) {
                lim = std::max(0.0, (tb.xb(i) - tb.lo(bv)) / g);
                to_upper = false;
            } else if (g < -piv_tol && std::isfinite(tb.up(bv))) {
                lim = std::max(0.0, (tb.up(bv) - tb.xb(i)) / -g);
                to_upper = true;
            } else {
                continue;
            }
            // ties go to the lowest basic variable index
            if (lim < theta || (lim == theta && leave >= 0 && bv < tb.basis[static_cast<std::size_t>(leave)])) {
                theta = lim;
                leave = static_cast<int>(i);
                leave_to_upper = to_upper;
            }
        }
        if (!std::isfinite(theta)) throw SolverError("simplex: unbounded ray in a bounded program");

        tb.xb -= (theta * dir) * tb.T.col(e);
        if (leave < 0) {
            tb.at_upper[static_cast<std::size_t>(e)] = !tb.at_upper[static_cast<std::size_t>(e)];
            continue;
        }
        double entering_value = tb.value(e) + dir * theta;
        int out = tb.basis[static_cast<std::size_t>(leave)];
        tb.is_basic[static_cast<std::size_t>(out)] = 0;
        tb.at_upper[static_cast<std::size_t>(out)] = leave_to_upper;
        tb.basis[static_cast<std::size_t>(leave)] = e;
        tb.is_basic[static_cast<std::size_t>(e)] = 1;
        tb.at_upper[static_cast<std::size_t>(e)] = 0;
        tb.xb(leave) = entering_value;

        double p = tb.T(leave, e);
        if (std::abs(p) <= piv_tol) throw SolverError("simplex: pivot element vanished");
        tb.T.row(leave) /= p;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = tb.T(i, e);
            if (f != 0.0) tb.T.row(i) -= f * tb.T.row(leave);
        }
        ++tb.pivots;
    }
    throw SolverError("simplex: iteration limit reached");
}

}  // namespace

BoxLPResult solve_box_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double bound, double tau) {
    if (A.rows() != b.size()) throw DimensionError("solve_box_lp: A and b disagree");
    if (!(bound >= 0) || !(tau > 0)) throw ParameterError("solve_box_lp: need bound >= 0 and tau > 0");
    if (!A.allFinite() || !b.allFinite()) throw SolverError("solve_box_lp: non-finite coefficients");
    const Eigen::Index m = A.rows(), nv = A.cols();
    BoxLPResult res;
    res.x = Eigen::VectorXd::Zero(nv);
    if (m == 0) {
        res.status = LPStatus::feasible;
        return res;
    }

    // x = p - q with p, q in [0, bound]; one artificial per row
    const Eigen::Index n = 2 * nv + m;
    Tableau tb;
    tb.T = Eigen::MatrixXd::Zero(m, n);
    tb.xb.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double sgn = b(i) < 0 ? -1.0 : 1.0;
        tb.T.block(i, 0, 1, nv) = sgn * A.row(i);
        tb.T.block(i, nv, 1, nv) = -sgn * A.row(i);
        tb.T(i, 2 * nv + i) = 1.0;
        tb.xb(i) = sgn * b(i);
    }
    tb.lo = Eigen::VectorXd::Zero(n);
    tb.up = Eigen::VectorXd::Constant(n, bound);
    tb.up.tail(m).setConstant(kInf);
    tb.basis.resize(static_cast<std::size_t>(m));
    tb.is_basic.assign(static_cast<std::size_t>(n), 0);
    tb.at_upper.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        tb.basis[static_cast<std::size_t>(i)] = static_cast<int>(2 * nv + i);
        tb.is_basic[static_cast<std::size_t>(2 * nv + i)] = 1;
    }
    double scale = std::max({1.0, A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    const double piv_tol = 1e-11 * scale;

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n);
    cost.tail(m).setOnes();
    run_simplex(tb, cost, piv_tol);

    double phase1 = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (tb.basis[static_cast<std::size_t>(i)] >= 2 * nv) phase1 += std::max(0.0, tb.xb(i));
    res.phase1_objective = phase1;
    res.pivots = tb.pivots;
    if (phase1 > tau * static_cast<double>(m)) return res;

    // phase 2: artificials may shrink but never grow
    for (Eigen::Index j = 2 * nv; j < n; ++j) tb.up(j) = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        int bv = tb.basis[static_cast<std::size_t>(i)];
        if (bv >= 2 * nv) tb.up(bv) = std::max(0.0, tb.xb(i));
    }
    cost.setZero();
    cost.head(2 * nv).setOnes();
    run_simplex(tb, cost, piv_tol);
    res.pivots = tb.pivots;

    Eigen::VectorXd full(n);
    for (Eigen::Index j = 0; j < n; ++j) full(j) = tb.value(static_cast<int>(j));
    for (Eigen::Index i = 0; i < m; ++i) full(tb.basis[static_cast<std::size_t>(i)]) = tb.xb(i);
    res.x = full.head(nv) - full.segment(nv, nv);
    res.max_violation = (A * res.x - b).cwiseAbs().maxCoeff();
    double box = nv > 0 ? res.x.cwiseAbs().maxCoeff() : 0.0;
    if (res.max_violation <= tau && box <= bound + tau) res.status = LPStatus::feasible;
    return res;
}

}  // namespace lowlogit
