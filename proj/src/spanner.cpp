#include "lowlogit/spanner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lowlogit {

SpannerResult barycentric_spanner(const Eigen::MatrixXd& W, double C) {
    if (W.rows() < 1) throw EmptyInputError("barycentric_spanner: no rows");
    if (!(C >= 1.0)) throw ParameterError("barycentric_spanner: C must be >= 1");
    SpannerResult out;
    if (W.cwiseAbs().maxCoeff() == 0.0) return out;

    const Eigen::Index m = W.rows(), N = W.cols();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = static_cast<double>(std::max(m, N)) * std::numeric_limits<double>::epsilon() * sv(0);
    int r = 0;
    while (r < sv.size() && sv(r) > tol) ++r;
    // coordinates inside the row span
    Eigen::MatrixXd Z = W * svd.matrixV().leftCols(r);

    // greedy volume: repeatedly take the row with the largest residual
    std::vector<Eigen::Index> sel;
    Eigen::MatrixXd R = Z;
    for (int k = 0; k < r; ++k) {
        Eigen::Index best = 0;
        double best_norm = -1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double nrm = R.row(i).squaredNorm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = i;
            }
        }
        sel.push_back(best);
        Eigen::VectorXd q = R.row(best).transpose() / std::sqrt(best_norm);
        R -= (R * q) * q.transpose();
    }

    auto basis = [&]() {
        Eigen::MatrixXd X(r, r);
        for (int k = 0; k < r; ++k) X.row(k) = Z.row(sel[static_cast<std::size_t>(k)]);
        return X;
    };

    Eigen::MatrixXd X = basis();
    out.initial_volume = std::abs(X.determinant());
    // |det| after replacing basis row k by z equals |coef_k(z)| times the old |det|
    const double swap_gate = C * (1.0 + 1e-12);
    const int max_swaps = 10000;
    for (;;) {
        Eigen::MatrixXd coefs = X.transpose().partialPivLu().solve(Z.transpose());  // r x m
        Eigen::Index bi = 0, bj = 0;
        double best = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index i = 0; i < r; ++i)
                if (std::abs(coefs(i, j)) > best) {
                    best = std::abs(coefs(i, j));
                    bi = i;
                    bj = j;
                }
        if (best <= swap_gate) break;
        if (++out.swaps > max_swaps) throw SolverError("barycentric_spanner: swap loop did not settle");
        sel[static_cast<std::size_t>(bi)] = bj;
        X = basis();
    }
    out.final_volume = std::abs(X.determinant());
    out.effective_rank = r;
    for (auto i : sel) {
        out.indices.push_back(static_cast<std::size_t>(i));
        Vec v(static_cast<std::size_t>(N));
        for (Eigen::Index c = 0; c < N; ++c) v[static_cast<std::size_t>(c)] = W(i, c);
        out.vectors.push_back(std::move(v));
    }
    return out;
}

SpannerCheck verify_spanner(const Eigen::MatrixXd& W, const SpannerResult& S, double beta) {
    const double tau = 1e-8;
    SpannerCheck chk;
    chk.ok = true;
    const Eigen::Index k = static_cast<Eigen::Index>(S.vectors.size());
    const Eigen::Index N = W.cols();
    Eigen::MatrixXd basis(N, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (static_cast<Eigen::Index>(S.vectors[static_cast<std::size_t>(i)].size()) != N)
            throw DimensionError("verify_spanner: spanner row has the wrong width");
        for (Eigen::Index c = 0; c < N; ++c) basis(c, i) = S.vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    if (k > 0) cod.compute(basis);
    for (Eigen::Index j = 0; j < W.rows(); ++j) {
        Eigen::VectorXd w = W.row(j).transpose();
        Eigen::VectorXd c = k > 0 ? Eigen::VectorXd(cod.solve(w)) : Eigen::VectorXd(0);
        double resid = k > 0 ? (basis * c - w).norm() : w.norm();
        double ratio = resid / (1.0 + w.norm());
        double cmax = k > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
        chk.max_coef = std::max(chk.max_coef, cmax);
        chk.max_residual_ratio = std::max(chk.max_residual_ratio, ratio);
        if (ratio > tau || cmax > beta + tau) chk.ok = false;
        chk.coefficients.emplace_back(c.data(), c.data() + c.size());
    }
    return chk;
}

std::size_t spanner_sample_count(int N, double eta, double delta, double c_m) {
    if (!(eta > 0 && eta < 1) || !(delta > 0 && delta < 1)) throw ParameterError("dist_spanner: eta, delta must lie in (0,1)");
    if (N < 1) throw ParameterError("dist_spanner: N must be >= 1");
    double ratio = static_cast<double>(N) / eta;
    double m = c_m * ratio * ratio * std::log(static_cast<double>(N) / (delta * eta));
    if (!(m < 1e18)) return std::numeric_limits<std::size_t>::max();
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m)));
}

DistSpannerResult dist_spanner(VectorSampler& P, int N, double eta, double delta, double c_m, std::size_t m_max) {
    DistSpannerResult out;
    out.m = spanner_sample_count(N, eta, delta, c_m);
    if (out.m > m_max) {
        out.m = m_max;
        out.capped = true;
    }
    std::vector<Seq> histories;
    histories.reserve(out.m);
    out.batch.resize(static_cast<Eigen::Index>(out.m), N);
    for (std::size_t k = 0; k < out.m; ++k) {
        auto [h, v] = P.draw();
        if (static_cast<int>(v.size()) != N) throw DimensionError("dist_spanner: sampler returned the wrong width");
        for (int c = 0; c < N; ++c) out.batch(static_cast<Eigen::Index>(k), c) = v[static_cast<std::size_t>(c)];
        histories.push_back(std::move(h));
    }
    out.spanner = barycentric_spanner(out.batch, 2.0);
    for (auto i : out.spanner.indices) out.spanner.histories.push_back(histories[i]);
    return out;
}

}  // namespace lowlogit
