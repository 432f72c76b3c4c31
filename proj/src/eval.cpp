#include "lowlogit/eval.hpp"

#include <algorithm>
#include <cmath>

namespace lowlogit {

static void check_enumerable(int sigma, int T) {
    double total = 1.0;
    for (int t = 0; t < T; ++t) total *= sigma;
    if (total > static_cast<double>(kEnumerationLimit)) throw ScaleError("enumeration: |Sigma|^T exceeds the limit");
}

Vec enumerate_true_dist(const IsanModel& m) {
    check_enumerable(m.sigma, m.T);
    const std::size_t total = ipow(static_cast<std::size_t>(m.sigma), m.T);
    Vec out(total);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t code = 0; code < static_cast<std::ptrdiff_t>(total); ++code) {
        Seq y(static_cast<std::size_t>(m.T));
        std::size_t c = static_cast<std::size_t>(code);
        for (int k = m.T - 1; k >= 0; --k) {
            y[static_cast<std::size_t>(k)] = static_cast<Token>(c % static_cast<std::size_t>(m.sigma));
            c /= static_cast<std::size_t>(m.sigma);
        }
        out[static_cast<std::size_t>(code)] = std::exp(isan_seq_logprob(m, y));
    }
    return out;
}

double tv_with_failure(const Vec& truth, const LearnedDist& learned) {
    if (truth.size() != learned.probs.size()) throw DimensionError("tv: distributions over different index sets");
    double acc = learned.fail_mass;  // the true model puts no mass on failure
    for (std::size_t i = 0; i < truth.size(); ++i) acc += std::abs(truth[i] - learned.probs[i]);
    return std::min(1.0, 0.5 * acc);
}

double tv_exact(const IsanModel& m, const LearnedModel& lm) {
    if (m.T != lm.T || m.sigma != lm.sigma) throw DimensionError("tv_exact: model and learned model disagree on T or Sigma");
    return tv_with_failure(enumerate_true_dist(m), enumerate_learned_dist(lm));
}

static void check_lengths(const IsanModel& m, const std::vector<Seq>& H, const std::vector<Seq>& F) {
    for (const auto& h : H)
        for (const auto& f : F)
            if (static_cast<int>(h.size() + f.size()) > m.T - 1)
                throw DomainError("build_logit_matrix: |h| + |f| exceeds T - 1");
}

LogitMatrix build_logit_matrix(const IsanModel& m, const std::vector<Seq>& H, const std::vector<Seq>& F) {
    check_lengths(m, H, F);
    LogitMatrix L;
    L.histories = H;
    L.futures = F;
    L.sigma = m.sigma;
    const Eigen::Index S = m.sigma;
    L.values.resize(static_cast<Eigen::Index>(H.size()), static_cast<Eigen::Index>(F.size()) * S);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(H.size()); ++r) {
        const Seq& h = H[static_cast<std::size_t>(r)];
        Eigen::VectorXd xh = isan_state(m, h);
        for (std::size_t k = 0; k < F.size(); ++k) {
            Eigen::VectorXd x = xh;
            std::size_t t = h.size();
            for (Token y : F[k]) x = m.A[t++][static_cast<std::size_t>(y)] * x;
            Eigen::VectorXd l = m.B[t] * x;
            Vec c = mean_center(Vec(l.data(), l.data() + l.size()));
            for (Eigen::Index y = 0; y < S; ++y) L.values(r, static_cast<Eigen::Index>(k) * S + y) = c[static_cast<std::size_t>(y)];
        }
    }
    return L;
}

namespace serial {

static void chain(const IsanModel& m, Seq& prefix, double p, Vec& out) {
    if (static_cast<int>(prefix.size()) == m.T) {
        std::size_t code = 0;
        for (Token y : prefix) code = code * static_cast<std::size_t>(m.sigma) + static_cast<std::size_t>(y);
        out[code] = p;
        return;
    }
    Vec next = softmax(isan_next_logits(m, prefix));
    for (Token y = 0; y < m.sigma; ++y) {
        prefix.push_back(y);
        chain(m, prefix, p * next[static_cast<std::size_t>(y)], out);
        prefix.pop_back();
    }
}

Vec enumerate_true_dist(const IsanModel& m) {
    check_enumerable(m.sigma, m.T);
    Vec out(ipow(static_cast<std::size_t>(m.sigma), m.T), 0.0);
    Seq prefix;
    chain(m, prefix, 1.0, out);
    return out;
}

LogitMatrix build_logit_matrix(const IsanModel& m, const std::vector<Seq>& H, const std::vector<Seq>& F) {
    check_lengths(m, H, F);
    LogitMatrix L;
    L.histories = H;
    L.futures = F;
    L.sigma = m.sigma;
    const Eigen::Index S = m.sigma;
    L.values.resize(static_cast<Eigen::Index>(H.size()), static_cast<Eigen::Index>(F.size()) * S);
    for (std::size_t r = 0; r < H.size(); ++r)
        for (std::size_t k = 0; k < F.size(); ++k) {
            Vec c = mean_center(isan_next_logits(m, concat(H[r], F[k])));
            for (Eigen::Index y = 0; y < S; ++y)
                L.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k) * S + y) = c[static_cast<std::size_t>(y)];
        }
    return L;
}

}  // namespace serial

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return Eigen::VectorXd(0);
    return Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
}

RankProfile rank_profile(const Eigen::MatrixXd& M, std::vector<int> ranks) {
    if (M.size() == 0) throw EmptyInputError("rank_profile: empty matrix");
    if (!std::is_sorted(ranks.begin(), ranks.end())) {
        warn("rank_profile: rank list was not sorted; sorting it");
        std::sort(ranks.begin(), ranks.end());
    }
    const int maxr = static_cast<int>(std::min(M.rows(), M.cols()));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    RankProfile rp;
    rp.rows = M.rows();
    rp.cols = M.cols();
    for (int r : ranks) {
        if (r < 0) throw ParameterError("rank_profile: negative rank");
        int rr = r;
        if (rr > maxr) {
            warn("rank_profile: rank " + std::to_string(r) + " clipped to " + std::to_string(maxr));
            rr = maxr;
        }
        Eigen::MatrixXd approx = svd.matrixU().leftCols(rr) * sv.head(rr).asDiagonal() * svd.matrixV().leftCols(rr).transpose();
        RankPoint pt;
        pt.rank = r;
        pt.frobenius_error = std::sqrt(sv.tail(sv.size() - rr).squaredNorm());
        pt.avg_l1_error = (M - approx).cwiseAbs().mean();
        rp.points.push_back(pt);
    }
    return rp;
}

void write_rank_profile_csv(const RankProfile& rp, std::ostream& out) {
    out << "rank,frobenius_error,avg_l1_error,rows,cols,seed\n";
    for (const auto& p : rp.points)
        out << p.rank << "," << fmt17(p.frobenius_error) << "," << fmt17(p.avg_l1_error) << "," << rp.rows << ","
            << rp.cols << "," << rp.seed << "\n";
}

LogitMatrix sample_logit_matrix(const IsanModel& m, int s, int t, int n_rows, int n_cols, std::uint64_t seed) {
    if (t <= s) throw ParameterError("sampled logit matrix: need t > s");
    if (s < 0 || t > m.T) throw ParameterError("sampled logit matrix: need 0 <= s < t <= T");
    if (n_rows < 1 || n_cols < 1) throw EmptyInputError("sampled logit matrix: need at least one row and column");
    if (static_cast<double>(n_rows) * n_cols * m.sigma > 5e7) throw ScaleError("sampled logit matrix: too large");
    Rng rng(seed);
    std::uniform_int_distribution<int> tok(0, m.sigma - 1);
    std::vector<Seq> H, F;
    for (int i = 0; i < n_rows; ++i) {
        Seq h = s > 0 ? isan_sample_prefix(m, rng, s - 1) : Seq{};
        if (s > 0) h.push_back(tok(rng));
        H.push_back(std::move(h));
    }
    for (int j = 0; j < n_cols; ++j) {
        Seq y = isan_sample_prefix(m, rng, t - 1);
        F.push_back(slice(y, static_cast<std::size_t>(s), static_cast<std::size_t>(t - 1)));
    }
    return build_logit_matrix(m, H, F);
}

double estimate_eps_avg(const IsanModel& m, int d, int s, int t, int n_rows, int n_cols, std::uint64_t seed) {
    LogitMatrix L = sample_logit_matrix(m, s, t, n_rows, n_cols, seed);
    return rank_profile(L.values, {d}).points[0].avg_l1_error;
}

double estimate_eps_avg_max(const IsanModel& m, int d, int s, const std::vector<int>& ts, int n_rows, int n_cols,
                            std::uint64_t seed) {
    double best = 0.0;
    for (int t : ts) best = std::max(best, estimate_eps_avg(m, d, s, t, n_rows, n_cols, seed));
    return best;
}

}  // namespace lowlogit
