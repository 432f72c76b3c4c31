#include "lowlogit/lpfeas.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "lowlogit/simplex.hpp"

namespace lowlogit {

FutureSets FutureSets::seeded(int T, int sigma) {
    FutureSets fs;
    fs.T = T;
    fs.sigma = sigma;
    fs.hat.assign(static_cast<std::size_t>(T), {});
    for (int s = 0; s < T; ++s)
        for (Token y = 0; y < sigma; ++y) fs.hat[static_cast<std::size_t>(s)].push_back({y});
    fs.rebuild();
    return fs;
}

void FutureSets::rebuild() {
    tilde.assign(static_cast<std::size_t>(T), {});
    tilde_index.assign(static_cast<std::size_t>(T), {});
    dstar = 0;
    for (int s = 0; s < T; ++s) {
        auto& out = tilde[static_cast<std::size_t>(s)];
        auto& idx = tilde_index[static_cast<std::size_t>(s)];
        auto push = [&](const Seq& f) {
            if (idx.emplace(f, static_cast<int>(out.size())).second) out.push_back(f);
        };
        for (const Seq& f : hat[static_cast<std::size_t>(s)]) push(f);
        if (s + 1 < T)
            for (const Seq& f : hat[static_cast<std::size_t>(s + 1)])
                for (Token y = 0; y < sigma; ++y) {
                    Seq g{y};
                    g.insert(g.end(), f.begin(), f.end());
                    push(g);
                }
        dstar = std::max(dstar, static_cast<int>(out.size()));
    }
}

bool FutureSets::add(int s, const Seq& future) {
    if (s < 0 || s >= T) throw DomainError("FutureSets::add: step out of range");
    if (future.empty() || static_cast<int>(future.size()) > T - s) throw DomainError("FutureSets::add: future length out of range");
    if (in_hat(s, future)) return false;
    hat[static_cast<std::size_t>(s)].push_back(future);
    rebuild();
    return true;
}

int FutureSets::tilde_pos(int s, const Seq& f) const {
    const auto& idx = tilde_index.at(static_cast<std::size_t>(s));
    auto it = idx.find(f);
    if (it == idx.end()) throw ConsistencyError("future " + seq_to_string(f) + " missing from closure at step " + std::to_string(s));
    return it->second;
}

bool FutureSets::in_hat(int s, const Seq& f) const {
    const auto& h = hat.at(static_cast<std::size_t>(s));
    return std::find(h.begin(), h.end(), f) != h.end();
}

FeasProblem build_feasibility(const SpannerBank& bank, const FutureSets& futures, const Seq& prefix, double beta) {
    const int t = static_cast<int>(prefix.size());
    if (t < 1 || t > futures.T - 1) throw HorizonError("build_feasibility: prefix length must be in [1, T-1]");
    const int D = futures.dstar;
    FeasProblem p;
    p.t = t;
    p.beta = beta;
    p.dstar = D;
    p.prefix = prefix;
    for (int s = 0; s < t; ++s) {
        const auto& rows = bank.vectors.at(static_cast<std::size_t>(s));
        if (static_cast<int>(rows.size()) != D) throw ConsistencyError("build_feasibility: spanner bank not padded to d*");
        const auto& hs = futures.hat[static_cast<std::size_t>(s)];
        const auto& hn = futures.hat[static_cast<std::size_t>(s + 1)];
        Eigen::MatrixXd H(static_cast<Eigen::Index>(hs.size()), D);
        Eigen::MatrixXd X(static_cast<Eigen::Index>(hn.size()), D);
        for (std::size_t k = 0; k < hs.size(); ++k) {
            int pos = futures.tilde_pos(s, hs[k]);
            for (int i = 0; i < D; ++i) H(static_cast<Eigen::Index>(k), i) = rows[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(pos));
        }
        for (std::size_t k = 0; k < hn.size(); ++k) {
            Seq g{prefix[static_cast<std::size_t>(s)]};
            g.insert(g.end(), hn[k].begin(), hn[k].end());
            int pos = futures.tilde_pos(s, g);
            for (int i = 0; i < D; ++i) X(static_cast<Eigen::Index>(k), i) = rows[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(pos));
        }
        p.hat_rows.push_back(std::move(H));
        p.next_rows.push_back(std::move(X));
    }

    // rows: for s = 0..t-2 and f in hat[s+1]:  H_{s+1} c_{s+1} - X_s c_s = 0
    Eigen::Index n_rows = 0;
    for (int s = 0; s + 1 < t; ++s) n_rows += p.next_rows[static_cast<std::size_t>(s)].rows();
    p.A = Eigen::MatrixXd::Zero(n_rows, static_cast<Eigen::Index>(t - 1) * D);
    p.b = Eigen::VectorXd::Zero(n_rows);
    Eigen::Index r0 = 0;
    for (int s = 0; s + 1 < t; ++s) {
        const auto& X = p.next_rows[static_cast<std::size_t>(s)];
        const auto& Hn = p.hat_rows[static_cast<std::size_t>(s + 1)];
        const Eigen::Index k = X.rows();
        p.A.block(r0, static_cast<Eigen::Index>(s) * D, k, D) = Hn;
        if (s == 0)
            p.b.segment(r0, k) = X.col(0);
        else
            p.A.block(r0, static_cast<Eigen::Index>(s - 1) * D, k, D) = -X;
        r0 += k;
    }
    return p;
}

double feas_tolerance(const FeasProblem& p, double tau_rel) {
    double mx = 0.0;
    if (p.A.size()) mx = std::max(mx, p.A.cwiseAbs().maxCoeff());
    if (p.b.size()) mx = std::max(mx, p.b.cwiseAbs().maxCoeff());
    return tau_rel * std::max(1.0, mx);
}

std::optional<LPSolution> solve_feasibility(const FeasProblem& p, double tau_rel) {
    if (!(tau_rel > 0)) throw ParameterError("solve_feasibility: tau must be positive");
    const double tau = feas_tolerance(p, tau_rel);
    const int D = p.dstar;
    LPSolution sol;
    Vec e1(static_cast<std::size_t>(D), 0.0);
    e1[0] = 1.0;
    sol.c.push_back(e1);
    if (p.t > 1) {
        BoxLPResult r = solve_box_lp(p.A, p.b, p.beta, tau);
        if (r.status != LPStatus::feasible) return std::nullopt;
        for (int s = 1; s < p.t; ++s) {
            const double* base = r.x.data() + static_cast<std::ptrdiff_t>(s - 1) * D;
            sol.c.emplace_back(base, base + D);
        }
        sol.max_violation = r.max_violation;
    }
    for (int s = 0; s < p.t; ++s) {
        Eigen::Map<const Eigen::VectorXd> c(sol.c[static_cast<std::size_t>(s)].data(), D);
        Eigen::VectorXd l = p.hat_rows[static_cast<std::size_t>(s)] * c;
        sol.Lhat.emplace_back(l.data(), l.data() + l.size());
    }
    Eigen::Map<const Eigen::VectorXd> last(sol.c.back().data(), D);
    Eigen::VectorXd l = p.next_rows.back() * last;
    sol.Lhat.emplace_back(l.data(), l.data() + l.size());
    return sol;
}

std::vector<std::optional<LPSolution>> solve_feasibility_batch(const SpannerBank& bank, const FutureSets& futures,
                                                               const std::vector<Seq>& prefixes, double beta,
                                                               double tau_rel) {
    std::vector<std::optional<LPSolution>> sols(prefixes.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t u = 0; u < static_cast<std::ptrdiff_t>(prefixes.size()); ++u) {
        try {
            FeasProblem p = build_feasibility(bank, futures, prefixes[static_cast<std::size_t>(u)], beta);
            sols[static_cast<std::size_t>(u)] = solve_feasibility(p, tau_rel);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return sols;
}

namespace serial {
std::vector<std::optional<LPSolution>> solve_feasibility_batch(const SpannerBank& bank, const FutureSets& futures,
                                                               const std::vector<Seq>& prefixes, double beta,
                                                               double tau_rel) {
    std::vector<std::optional<LPSolution>> sols;
    sols.reserve(prefixes.size());
    for (const auto& y : prefixes) sols.push_back(solve_feasibility(build_feasibility(bank, futures, y, beta), tau_rel));
    return sols;
}
}  // namespace serial

}  // namespace lowlogit
