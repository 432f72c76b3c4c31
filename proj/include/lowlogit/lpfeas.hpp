#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "lowlogit/core.hpp"

namespace lowlogit {

// Per step s (0-based, history length s): the constrained futures hat[s] and
// their closure tilde[s] = hat[s] ∪ (Sigma ∘ hat[s+1]).
struct FutureSets {
    int T = 0;
    int sigma = 0;
    std::vector<std::vector<Seq>> hat;
    std::vector<std::vector<Seq>> tilde;
    std::vector<std::map<Seq, int>> tilde_index;
    int dstar = 0;

    static FutureSets seeded(int T, int sigma);  // hat[s] = all single tokens
    void rebuild();                              // recompute tilde and dstar from hat
    bool add(int s, const Seq& future);          // false if already present
    int tilde_pos(int s, const Seq& f) const;    // throws if absent
    bool in_hat(int s, const Seq& f) const;
};

// Per step s: d* histories and rows L_{s,i}(f) over tilde[s].
struct SpannerBank {
    std::vector<std::vector<Seq>> histories;
    std::vector<std::vector<Vec>> vectors;
    std::vector<int> effective_rank;
};

struct FeasProblem {
    int t = 0;  // prefix length
    double beta = 2.0;
    int dstar = 0;
    Seq prefix;
    // hat_rows[s]: |hat[s]| x d*, entries L_{s,i}(f) for f in hat[s], s < t
    std::vector<Eigen::MatrixXd> hat_rows;
    // next_rows[s]: |hat[s+1]| x d*, entries L_{s,i}(y_s ∘ f) for f in hat[s+1], s < t
    std::vector<Eigen::MatrixXd> next_rows;
    // eliminated system over (c_1, ..., c_{t-1}); c_0 = e_1 is folded into rhs
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    int constraint_count() const { return static_cast<int>(A.rows()); }
    int variable_count() const { return static_cast<int>(A.cols()); }
};

struct LPSolution {
    std::vector<Vec> c;     // c[s] for s < t, length d*
    std::vector<Vec> Lhat;  // Lhat[s] over hat[s] for s <= t
    double max_violation = 0.0;
};

FeasProblem build_feasibility(const SpannerBank& bank, const FutureSets& futures, const Seq& prefix, double beta);

// tau_rel is scaled by the largest coefficient magnitude in the problem
double feas_tolerance(const FeasProblem& p, double tau_rel);
std::optional<LPSolution> solve_feasibility(const FeasProblem& p, double tau_rel);

// one program per prefix, solved in parallel
std::vector<std::optional<LPSolution>> solve_feasibility_batch(const SpannerBank& bank, const FutureSets& futures,
                                                               const std::vector<Seq>& prefixes, double beta,
                                                               double tau_rel);

namespace serial {
std::vector<std::optional<LPSolution>> solve_feasibility_batch(const SpannerBank& bank, const FutureSets& futures,
                                                               const std::vector<Seq>& prefixes, double beta,
                                                               double tau_rel);
}  // namespace serial

}  // namespace lowlogit
