#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <ostream>
#include <vector>

#include "lowlogit/core.hpp"
#include "lowlogit/isan.hpp"
#include "lowlogit/sampler.hpp"

namespace lowlogit {

// exp(log-probability) of every sequence in Sigma^T, first token most significant
Vec enumerate_true_dist(const IsanModel& m);

// total variation with the learner's failure atom as an extra outcome
double tv_with_failure(const Vec& truth, const LearnedDist& learned);
double tv_exact(const IsanModel& m, const LearnedModel& lm);

struct LogitMatrix {
    Eigen::MatrixXd values;     // |H| x (|F| |Sigma|)
    std::vector<Seq> histories;
    std::vector<Seq> futures;   // column block k holds (futures[k], y) for y in Sigma
    int sigma = 0;
};

LogitMatrix build_logit_matrix(const IsanModel& m, const std::vector<Seq>& H, const std::vector<Seq>& F);

struct RankPoint {
    int rank = 0;
    double frobenius_error = 0.0;
    double avg_l1_error = 0.0;
};

struct RankProfile {
    std::vector<RankPoint> points;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::uint64_t seed = 0;
};

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M);
RankProfile rank_profile(const Eigen::MatrixXd& M, std::vector<int> ranks);
void write_rank_profile_csv(const RankProfile& rp, std::ostream& out);

// Average L1 distance between a sampled logit matrix at (s, t) and its rank-d
// truncated SVD. Rows h = y_{1:s} with y_{1:s-1} ~ M and y_s uniform; columns
// (f, y_t) with f ~ M_{s+1:t-1} and every y_t.
LogitMatrix sample_logit_matrix(const IsanModel& m, int s, int t, int n_rows, int n_cols, std::uint64_t seed);
double estimate_eps_avg(const IsanModel& m, int d, int s, int t, int n_rows, int n_cols, std::uint64_t seed);
double estimate_eps_avg_max(const IsanModel& m, int d, int s, const std::vector<int>& ts, int n_rows, int n_cols,
                            std::uint64_t seed);

namespace serial {
Vec enumerate_true_dist(const IsanModel& m);
LogitMatrix build_logit_matrix(const IsanModel& m, const std::vector<Seq>& H, const std::vector<Seq>& F);
}  // namespace serial

}  // namespace lowlogit
