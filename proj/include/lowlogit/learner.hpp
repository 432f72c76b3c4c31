#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lowlogit/core.hpp"
#include "lowlogit/lpfeas.hpp"
#include "lowlogit/oracle.hpp"

namespace lowlogit {

struct LearnerConfig {
    int T = 0;
    int sigma = 0;
    int d = 1;
    double alpha = 1.0;
    double eps = 0.1;
    double delta = 0.1;
    double eps_apx = 1e-6;
    double beta = 2.0;
    double gamma = 0.0;
    double gamma_thres = 0.0;
    int K = 0;
    int n = 0;
    double eta = 0.0;
    double c_K = 2.0;
    double c_n = 2.0;
    double c_ell = 4.0;
    double c_m = 1.0;
    std::size_t m_max = 2000;
    double tau_feas = 1e-8;
    bool lemma_n = false;  // n from the coverage-lemma form, larger by K beta alpha
    std::uint64_t seed = 0;
};

struct ParamOverrides {
    std::optional<int> K;
    std::optional<int> n;
    std::optional<double> gamma_thres;
    std::optional<double> eta;
    std::optional<double> c_K, c_n, c_ell, c_m;
    std::optional<std::size_t> m_max;
    std::optional<double> tau_feas;
    bool lemma_n = false;
    std::uint64_t seed = 0;
};

LearnerConfig default_params(int T, int sigma, int d, double alpha, double eps, double delta, double eps_apx,
                             const ParamOverrides& over = {});
// smallest eps the accuracy guarantee supports at these settings (constant 1)
double eps_lower_bound(const LearnerConfig& cfg);
// ceil(c_ell d log(beta d alpha K / gamma)): cap on future additions at one step
int addition_bound(const LearnerConfig& cfg);
// c (K^4 T |Sigma| log(1/delta) / eta^2 + n T^3 K^2 |Sigma|)
double query_budget(const LearnerConfig& cfg, double c = 1.0);

nlohmann::json config_to_json(const LearnerConfig& cfg);

// Memoized mean-centered oracle reads; every miss is one oracle query.
class LogitCache {
public:
    explicit LogitCache(LogitOracle& oracle) : oracle_(oracle) {}
    const Vec& centered(const Seq& prefix);
    // mean-centered logit of the last token given the rest
    double lapx(const Seq& seq);
    double lapx(const Seq& head, const Seq& tail);
    std::size_t misses() const { return misses_; }

private:
    LogitOracle& oracle_;
    std::unordered_map<Seq, Vec, SeqHash> memo_;
    std::size_t misses_ = 0;
};

struct LearnedModel {
    int T = 0;
    int sigma = 0;
    int dstar = 0;
    double beta = 2.0;
    double tau_feas = 1e-8;
    FutureSets futures;
    SpannerBank bank;
    std::vector<std::vector<Vec>> single_token;  // [s][i][y] = L_{s,i}(y)
    nlohmann::json meta = nlohmann::json::object();
};

struct EpochRecord {
    int epoch = 0;
    int step_reached = 0;
    std::string event;  // infeasible | violation | pass
    int violated_step = -1;
    Seq added_future;
    int dstar = 0;
    std::size_t queries_cum = 0;
};

struct LearnStats {
    int epochs = 0;
    std::size_t queries = 0;
    std::size_t trajectories = 0;
    std::vector<int> additions;  // per step
    std::vector<EpochRecord> log;
    bool m_capped = false;
    std::size_t lp_solves = 0;
};

struct LearnResult {
    std::optional<LearnedModel> model;  // empty when the epoch budget ran out
    LearnStats stats;
    bool budget_exhausted() const { return !model.has_value(); }
};

struct Violation {
    int step = 0;  // 0-based step whose future set grows
    Seq future;
    double gap = 0.0;
};

// First (u, s, r, token) in scan order where the extended row and the direct
// combination at step s disagree by more than gamma_thres.
std::optional<Violation> discrepancy_test(LogitCache& cache, const SpannerBank& bank, int t,
                                          const std::vector<Seq>& trajectories, const std::vector<LPSolution>& sols,
                                          double gamma_thres, int sigma);

LearnResult learn(LogitOracle& oracle, TrajectorySampler& sampler, const LearnerConfig& cfg);

nlohmann::json learned_to_json(const LearnedModel& lm);
LearnedModel learned_from_json(const nlohmann::json& j);
void save_learned(const LearnedModel& lm, const std::string& path);
LearnedModel load_learned(const std::string& path);
void write_run_log(const LearnStats& stats, std::ostream& out);

}  // namespace lowlogit
