#include "lowlogit/learner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include "lowlogit/spanner.hpp"

namespace lowlogit {

using nlohmann::json;

static double log_at_least_one(double x) { return std::max(1.0, std::log(x)); }

LearnerConfig default_params(int T, int sigma, int d, double alpha, double eps, double delta, double eps_apx,
                             const ParamOverrides& over) {
    if (T < 2 || sigma < 2 || d < 1) throw ParameterError("default_params: need T >= 2, sigma >= 2, d >= 1");
    if (!(alpha > 0) || !(eps > 0) || !(delta > 0 && delta < 1) || !(eps_apx > 0))
        throw ParameterError("default_params: alpha, eps, eps_apx must be positive and delta in (0,1)");
    LearnerConfig c;
    c.T = T;
    c.sigma = sigma;
    c.d = d;
    c.alpha = alpha;
    c.eps = eps;
    c.delta = delta;
    c.eps_apx = eps_apx;
    c.beta = 2.0;
    c.c_K = over.c_K.value_or(c.c_K);
    c.c_n = over.c_n.value_or(c.c_n);
    c.c_ell = over.c_ell.value_or(c.c_ell);
    c.c_m = over.c_m.value_or(c.c_m);
    c.m_max = over.m_max.value_or(c.m_max);
    c.tau_feas = over.tau_feas.value_or(c.tau_feas);
    c.lemma_n = over.lemma_n;
    c.seed = over.seed;
    if (!(c.c_K > 0) || !(c.c_n > 0) || !(c.c_ell > 0) || !(c.c_m > 0) || !(c.tau_feas > 0) || c.m_max < 1)
        throw ParameterError("default_params: constants must be positive");

    c.K = over.K.value_or(static_cast<int>(
        std::ceil(c.c_K * T * d * log_at_least_one(c.beta * d * alpha * T / (eps_apx * delta)))));
    if (c.K < 1) throw ParameterError("default_params: K must be >= 1");
    c.gamma = 4.0 * c.K * eps_apx;
    c.gamma_thres = over.gamma_thres.value_or(
        c.gamma * std::sqrt(c.c_ell * d * log_at_least_one(2.0 * c.beta * c.K * alpha * alpha / c.gamma)));
    if (!(c.gamma_thres > 0)) throw ParameterError("default_params: gamma_thres must be positive");
    double n_real = c.c_n * std::log(static_cast<double>(T) * c.K / delta) / c.gamma_thres;
    if (c.lemma_n) n_real *= c.K * c.beta * alpha;
    c.n = over.n.value_or(static_cast<int>(std::min(1e9, std::ceil(n_real))));
    if (c.n < 1) throw ParameterError("default_params: n must be >= 1");
    c.eta = over.eta.value_or(eps / (3.0 * T * T * c.n));
    if (!(c.eta > 0 && c.eta < 1)) throw ParameterError("default_params: eta must lie in (0,1)");
    if (eps < eps_lower_bound(c))
        warn("target eps " + fmt17(eps) + " is below the supported floor " + fmt17(eps_lower_bound(c)));
    return c;
}

double eps_lower_bound(const LearnerConfig& c) {
    return c.eps_apx * c.K * c.T * c.T * std::sqrt(static_cast<double>(c.d)) *
           std::sqrt(log_at_least_one(c.K * c.alpha / c.eps_apx));
}

int addition_bound(const LearnerConfig& c) {
    return static_cast<int>(std::ceil(c.c_ell * c.d * log_at_least_one(c.beta * c.d * c.alpha * c.K / c.gamma)));
}

double query_budget(const LearnerConfig& c, double scale) {
    double K = c.K, T = c.T, S = c.sigma;
    return scale * (std::pow(K, 4) * T * S * std::log(1.0 / c.delta) / (c.eta * c.eta) + c.n * std::pow(T, 3) * K * K * S);
}

json config_to_json(const LearnerConfig& c) {
    return {{"T", c.T},           {"sigma", c.sigma},     {"d", c.d},
            {"alpha", c.alpha},   {"eps", c.eps},         {"delta", c.delta},
            {"eps_apx", c.eps_apx}, {"beta", c.beta},     {"gamma", c.gamma},
            {"gamma_thres", c.gamma_thres}, {"K", c.K},   {"n", c.n},
            {"eta", c.eta},       {"c_K", c.c_K},         {"c_n", c.c_n},
            {"c_ell", c.c_ell},   {"c_m", c.c_m},         {"m_max", c.m_max},
            {"tau_feas", c.tau_feas}, {"lemma_n", c.lemma_n}, {"seed", c.seed}};
}

const Vec& LogitCache::centered(const Seq& prefix) {
    auto it = memo_.find(prefix);
    if (it != memo_.end()) return it->second;
    ++misses_;
    Vec v = mean_center(oracle_.query(prefix).logits);
    return memo_.emplace(prefix, std::move(v)).first->second;
}

double LogitCache::lapx(const Seq& seq) {
    if (seq.empty()) throw DomainError("lapx: empty sequence");
    Seq head(seq.begin(), seq.end() - 1);
    return centered(head)[static_cast<std::size_t>(seq.back())];
}

double LogitCache::lapx(const Seq& head, const Seq& tail) { return lapx(concat(head, tail)); }

namespace {

class HistoryRows : public VectorSampler {
public:
    HistoryRows(TrajectorySampler& traj, LogitCache& cache, Rng& rng, int s, const std::vector<Seq>& futures)
        : traj_(traj), cache_(cache), rng_(rng), s_(s), futures_(futures) {}

    std::pair<Seq, Vec> draw() override {
        Seq h = traj_.sample_prefix(rng_, s_);
        Vec v(futures_.size());
        for (std::size_t k = 0; k < futures_.size(); ++k) v[k] = cache_.lapx(h, futures_[k]);
        return {std::move(h), std::move(v)};
    }

private:
    TrajectorySampler& traj_;
    LogitCache& cache_;
    Rng& rng_;
    int s_;
    const std::vector<Seq>& futures_;
};

// sum_i c_i L_{s,i}(g), skipping zero coefficients
double combine(LogitCache& cache, const std::vector<Seq>& histories, const Vec& c, const Seq& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] != 0.0) acc += c[i] * cache.lapx(histories[i], g);
    return acc;
}

}  // namespace

std::optional<Violation> discrepancy_test(LogitCache& cache, const SpannerBank& bank, int t,
                                          const std::vector<Seq>& trajectories, const std::vector<LPSolution>& sols,
                                          double gamma_thres, int sigma) {
    for (std::size_t u = 0; u < trajectories.size(); ++u) {
        const Seq& y = trajectories[u];
        const LPSolution& sol = sols[u];
        for (int s = 0; s < t; ++s) {
            for (int r = s; r <= t; ++r) {
                Seq g = slice(y, static_cast<std::size_t>(s), static_cast<std::size_t>(r));
                g.push_back(0);
                for (Token tok = 0; tok < sigma; ++tok) {
                    g.back() = tok;
                    double direct = combine(cache, bank.histories[static_cast<std::size_t>(s)], sol.c[static_cast<std::size_t>(s)], g);
                    double extended;
                    if (s == 0) {
                        extended = cache.lapx(g);
                    } else {
                        Seq yg{y[static_cast<std::size_t>(s - 1)]};
                        yg.insert(yg.end(), g.begin(), g.end());
                        extended = combine(cache, bank.histories[static_cast<std::size_t>(s - 1)], sol.c[static_cast<std::size_t>(s - 1)], yg);
                    }
                    double gap = std::abs(extended - direct);
                    if (gap > gamma_thres) return Violation{s, g, gap};
                }
            }
        }
    }
    return std::nullopt;
}

LearnResult learn(LogitOracle& oracle, TrajectorySampler& sampler, const LearnerConfig& cfg) {
    const int T = oracle.horizon();
    const int S = oracle.alphabet_size();
    if (cfg.T != T || cfg.sigma != S) throw ParameterError("learn: config T/sigma disagree with the oracle");
    if (T < 2) throw ParameterError("learn: need T >= 2");

    LearnResult res;
    LearnStats& st = res.stats;
    st.additions.assign(static_cast<std::size_t>(T), 0);
    LogitCache cache(oracle);
    Rng rng(cfg.seed);
    const std::size_t queries0 = oracle.trace().total_count();
    FutureSets fs = FutureSets::seeded(T, S);
    // the spanner miss budget is split evenly over steps and epochs
    const double spanner_delta = std::min(0.5, cfg.delta / (10.0 * cfg.K * T));

    for (int epoch = 1; epoch <= cfg.K; ++epoch) {
        st.epochs = epoch;
        fs.rebuild();
        const int D = fs.dstar;
        if (D > S + S * S + (epoch - 1) * (1 + S)) throw ConsistencyError("learn: d* grew faster than one future per epoch");

        SpannerBank bank;
        bank.histories.resize(static_cast<std::size_t>(T));
        bank.vectors.resize(static_cast<std::size_t>(T));
        bank.effective_rank.assign(static_cast<std::size_t>(T), 0);
        {
            Vec row(fs.tilde[0].size());
            for (std::size_t k = 0; k < row.size(); ++k) row[k] = cache.lapx(fs.tilde[0][k]);
            bank.histories[0].assign(static_cast<std::size_t>(D), Seq{});
            bank.vectors[0].assign(static_cast<std::size_t>(D), row);
            bank.effective_rank[0] = 1;
        }
        for (int s = 1; s < T; ++s) {
            const auto& futures = fs.tilde[static_cast<std::size_t>(s)];
            HistoryRows rows(sampler, cache, rng, s, futures);
            DistSpannerResult ds = dist_spanner(rows, static_cast<int>(futures.size()), cfg.eta, spanner_delta, cfg.c_m, cfg.m_max);
            st.m_capped = st.m_capped || ds.capped;
            if (!verify_spanner(ds.batch, ds.spanner, 2.0).ok)
                throw ConsistencyError("learn: spanner failed verification at step " + std::to_string(s));
            auto& H = bank.histories[static_cast<std::size_t>(s)];
            auto& V = bank.vectors[static_cast<std::size_t>(s)];
            const int r = ds.spanner.effective_rank;
            bank.effective_rank[static_cast<std::size_t>(s)] = r;
            for (int i = 0; i < D; ++i) {
                if (r > 0) {
                    H.push_back(ds.spanner.histories[static_cast<std::size_t>(i % r)]);
                    V.push_back(ds.spanner.vectors[static_cast<std::size_t>(i % r)]);
                } else {
                    // all rows vanish; any drawn history represents them
                    Vec zero(futures.size());
                    for (Eigen::Index c = 0; c < ds.batch.cols(); ++c) zero[static_cast<std::size_t>(c)] = ds.batch(0, c);
                    H.push_back(sampler.sample_prefix(rng, s));
                    V.push_back(zero);
                }
            }
        }

        std::vector<Seq> ys(static_cast<std::size_t>(cfg.n));
        for (auto& y : ys) y = sampler.sample_prefix(rng, T - 1);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.dstar = D;
        rec.event = "pass";
        bool advance = false;
        for (int t = 1; t <= T - 1 && !advance; ++t) {
            rec.step_reached = t;
            std::vector<Seq> prefixes;
            prefixes.reserve(ys.size());
            for (const auto& y : ys) prefixes.push_back(slice(y, 0, static_cast<std::size_t>(t)));
            auto sols = solve_feasibility_batch(bank, fs, prefixes, cfg.beta, cfg.tau_feas);
            st.lp_solves += ys.size();
            std::vector<LPSolution> solved;
            solved.reserve(ys.size());
            for (auto& s : sols) {
                if (!s) {
                    rec.event = "infeasible";
                    advance = true;
                    break;
                }
                solved.push_back(std::move(*s));
            }
            if (advance) break;
            auto v = discrepancy_test(cache, bank, t, ys, solved, cfg.gamma_thres, S);
            if (v) {
                fs.add(v->step, v->future);
                ++st.additions[static_cast<std::size_t>(v->step)];
                rec.event = "violation";
                rec.violated_step = v->step;
                rec.added_future = v->future;
                advance = true;
            }
        }
        rec.queries_cum = oracle.trace().total_count() - queries0;
        st.log.push_back(rec);
        if (advance) continue;

        LearnedModel lm;
        lm.T = T;
        lm.sigma = S;
        lm.dstar = D;
        lm.beta = cfg.beta;
        lm.tau_feas = cfg.tau_feas;
        lm.futures = fs;
        lm.single_token.resize(static_cast<std::size_t>(T));
        for (int s = 0; s < T; ++s)
            for (int i = 0; i < D; ++i) {
                Vec row(static_cast<std::size_t>(S));
                for (Token y = 0; y < S; ++y)
                    row[static_cast<std::size_t>(y)] = cache.lapx(bank.histories[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)], Seq{y});
                lm.single_token[static_cast<std::size_t>(s)].push_back(std::move(row));
            }
        lm.bank = std::move(bank);
        st.queries = oracle.trace().total_count() - queries0;
        st.trajectories = sampler.draws();
        lm.meta = {{"seed", cfg.seed}, {"epochs", epoch}, {"queries", st.queries}, {"config", config_to_json(cfg)}};
        res.model = std::move(lm);
        return res;
    }
    st.queries = oracle.trace().total_count() - queries0;
    st.trajectories = sampler.draws();
    return res;
}

static json seq_list(const std::vector<Seq>& v) {
    json out = json::array();
    for (const auto& s : v) out.push_back(s);
    return out;
}

json learned_to_json(const LearnedModel& lm) {
    json j;
    j["T"] = lm.T;
    j["sigma"] = lm.sigma;
    j["dstar"] = lm.dstar;
    j["beta"] = lm.beta;
    j["tau_feas"] = lm.tau_feas;
    json fh = json::array(), ft = json::array(), sp = json::array(), hist = json::array(), single = json::array();
    for (int s = 0; s < lm.T; ++s) {
        fh.push_back(seq_list(lm.futures.hat[static_cast<std::size_t>(s)]));
        ft.push_back(seq_list(lm.futures.tilde[static_cast<std::size_t>(s)]));
        sp.push_back(lm.bank.vectors[static_cast<std::size_t>(s)]);
        hist.push_back(seq_list(lm.bank.histories[static_cast<std::size_t>(s)]));
        single.push_back(lm.single_token[static_cast<std::size_t>(s)]);
    }
    j["futures_hat"] = fh;
    j["futures_tilde"] = ft;
    j["spanner"] = sp;
    j["histories"] = hist;
    j["single_token"] = single;
    j["meta"] = lm.meta;
    return j;
}

LearnedModel learned_from_json(const json& j) {
    LearnedModel lm;
    try {
        lm.T = j.at("T").get<int>();
        lm.sigma = j.at("sigma").get<int>();
        lm.dstar = j.at("dstar").get<int>();
        lm.beta = j.at("beta").get<double>();
        lm.tau_feas = j.at("tau_feas").get<double>();
        lm.futures.T = lm.T;
        lm.futures.sigma = lm.sigma;
        lm.futures.hat = j.at("futures_hat").get<std::vector<std::vector<Seq>>>();
        if (static_cast<int>(lm.futures.hat.size()) != lm.T) throw DimensionError("learned json: futures_hat length");
        lm.futures.rebuild();
        auto tilde = j.at("futures_tilde").get<std::vector<std::vector<Seq>>>();
        if (tilde != lm.futures.tilde || lm.futures.dstar != lm.dstar)
            throw ConsistencyError("learned json: futures_tilde does not match its definition");
        lm.bank.vectors = j.at("spanner").get<std::vector<std::vector<Vec>>>();
        if (j.contains("histories")) lm.bank.histories = j["histories"].get<std::vector<std::vector<Seq>>>();
        lm.single_token = j.at("single_token").get<std::vector<std::vector<Vec>>>();
        if (j.contains("meta")) lm.meta = j["meta"];
    } catch (const json::exception& e) {
        throw DomainError(std::string("learned json: ") + e.what());
    }
    if (static_cast<int>(lm.bank.vectors.size()) != lm.T || static_cast<int>(lm.single_token.size()) != lm.T)
        throw DimensionError("learned json: per-step arrays have the wrong length");
    for (int s = 0; s < lm.T; ++s) {
        const auto& rows = lm.bank.vectors[static_cast<std::size_t>(s)];
        if (static_cast<int>(rows.size()) != lm.dstar) throw DimensionError("learned json: spanner not padded to dstar");
        for (const auto& r : rows)
            if (r.size() != lm.futures.tilde[static_cast<std::size_t>(s)].size()) throw DimensionError("learned json: spanner row width");
        for (const auto& r : lm.single_token[static_cast<std::size_t>(s)])
            if (static_cast<int>(r.size()) != lm.sigma) throw DimensionError("learned json: single-token row width");
    }
    return lm;
}

void save_learned(const LearnedModel& lm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << learned_to_json(lm).dump(1) << "\n";
}

LearnedModel load_learned(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DomainError(path + ": " + e.what());
    }
    return learned_from_json(j);
}

void write_run_log(const LearnStats& st, std::ostream& out) {
    out << "epoch,step_reached,event,violated_step,added_future,dstar,queries_cum\n";
    for (const auto& r : st.log) {
        out << r.epoch << "," << r.step_reached << "," << r.event << ",";
        if (r.violated_step >= 0) out << r.violated_step + 1;
        out << "," << seq_to_string(r.added_future) << "," << r.dstar << "," << r.queries_cum << "\n";
    }
}

}  // namespace lowlogit
