#include "lowlogit/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace lowlogit {

QueryTrace::QueryTrace(const QueryTrace& other) {
    std::lock_guard<std::mutex> lock(other.mu_);
    record_ = other.record_;
    count_ = other.count_;
    entries_ = other.entries_;
}

QueryTrace& QueryTrace::operator=(const QueryTrace& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mu_, other.mu_);
    record_ = other.record_;
    count_ = other.count_;
    entries_ = other.entries_;
    return *this;
}

void QueryTrace::append(const OracleResponse& r) {
    std::lock_guard<std::mutex> lock(mu_);
    ++count_;
    if (record_) entries_.push_back(r);
}

void QueryTrace::write_csv(std::ostream& out) const {
    std::lock_guard<std::mutex> lock(mu_);
    out << "query_index,prefix_tokens,logits\n";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        out << i << "," << seq_to_string(entries_[i].prefix) << ",\"";
        for (std::size_t k = 0; k < entries_[i].logits.size(); ++k) {
            if (k) out << ",";
            out << fmt17(entries_[i].logits[k]);
        }
        out << "\"\n";
    }
}

OracleResponse LogitOracle::query(const Seq& prefix) {
    if (static_cast<int>(prefix.size()) >= horizon_) throw HorizonError("oracle query: prefix reaches the horizon");
    for (Token y : prefix)
        if (y < 0 || y >= sigma_) throw DomainError("oracle query: token out of alphabet");
    OracleResponse r{prefix, compute(prefix)};
    for (double v : r.logits)
        if (!std::isfinite(v)) throw SolverError("oracle returned a non-finite logit");
    trace_.append(r);
    return r;
}

NoiseMode parse_noise_mode(const std::string& s) {
    if (s == "none") return NoiseMode::none;
    if (s == "uniform" || s == "uniform-bounded") return NoiseMode::uniform_bounded;
    if (s == "roundoff" || s == "adversarial-roundoff") return NoiseMode::adversarial_roundoff;
    throw ParameterError("unknown noise mode '" + s + "'");
}

std::string noise_mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::none: return "none";
        case NoiseMode::uniform_bounded: return "uniform-bounded";
        case NoiseMode::adversarial_roundoff: return "adversarial-roundoff";
    }
    return "none";
}

NoisyOracle::NoisyOracle(LogitOracle& inner, NoiseSpec spec)
    : LogitOracle(inner.horizon(), inner.alphabet_size()), inner_(inner), spec_(spec) {
    if (spec_.eps_apx < 0) throw ParameterError("noise: eps_apx must be >= 0");
    if (spec_.eps_apx == 0.0) spec_.mode = NoiseMode::none;
}

Vec NoisyOracle::compute(const Seq& prefix) {
    const double eps = spec_.eps_apx;
    if (eps == 0.0) return inner_.query(prefix).logits;
    Vec base = mean_center(inner_.query(prefix).logits);
    switch (spec_.mode) {
        case NoiseMode::none:
            return base;
        case NoiseMode::uniform_bounded: {
            Rng rng(hash_seq(prefix, spec_.seed));
            std::uniform_real_distribution<double> unif(-eps, eps);
            Vec noise(base.size());
            for (double& z : noise) z = unif(rng);
            // centering can stretch the noise up to 2 eps; shrink back into the band
            noise = mean_center(noise);
            double worst = 0.0;
            for (double z : noise) worst = std::max(worst, std::abs(z));
            // a hair inside the band so re-centering roundoff cannot cross it
            const double edge = eps * (1.0 - 1e-9);
            double shrink = worst > edge ? edge / worst : 1.0;
            for (std::size_t i = 0; i < base.size(); ++i) base[i] += shrink * noise[i];
            return base;
        }
        case NoiseMode::adversarial_roundoff: {
            // grid eps moves each entry by <= eps/2, so the centered output by <= eps
            for (double& v : base) v = eps * std::round(v / eps);
            return base;
        }
    }
    return base;
}

Vec ScaledOracle::compute(const Seq& prefix) {
    Vec v = inner_.query(prefix).logits;
    for (double& x : v) x *= factor_;
    return v;
}

std::vector<std::size_t> ConditionalSampler::sample_counts(const Seq& prefix, std::size_t draws, Rng& rng) const {
    Vec p = next_dist(prefix);
    std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
    std::vector<std::size_t> counts(p.size(), 0);
    for (std::size_t k = 0; k < draws; ++k) ++counts[dist(rng)];
    return counts;
}

TemperedConditional::TemperedConditional(const IsanModel& m, double tau) : model_(m), tau_(tau) {
    if (!(tau > 0)) throw ParameterError("temperature: tau must be positive");
}

Vec TemperedConditional::next_dist(const Seq& prefix) const {
    Vec l = isan_next_logits(model_, prefix);
    for (double& v : l) v /= tau_;
    return softmax(l);
}

TemperatureOracle::TemperatureOracle(const IsanModel& m, double tau)
    : LogitOracle(m.T, m.sigma), model_(m), sampler_(m, tau) {}

Vec TemperatureOracle::compute(const Seq& prefix) {
    Vec l = isan_next_logits(model_, prefix);
    for (double& v : l) v /= sampler_.tau();
    return l;
}

std::unique_ptr<TemperatureOracle> temperature_oracle(const IsanModel& m, double tau) {
    return std::make_unique<TemperatureOracle>(m, tau);
}

std::size_t empirical_sample_budget(double lambda, int sigma, double eps, double delta) {
    if (!(lambda > 0)) throw ParameterError("empirical oracle: lambda must be positive");
    if (!(eps > 0) || !(delta > 0) || !(delta < 1)) throw ParameterError("empirical oracle: need eps > 0, delta in (0,1)");
    double n = 8.0 * std::exp(2.0 * lambda) * sigma * std::log(sigma / delta) / (eps * eps);
    return static_cast<std::size_t>(std::ceil(n));
}

EmpiricalOracle::EmpiricalOracle(const ConditionalSampler& src, double lambda, double eps, double delta,
                                 std::uint64_t seed)
    : LogitOracle(src.horizon(), src.alphabet_size()),
      src_(src),
      draws_(empirical_sample_budget(lambda, src.alphabet_size(), eps, delta)),
      seed_(seed) {}

Vec EmpiricalOracle::compute(const Seq& prefix) {
    Rng rng(hash_seq(prefix, seed_));
    auto counts = src_.sample_counts(prefix, draws_, rng);
    drawn_ += draws_;
    const double n = static_cast<double>(draws_);
    const double floor = 1.0 / (2.0 * n * static_cast<double>(counts.size()));
    Vec out(counts.size());
    for (std::size_t y = 0; y < counts.size(); ++y)
        out[y] = std::log(counts[y] ? static_cast<double>(counts[y]) / n : floor);
    return out;
}

namespace {

struct PartialMatrix {
    Eigen::MatrixXd values;
    Eigen::MatrixXd mask;  // 1 where observed
};

PartialMatrix arrange_trace(const QueryTrace& trace, int s) {
    std::map<Seq, int> rows;
    std::map<Seq, int> blocks;
    struct Entry {
        int row, block;
        Vec centered;
    };
    std::vector<Entry> entries;
    std::size_t sigma = 0;
    for (const auto& r : trace.entries()) {
        if (static_cast<int>(r.prefix.size()) < s) continue;
        sigma = r.logits.size();
        Seq head = slice(r.prefix, 0, static_cast<std::size_t>(s));
        Seq rest = slice(r.prefix, static_cast<std::size_t>(s), r.prefix.size());
        int ri = rows.emplace(head, static_cast<int>(rows.size())).first->second;
        int bi = blocks.emplace(rest, static_cast<int>(blocks.size())).first->second;
        entries.push_back({ri, bi, mean_center(r.logits)});
    }
    PartialMatrix pm;
    const auto S = static_cast<Eigen::Index>(sigma);
    pm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(blocks.size()) * S);
    pm.mask = Eigen::MatrixXd::Zero(pm.values.rows(), pm.values.cols());
    for (const auto& e : entries) {
        for (Eigen::Index y = 0; y < S; ++y) {
            Eigen::Index c = e.block * S + y;
            if (pm.mask(e.row, c) > 0) continue;  // first read wins
            pm.values(e.row, c) = e.centered[static_cast<std::size_t>(y)];
            pm.mask(e.row, c) = 1.0;
        }
    }
    return pm;
}

double observed_max_dev(const PartialMatrix& pm, const Eigen::MatrixXd& fit) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < pm.values.rows(); ++i)
        for (Eigen::Index j = 0; j < pm.values.cols(); ++j)
            if (pm.mask(i, j) > 0) worst = std::max(worst, std::abs(pm.values(i, j) - fit(i, j)));
    return worst;
}

// alternating weighted ridge least squares; weight 0 marks unobserved entries
Eigen::MatrixXd weighted_als(const PartialMatrix& pm, const Eigen::MatrixXd& W, Eigen::MatrixXd& U, Eigen::MatrixXd& V,
                             int iters) {
    const Eigen::Index R = pm.values.rows(), C = pm.values.cols(), d = U.cols();
    const double ridge = 1e-12;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iters; ++it) {
        for (Eigen::Index i = 0; i < R; ++i) {
            Eigen::MatrixXd G = ridge * Eigen::MatrixXd::Identity(d, d);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
            for (Eigen::Index j = 0; j < C; ++j)
                if (W(i, j) > 0) {
                    G.noalias() += W(i, j) * V.row(j).transpose() * V.row(j);
                    rhs += W(i, j) * V.row(j).transpose() * pm.values(i, j);
                }
            U.row(i) = G.ldlt().solve(rhs).transpose();
        }
        for (Eigen::Index j = 0; j < C; ++j) {
            Eigen::MatrixXd G = ridge * Eigen::MatrixXd::Identity(d, d);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
            for (Eigen::Index i = 0; i < R; ++i)
                if (W(i, j) > 0) {
                    G.noalias() += W(i, j) * U.row(i).transpose() * U.row(i);
                    rhs += W(i, j) * U.row(i).transpose() * pm.values(i, j);
                }
            V.row(j) = G.ldlt().solve(rhs).transpose();
        }
        double err = (W.array() * (U * V.transpose() - pm.values).array().square()).sum();
        if (prev - err <= 1e-15 * (1.0 + prev)) break;
        prev = err;
    }
    return U * V.transpose();
}

// Masked ALS, then Lawson reweighting (w <- w |r|) to push the fit toward the
// smallest worst-case deviation. Returns the best observed max deviation seen.
double minimax_rank_fit(const PartialMatrix& pm, int d) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd U = svd.matrixU().leftCols(d) * svd.singularValues().head(d).cwiseSqrt().asDiagonal();
    Eigen::MatrixXd V = svd.matrixV().leftCols(d) * svd.singularValues().head(d).cwiseSqrt().asDiagonal();
    double best = observed_max_dev(pm, U * V.transpose());
    Eigen::MatrixXd W = pm.mask;
    for (int round = 0; round < 60; ++round) {
        Eigen::MatrixXd fit = weighted_als(pm, W, U, V, round == 0 ? 500 : 20);
        best = std::min(best, observed_max_dev(pm, fit));
        Eigen::MatrixXd r = (pm.mask.array() * (pm.values - fit).array().abs()).matrix();
        const double top = r.maxCoeff();
        if (top <= 0) break;
        W = (W.array() * (r.array() / top).max(1e-9)).matrix();
        W = (pm.mask.array() * W.array() / W.maxCoeff()).matrix();
    }
    return best;
}

}  // namespace

double trace_rank_certificate(const QueryTrace& trace, int s, int d) {
    if (trace.entries().empty()) throw EmptyInputError("trace_rank_certificate: empty trace");
    if (s < 0 || d < 0) throw ParameterError("trace_rank_certificate: s and d must be >= 0");
    PartialMatrix pm = arrange_trace(trace, s);
    if (pm.values.size() == 0) throw EmptyInputError("trace_rank_certificate: no query reaches length s");
    const Eigen::Index R = pm.values.rows(), C = pm.values.cols();
    if (pm.values.size() > 50'000'000) throw ScaleError("trace_rank_certificate: matrix too large");
    if (d == 0) return observed_max_dev(pm, Eigen::MatrixXd::Zero(R, C));
    if (d >= std::min(R, C)) return 0.0;

    // any rank-d matrix certifies; start from the zero-filled truncated SVD
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pm.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd svd_fit = svd.matrixU().leftCols(d) * svd.singularValues().head(d).asDiagonal() *
                              svd.matrixV().leftCols(d).transpose();
    return std::min(observed_max_dev(pm, svd_fit), minimax_rank_fit(pm, d));
}

Seq ConditionalTrajectorySampler::sample_prefix(Rng& rng, int len) {
    if (len < 0 || len > src_.horizon()) throw HorizonError("sample_prefix: length outside [0, T]");
    ++draws_;
    Seq y;
    y.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) y.push_back(static_cast<Token>(sample_index(src_.next_dist(y), rng)));
    return y;
}

}  // namespace lowlogit
