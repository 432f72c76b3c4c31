#include "lowlogit/km.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lowlogit/sampler.hpp"

namespace lowlogit {

double BoolFnOracle::eval(std::uint32_t x) {
    auto it = memo_.find(x);
    if (it != memo_.end()) return it->second;
    double v = fn_(x);
    if (!(std::abs(v) <= 1.0 + 1e-12)) throw DomainError("boolean function value outside [-1, 1]");
    ++queries_;
    memo_.emplace(x, v);
    return v;
}

std::vector<double> fn_table(const SparseBoolFn& fn) {
    if (fn.n > kMaxEnumerableBits) throw ScaleError("fn_table: n too large to enumerate");
    std::vector<double> table(std::size_t{1} << fn.n);
    for (std::uint32_t x = 0; x < table.size(); ++x) table[x] = fn.eval(x);
    return table;
}

BoolFnOracle sparse_fn_oracle(const SparseBoolFn& fn) {
    if (fn.n <= kMaxEnumerableBits)
        for (double v : fn_table(fn))
            if (std::abs(v) > 1.0 + 1e-12) throw DomainError("sparse_fn_oracle: values leave [-1, 1]");
    return BoolFnOracle(fn.n, [fn](std::uint32_t x) { return fn.eval(x); });
}

BoolFnOracle table_fn_oracle(int n, const std::vector<double>& table) {
    if (n > kMaxEnumerableBits || table.size() != (std::size_t{1} << n)) throw DimensionError("table_fn_oracle: table size mismatch");
    return BoolFnOracle(n, [table](std::uint32_t x) { return table[x]; });
}

std::vector<double> fourier_coeffs(const std::vector<double>& table) {
    const std::size_t N = table.size();
    if (N == 0 || (N & (N - 1)) != 0) throw DimensionError("fourier_coeffs: table size must be a power of two");
    if (N > (std::size_t{1} << kMaxEnumerableBits)) throw ScaleError("fourier_coeffs: n too large");
    std::vector<double> a(table);
    for (std::size_t len = 1; len < N; len <<= 1)
        for (std::size_t i = 0; i < N; i += 2 * len)
            for (std::size_t j = i; j < i + len; ++j) {
                double u = a[j], v = a[j + len];
                a[j] = u + v;
                a[j + len] = u - v;
            }
    for (double& v : a) v /= static_cast<double>(N);
    return a;
}

Vec BoolFnLogitOracle::compute(const Seq& prefix) {
    if (static_cast<int>(prefix.size()) < f_.n()) return {0.0, 0.0};
    ++last_reads_;
    return {0.0, f_.eval(bits_to_mask(prefix))};
}

Seq UniformBitsSampler::sample_prefix(Rng& rng, int len) {
    ++draws_;
    std::bernoulli_distribution coin(0.5);
    Seq s(static_cast<std::size_t>(len));
    for (auto& b : s) b = coin(rng) ? 1 : 0;
    return s;
}

double km_mse(const LearnedBoolFn& g, const std::vector<double>& table) {
    if (!g.converged) return std::numeric_limits<double>::infinity();
    if (g.g.size() != table.size()) throw DimensionError("km_mse: table size mismatch");
    double acc = 0.0;
    for (std::size_t x = 0; x < table.size(); ++x) acc += (table[x] - g.g[x]) * (table[x] - g.g[x]);
    return acc / static_cast<double>(table.size());
}

LearnedBoolFn km_learn(BoolFnOracle& f, int n, int d, double eps, double delta, std::uint64_t seed,
                       const ParamOverrides& over, double eps_apx) {
    if (n != f.n()) throw ParameterError("km_learn: n disagrees with the oracle");
    if (n < 1 || n > kMaxEnumerableBits) throw ScaleError("km_learn: n must be in [1, 12] for exact evaluation");
    BoolFnLogitOracle oracle(f);
    UniformBitsSampler sampler;
    ParamOverrides o = over;
    o.seed = seed;
    // sequence-model logits are bounded by 1, so alpha = 1
    LearnerConfig cfg = default_params(n + 1, 2, d, 1.0, eps, delta, eps_apx, o);
    LearnResult run = learn(oracle, sampler, cfg);

    LearnedBoolFn out;
    out.n = n;
    out.config = cfg;
    out.stats = run.stats;
    out.epochs = run.stats.epochs;
    out.converged = !run.budget_exhausted();
    if (out.converged) {
        const LearnedModel& lm = *run.model;
        out.g.assign(std::size_t{1} << n, 0.0);
        for (std::uint32_t x = 0; x < out.g.size(); ++x) {
            Seq bits(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = (x >> i) & 1u;
            auto p = next_token_dist(lm, bits);
            if (!p) {
                ++out.fail_inputs;
                continue;
            }
            // inverse sigmoid of P(1) is the logit gap, which is robust where P(1) saturates
            double q0 = std::max((*p)[0], 1e-300), q1 = std::max((*p)[1], 1e-300);
            out.g[x] = std::clamp(std::log(q1) - std::log(q0), -1.0, 1.0);
        }
    }
    out.f_queries = f.queries();
    out.last_step_reads = oracle.last_step_reads();
    return out;
}

}  // namespace lowlogit
