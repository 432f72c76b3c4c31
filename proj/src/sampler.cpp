#include "lowlogit/sampler.hpp"

#include <exception>

namespace lowlogit {

std::optional<Vec> next_token_dist(const LearnedModel& lm, const Seq& prefix) {
    const int t = static_cast<int>(prefix.size());
    if (t >= lm.T) throw HorizonError("next_token_dist: prefix at full horizon");
    for (Token y : prefix)
        if (y < 0 || y >= lm.sigma) throw DomainError("next_token_dist: token out of alphabet");
    if (t == 0) return softmax(lm.single_token.at(0).at(0));

    FeasProblem p = build_feasibility(lm.bank, lm.futures, prefix, lm.beta);
    auto sol = solve_feasibility(p, lm.tau_feas);
    if (!sol) return std::nullopt;
    // Lhat[t] is sum_i c_{t-1,i} L_{t-1,i}(y_{t-1} ∘ f) over hat[t], which holds every single token
    const auto& hat = lm.futures.hat[static_cast<std::size_t>(t)];
    const Vec& ext = sol->Lhat[static_cast<std::size_t>(t)];
    Vec logits(static_cast<std::size_t>(lm.sigma), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(lm.sigma), 0);
    for (std::size_t k = 0; k < hat.size(); ++k)
        if (hat[k].size() == 1) {
            logits[static_cast<std::size_t>(hat[k][0])] = ext[k];
            seen[static_cast<std::size_t>(hat[k][0])] = 1;
        }
    for (char s : seen)
        if (!s) throw ConsistencyError("next_token_dist: a single-token future is missing");
    return softmax(logits);
}

SampleOutcome sample(const LearnedModel& lm, Rng& rng) {
    SampleOutcome out;
    for (int t = 0; t < lm.T; ++t) {
        auto p = next_token_dist(lm, out.tokens);
        if (!p) {
            out.fail_step = t;
            return out;
        }
        out.tokens.push_back(static_cast<Token>(sample_index(*p, rng)));
    }
    return out;
}

std::string format_outcome(const SampleOutcome& o) {
    if (o.failed()) return "FAIL@" + std::to_string(o.fail_step);
    return seq_to_string(o.tokens);
}

static Seq decode(std::size_t code, int sigma, int len) {
    Seq s(static_cast<std::size_t>(len));
    for (int k = len - 1; k >= 0; --k) {
        s[static_cast<std::size_t>(k)] = static_cast<Token>(code % static_cast<std::size_t>(sigma));
        code /= static_cast<std::size_t>(sigma);
    }
    return s;
}

static void check_scale(const LearnedModel& lm) {
    double total = 1.0;
    for (int t = 0; t < lm.T; ++t) total *= lm.sigma;
    if (total > static_cast<double>(kEnumerationLimit)) throw ScaleError("enumeration: |Sigma|^T exceeds the limit");
}

LearnedDist enumerate_learned_dist(const LearnedModel& lm) {
    check_scale(lm);
    const std::size_t S = static_cast<std::size_t>(lm.sigma);
    LearnedDist out;
    Vec mass{1.0};
    for (int t = 0; t < lm.T; ++t) {
        std::vector<std::optional<Vec>> dists(mass.size());
        std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(mass.size()); ++k) {
            if (mass[static_cast<std::size_t>(k)] <= 0.0) continue;
            try {
                dists[static_cast<std::size_t>(k)] = next_token_dist(lm, decode(static_cast<std::size_t>(k), lm.sigma, t));
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        Vec next(mass.size() * S, 0.0);
        for (std::size_t k = 0; k < mass.size(); ++k) {
            if (mass[k] <= 0.0) continue;
            if (!dists[k]) {
                out.fail_mass += mass[k];
                continue;
            }
            for (std::size_t y = 0; y < S; ++y) next[k * S + y] = mass[k] * (*dists[k])[y];
        }
        mass = std::move(next);
    }
    out.probs = std::move(mass);
    return out;
}

namespace serial {

static void descend(const LearnedModel& lm, Seq& prefix, double mass, LearnedDist& out) {
    if (static_cast<int>(prefix.size()) == lm.T) {
        std::size_t code = 0;
        for (Token y : prefix) code = code * static_cast<std::size_t>(lm.sigma) + static_cast<std::size_t>(y);
        out.probs[code] = mass;
        return;
    }
    auto p = next_token_dist(lm, prefix);
    if (!p) {
        out.fail_mass += mass;
        return;
    }
    for (Token y = 0; y < lm.sigma; ++y) {
        prefix.push_back(y);
        descend(lm, prefix, mass * (*p)[static_cast<std::size_t>(y)], out);
        prefix.pop_back();
    }
}

LearnedDist enumerate_learned_dist(const LearnedModel& lm) {
    check_scale(lm);
    LearnedDist out;
    out.probs.assign(ipow(static_cast<std::size_t>(lm.sigma), lm.T), 0.0);
    Seq prefix;
    descend(lm, prefix, 1.0, out);
    return out;
}

}  // namespace serial

}  // namespace lowlogit
