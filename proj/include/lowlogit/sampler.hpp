#pragma once

#include <optional>

#include "lowlogit/core.hpp"
#include "lowlogit/learner.hpp"

namespace lowlogit {

// Next-token distribution of the learned model; empty when the prefix program is infeasible.
std::optional<Vec> next_token_dist(const LearnedModel& lm, const Seq& prefix);

struct SampleOutcome {
    Seq tokens;
    int fail_step = 0;  // 1-based step whose program was infeasible, 0 on success
    bool failed() const { return fail_step != 0; }
};

SampleOutcome sample(const LearnedModel& lm, Rng& rng);
std::string format_outcome(const SampleOutcome& o);  // tokens, or FAIL@<step>

struct LearnedDist {
    Vec probs;  // over Sigma^T, first token most significant
    double fail_mass = 0.0;
};

constexpr std::size_t kEnumerationLimit = 100000;

// OpenMP over the prefixes of each level
LearnedDist enumerate_learned_dist(const LearnedModel& lm);

namespace serial {
LearnedDist enumerate_learned_dist(const LearnedModel& lm);
}

}  // namespace lowlogit
