#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "lowlogit/isan.hpp"
#include "lowlogit/learner.hpp"
#include "lowlogit/oracle.hpp"

namespace lowlogit {

constexpr int kMaxEnumerableBits = 12;

// Value queries to f : {0,1}^n -> [-1, 1], memoized; each distinct x counts once.
class BoolFnOracle {
public:
    BoolFnOracle(int n, std::function<double(std::uint32_t)> fn) : n_(n), fn_(std::move(fn)) {}
    double eval(std::uint32_t x);
    int n() const { return n_; }
    std::size_t queries() const { return queries_; }

private:
    int n_;
    std::function<double(std::uint32_t)> fn_;
    std::unordered_map<std::uint32_t, double> memo_;
    std::size_t queries_ = 0;
};

BoolFnOracle sparse_fn_oracle(const SparseBoolFn& fn);
BoolFnOracle table_fn_oracle(int n, const std::vector<double>& table);
std::vector<double> fn_table(const SparseBoolFn& fn);

// Walsh-Hadamard coefficients, indexed by subset mask
std::vector<double> fourier_coeffs(const std::vector<double>& table);

// Logit oracle of the sequence model whose first n tokens are uniform and whose
// last token is 1 with probability sigmoid(f(x)). Only last-step reads touch f.
class BoolFnLogitOracle : public LogitOracle {
public:
    explicit BoolFnLogitOracle(BoolFnOracle& f) : LogitOracle(f.n() + 1, 2), f_(f) {}
    std::size_t last_step_reads() const { return last_reads_; }

protected:
    Vec compute(const Seq& prefix) override;

private:
    BoolFnOracle& f_;
    std::size_t last_reads_ = 0;
};

class UniformBitsSampler : public TrajectorySampler {
public:
    Seq sample_prefix(Rng& rng, int len) override;
};

struct LearnedBoolFn {
    int n = 0;
    std::vector<double> g;  // clamped inverse sigmoid of the learned last-token probability
    double mse = 0.0;
    std::size_t f_queries = 0;
    std::size_t last_step_reads = 0;
    int epochs = 0;
    bool converged = false;
    int fail_inputs = 0;  // inputs whose program was infeasible (g set to 0)
    LearnStats stats;
    LearnerConfig config;
};

// mean squared error of g against a full value table; infinite if learning did not finish
double km_mse(const LearnedBoolFn& g, const std::vector<double>& table);

LearnedBoolFn km_learn(BoolFnOracle& f, int n, int d, double eps, double delta, std::uint64_t seed,
                       const ParamOverrides& over = {}, double eps_apx = 1e-6);

}  // namespace lowlogit
