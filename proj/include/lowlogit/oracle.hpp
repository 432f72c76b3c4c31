#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <vector>

#include "lowlogit/core.hpp"
#include "lowlogit/isan.hpp"

namespace lowlogit {

struct OracleResponse {
    Seq prefix;
    Vec logits;  // raw, before mean-centering
};

class QueryTrace {
public:
    explicit QueryTrace(bool record = true) : record_(record) {}
    QueryTrace(const QueryTrace& other);
    QueryTrace& operator=(const QueryTrace& other);

    void append(const OracleResponse& r);
    std::size_t total_count() const { return count_; }
    // responses are kept only when recording is on; the count is always kept
    bool recording() const { return record_; }
    void set_recording(bool on) { record_ = on; }
    const std::vector<OracleResponse>& entries() const { return entries_; }
    void write_csv(std::ostream& out) const;

private:
    mutable std::mutex mu_;
    bool record_;
    std::size_t count_ = 0;
    std::vector<OracleResponse> entries_;
};

class LogitOracle {
public:
    LogitOracle(int horizon, int sigma) : horizon_(horizon), sigma_(sigma) {}
    virtual ~LogitOracle() = default;

    OracleResponse query(const Seq& prefix);
    int horizon() const { return horizon_; }
    int alphabet_size() const { return sigma_; }
    QueryTrace& trace() { return trace_; }
    const QueryTrace& trace() const { return trace_; }

protected:
    virtual Vec compute(const Seq& prefix) = 0;

private:
    int horizon_;
    int sigma_;
    QueryTrace trace_;
};

class ExactOracle : public LogitOracle {
public:
    explicit ExactOracle(const IsanModel& m) : LogitOracle(m.T, m.sigma), model_(m) {}

protected:
    Vec compute(const Seq& prefix) override { return isan_next_logits(model_, prefix); }

private:
    const IsanModel& model_;
};

enum class NoiseMode { none, uniform_bounded, adversarial_roundoff };

struct NoiseSpec {
    double eps_apx = 0.0;
    NoiseMode mode = NoiseMode::none;
    std::uint64_t seed = 0;
};

NoiseMode parse_noise_mode(const std::string& s);
std::string noise_mode_name(NoiseMode m);

// Perturbs an inner oracle so the mean-centered output moves by at most
// eps_apx in sup norm. The perturbation is a function of (prefix, seed).
class NoisyOracle : public LogitOracle {
public:
    NoisyOracle(LogitOracle& inner, NoiseSpec spec);

protected:
    Vec compute(const Seq& prefix) override;

private:
    LogitOracle& inner_;
    NoiseSpec spec_;
};

// Multiplies every logit by a constant; used to undo a temperature.
class ScaledOracle : public LogitOracle {
public:
    ScaledOracle(LogitOracle& inner, double factor)
        : LogitOracle(inner.horizon(), inner.alphabet_size()), inner_(inner), factor_(factor) {}

protected:
    Vec compute(const Seq& prefix) override;

private:
    LogitOracle& inner_;
    double factor_;
};

// Access to next-token conditionals by sampling.
class ConditionalSampler {
public:
    virtual ~ConditionalSampler() = default;
    virtual int horizon() const = 0;
    virtual int alphabet_size() const = 0;
    virtual Vec next_dist(const Seq& prefix) const = 0;
    // counts of `draws` i.i.d. next-token samples
    std::vector<std::size_t> sample_counts(const Seq& prefix, std::size_t draws, Rng& rng) const;
};

class IsanConditional : public ConditionalSampler {
public:
    explicit IsanConditional(const IsanModel& m) : model_(m) {}
    int horizon() const override { return model_.T; }
    int alphabet_size() const override { return model_.sigma; }
    Vec next_dist(const Seq& prefix) const override { return softmax(isan_next_logits(model_, prefix)); }

private:
    const IsanModel& model_;
};

// Conditionals follow softmax(logits / tau).
class TemperedConditional : public ConditionalSampler {
public:
    TemperedConditional(const IsanModel& m, double tau);
    int horizon() const override { return model_.T; }
    int alphabet_size() const override { return model_.sigma; }
    Vec next_dist(const Seq& prefix) const override;
    double tau() const { return tau_; }

private:
    const IsanModel& model_;
    double tau_;
};

class TemperatureOracle : public LogitOracle {
public:
    TemperatureOracle(const IsanModel& m, double tau);
    const TemperedConditional& sampler() const { return sampler_; }
    double tau() const { return sampler_.tau(); }

protected:
    Vec compute(const Seq& prefix) override;

private:
    const IsanModel& model_;
    TemperedConditional sampler_;
};

std::unique_ptr<TemperatureOracle> temperature_oracle(const IsanModel& m, double tau);

// N = ceil(8 e^{2 lambda} |Sigma| log(|Sigma|/delta) / eps^2)
std::size_t empirical_sample_budget(double lambda, int sigma, double eps, double delta);

// Log-frequency estimate of the conditional from sampled next tokens. Draws
// are seeded from (prefix, seed), so repeated queries agree.
class EmpiricalOracle : public LogitOracle {
public:
    EmpiricalOracle(const ConditionalSampler& src, double lambda, double eps, double delta, std::uint64_t seed);
    std::size_t samples_per_query() const { return draws_; }
    std::size_t samples_drawn() const { return drawn_; }

protected:
    Vec compute(const Seq& prefix) override;

private:
    const ConditionalSampler& src_;
    std::size_t draws_;
    std::uint64_t seed_;
    std::size_t drawn_ = 0;
};

// Sampling access to whole prefixes y_{1:len} ~ M.
class TrajectorySampler {
public:
    virtual ~TrajectorySampler() = default;
    virtual Seq sample_prefix(Rng& rng, int len) = 0;
    std::size_t draws() const { return draws_; }

protected:
    std::size_t draws_ = 0;
};

class IsanTrajectorySampler : public TrajectorySampler {
public:
    explicit IsanTrajectorySampler(const IsanModel& m) : model_(m) {}
    Seq sample_prefix(Rng& rng, int len) override {
        ++draws_;
        return isan_sample_prefix(model_, rng, len);
    }

private:
    const IsanModel& model_;
};

// Prefixes drawn token by token from any conditional sampler.
class ConditionalTrajectorySampler : public TrajectorySampler {
public:
    explicit ConditionalTrajectorySampler(const ConditionalSampler& src) : src_(src) {}
    Seq sample_prefix(Rng& rng, int len) override;

private:
    const ConditionalSampler& src_;
};

// Upper bound on the best rank-d sup-norm fit of the traced mean-centered
// logits, arranged with rows y_{1:s} and columns (remainder, token).
double trace_rank_certificate(const QueryTrace& trace, int s, int d);

}  // namespace lowlogit
