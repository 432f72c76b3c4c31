#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lowlogit/core.hpp"

namespace lowlogit {

// Time-varying input-switched affine network. Step t (0-based) emits token
// y_{t+1} from softmax(B[t] x_t) and then moves to x_{t+1} = A[t][y] x_t.
struct IsanModel {
    int T = 0;
    int sigma = 0;
    int d = 0;
    Eigen::VectorXd mu;
    std::vector<std::vector<Eigen::MatrixXd>> A;  // [t][y], d x d
    std::vector<Eigen::MatrixXd> B;               // [t], sigma x d
    nlohmann::json meta = nlohmann::json::object();

    void validate() const;
};

// Boolean cube function as a sum of parities. Subset indices are 0-based bit
// positions; x_{i+1} is bit i of the input mask.
struct SparseTerm {
    std::vector<int> subset;
    double coef = 0.0;
};

struct SparseBoolFn {
    int n = 0;
    std::vector<SparseTerm> terms;
    double constant = 0.0;

    double eval(std::uint32_t x) const;
};

int parity_sign(std::uint32_t x, std::uint32_t subset_mask);  // chi_S(x)
std::uint32_t subset_mask(const std::vector<int>& subset);
std::uint32_t bits_to_mask(const Seq& bits);

// "1,2:0.5;3:0.5" with 1-based input indices; an empty subset "" or ":" gives a constant
SparseBoolFn parse_sparse_fn(const std::string& text, int n);
std::string format_sparse_fn(const SparseBoolFn& f);

Eigen::VectorXd isan_state(const IsanModel& m, const Seq& prefix);
Vec isan_next_logits(const IsanModel& m, const Seq& prefix);
Seq isan_sample(const IsanModel& m, Rng& rng);
Seq isan_sample_prefix(const IsanModel& m, Rng& rng, int len);
double isan_seq_logprob(const IsanModel& m, const Seq& y);

IsanModel random_isan(int T, int sigma, int d, double scale, std::uint64_t seed);
// d = 1, identity transitions: each step's tokens are independent of the past
IsanModel product_isan(int T, int sigma, double scale, std::uint64_t seed);
IsanModel isan_from_sparse_fn(const SparseBoolFn& f, double logit_scale = 1.0);
IsanModel uniform_isan(int T, int sigma);

// max of feature norms on either side of the logit factorization
double isan_alpha_bound(const IsanModel& m);
// max |mean-centered logit| over all enumerated prefixes (small models only)
double isan_max_centered_logit(const IsanModel& m);

nlohmann::json isan_to_json(const IsanModel& m);
IsanModel isan_from_json(const nlohmann::json& j);
void save_isan(const IsanModel& m, const std::string& path);
IsanModel load_isan(const std::string& path);

}  // namespace lowlogit
