#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "lowlogit/core.hpp"

namespace lowlogit {

struct SpannerResult {
    std::vector<std::size_t> indices;  // rows of the input batch
    std::vector<Vec> vectors;
    std::vector<Seq> histories;        // filled by dist_spanner
    int effective_rank = 0;
    int swaps = 0;
    double initial_volume = 0.0;  // |det| of the greedy basis in span coordinates
    double final_volume = 0.0;
};

// Every input row becomes a combination of the selected rows with coefficients
// bounded by C. Works inside the numerical row span of W.
SpannerResult barycentric_spanner(const Eigen::MatrixXd& W, double C = 2.0);

struct SpannerCheck {
    bool ok = false;
    std::vector<Vec> coefficients;  // per input row
    double max_coef = 0.0;
    double max_residual_ratio = 0.0;  // residual / (1 + |row|)
};

SpannerCheck verify_spanner(const Eigen::MatrixXd& W, const SpannerResult& S, double beta);

class VectorSampler {
public:
    virtual ~VectorSampler() = default;
    // draws a history and returns it with its row vector
    virtual std::pair<Seq, Vec> draw() = 0;
};

// m = ceil(c_m (N/eta)^2 log(N/(delta eta)))
std::size_t spanner_sample_count(int N, double eta, double delta, double c_m);

struct DistSpannerResult {
    SpannerResult spanner;
    Eigen::MatrixXd batch;
    std::size_t m = 0;
    bool capped = false;
};

DistSpannerResult dist_spanner(VectorSampler& P, int N, double eta, double delta, double c_m = 1.0,
                               std::size_t m_max = 2000);

}  // namespace lowlogit
