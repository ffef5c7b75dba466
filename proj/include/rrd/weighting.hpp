#pragma once

#include "rrd/gateway.hpp"
#include "rrd/protocol.hpp"
#include "rrd/rubric_core.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rrd::weighting {

struct TooFewSamples : std::runtime_error {
    explicit TooFewSamples(std::size_t n)
        : std::runtime_error("covariance needs >= 2 samples, got " + std::to_string(n)) {}
};

struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(double min_eig, double floor)
        : std::runtime_error("matrix eigenvalue " + std::to_string(min_eig) +
                             " below floor " + std::to_string(floor)) {}
};

struct CovarianceEstimate {
    Eigen::MatrixXd matrix;
    int sample_count = 0;
    double shrinkage = 0.3;
    double eigen_floor = 1e-4;
};

/// All entries 1/m.
core::WeightVector uniform_weights(std::size_t m);

/// Asks the model for an integer importance 1-5 per rubric; parsed weights
/// are clipped to [1,5] and normalized to sum 1. Any malformed reply falls
/// back to uniform and records a warning.
core::WeightVector llm_weights(gateway::Gateway& gw, const protocol::TemplateSet& templates,
                               const std::string& model, const std::string& prompt,
                               const std::vector<std::string>& rubric_texts,
                               std::vector<std::string>* warnings = nullptr);

/// Mean-centered sample covariance shrunk toward its own diagonal, then
/// eigenvalues clipped up to eigen_floor. Samples are m-vectors.
CovarianceEstimate estimate_covariance(const std::vector<std::vector<double>>& samples,
                                       double shrinkage = 0.3, double eigen_floor = 1e-4);

/// Symmetric A with A * sigma * A = I, via eigendecomposition.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma, double eigen_floor = 1e-10);

/// w proportional to inverse_sqrt(Sigma) * 1, scaled so the whitened weight
/// vector Sigma^{1/2} w has unit Euclidean norm. Entries may be negative.
core::WeightVector whitened_uniform_weights(const CovarianceEstimate& est);

struct BuildInputs {
    std::string prompt;
    std::vector<std::string> rubric_texts;
    // whitened-uniform: per-sample score vectors come from the matrix
    // columns, pooled with any extra unlabeled score vectors.
    const core::ScoreMatrix* matrix = nullptr;
    std::vector<std::vector<double>> extra_samples;
    double shrinkage = 0.3;
    double eigen_floor = 1e-4;
    // llm scheme
    gateway::Gateway* gw = nullptr;
    const protocol::TemplateSet* templates = nullptr;
    std::string model;
};

core::WeightVector build_weights(core::WeightScheme scheme, const BuildInputs& in,
                                 std::vector<std::string>* warnings = nullptr);

} // namespace rrd::weighting
