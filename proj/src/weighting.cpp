#include "rrd/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rrd::weighting {

core::WeightVector uniform_weights(std::size_t m) {
    if (m == 0) throw std::invalid_argument("uniform_weights: m must be >= 1");
    core::WeightVector w;
    w.scheme = core::WeightScheme::uniform;
    w.values.assign(m, 1.0 / static_cast<double>(m));
    return w;
}

core::WeightVector llm_weights(gateway::Gateway& gw, const protocol::TemplateSet& templates,
                               const std::string& model, const std::string& prompt,
                               const std::vector<std::string>& rubric_texts,
                               std::vector<std::string>* warnings) {
    if (rubric_texts.empty()) throw std::invalid_argument("llm_weights: no rubrics");
    auto fallback = [&](const std::string& why) {
        if (warnings) warnings->push_back("llm weighting fell back to uniform: " + why);
        core::WeightVector w = uniform_weights(rubric_texts.size());
        w.scheme = core::WeightScheme::llm;
        return w;
    };

    gateway::ChatRequest req;
    req.model = model;
    req.user = templates.render(protocol::TemplateId::rubric_weighting,
                                {{"prompt", prompt}, {"rubrics", rubric_texts}});
    req.temperature = 0.0;
    req.max_tokens = 256;

    std::string reply;
    try {
        reply = gw.complete(req).text;
    } catch (const std::exception& e) {
        return fallback(e.what());
    }

    auto blocks = protocol::parse_tagged(reply, "WEIGHT");
    if (blocks.size() != rubric_texts.size()) {
        return fallback("expected " + std::to_string(rubric_texts.size()) + " weights, got " +
                        std::to_string(blocks.size()));
    }
    std::vector<double> raw;
    for (const auto& block : blocks) {
        try {
            std::size_t used = 0;
            double v = std::stod(block, &used);
            if (protocol::trim(block.substr(used)) != "" || !std::isfinite(v)) {
                return fallback("non-numeric weight: " + block);
            }
            raw.push_back(std::clamp(v, 1.0, 5.0));
        } catch (const std::exception&) {
            return fallback("non-numeric weight: " + block);
        }
    }
    double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    core::WeightVector w;
    w.scheme = core::WeightScheme::llm;
    w.normalization = total;
    for (double v : raw) w.values.push_back(v / total);
    return w;
}

namespace {

/// Spectral clip: eigenvalues below the floor are raised to it.
Eigen::MatrixXd clip_eigenvalues(const Eigen::MatrixXd& sym, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

CovarianceEstimate estimate_covariance(const std::vector<std::vector<double>>& samples,
                                       double shrinkage, double eigen_floor) {
    if (samples.size() < 2) throw TooFewSamples(samples.size());
    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto m = static_cast<Eigen::Index>(samples[0].size());
    Eigen::MatrixXd x(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(samples[i].size()) != m) {
            throw core::DimensionMismatch("covariance samples have mixed lengths");
        }
        for (Eigen::Index k = 0; k < m; ++k) x(i, k) = samples[i][k];
    }
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean;
    Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n);
    Eigen::MatrixXd shrunk =
        (1.0 - shrinkage) * s + shrinkage * Eigen::MatrixXd(s.diagonal().asDiagonal());
    // Symmetrize against float drift before the spectral clip.
    shrunk = 0.5 * (shrunk + shrunk.transpose()).eval();

    CovarianceEstimate est;
    est.matrix = clip_eigenvalues(shrunk, eigen_floor);
    est.sample_count = static_cast<int>(n);
    est.shrinkage = shrinkage;
    est.eigen_floor = eigen_floor;
    return est;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& sigma, double eigen_floor) {
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("inverse_sqrt: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < eigen_floor) throw NotPositiveDefinite(min_eig, eigen_floor);
    Eigen::VectorXd inv_sqrt_vals = es.eigenvalues().array().rsqrt();
    return es.eigenvectors() * inv_sqrt_vals.asDiagonal() * es.eigenvectors().transpose();
}

core::WeightVector whitened_uniform_weights(const CovarianceEstimate& est) {
    const auto m = est.matrix.rows();
    Eigen::MatrixXd a = inverse_sqrt(est.matrix, est.eigen_floor * 0.5);
    Eigen::VectorXd w0 = a * Eigen::VectorXd::Ones(m);
    // The whitened image of w0 is exactly the ones vector, so the weight
    // space constraint ||Sigma^{1/2} w|| = 1 fixes the scale to 1/sqrt(m).
    double scale = std::sqrt(w0.dot(est.matrix * w0));
    core::WeightVector w;
    w.scheme = core::WeightScheme::whitened_uniform;
    w.normalization = scale;
    for (Eigen::Index k = 0; k < m; ++k) w.values.push_back(w0(k) / scale);
    return w;
}

core::WeightVector build_weights(core::WeightScheme scheme, const BuildInputs& in,
                                 std::vector<std::string>* warnings) {
    switch (scheme) {
        case core::WeightScheme::uniform:
            return uniform_weights(in.rubric_texts.size());
        case core::WeightScheme::llm:
            if (!in.gw || !in.templates) {
                throw std::invalid_argument("llm weighting needs a gateway and templates");
            }
            return llm_weights(*in.gw, *in.templates, in.model, in.prompt, in.rubric_texts,
                               warnings);
        case core::WeightScheme::whitened_uniform: {
            if (!in.matrix) throw std::invalid_argument("whitened weighting needs a score matrix");
            std::vector<std::vector<double>> samples;
            for (std::size_t c = 0; c < in.matrix->cols(); ++c) {
                std::vector<double> col;
                for (std::size_t r = 0; r < in.matrix->rows(); ++r) {
                    col.push_back(static_cast<double>(in.matrix->at(r, c)));
                }
                samples.push_back(std::move(col));
            }
            samples.insert(samples.end(), in.extra_samples.begin(), in.extra_samples.end());
            return whitened_uniform_weights(
                estimate_covariance(samples, in.shrinkage, in.eigen_floor));
        }
    }
    throw std::invalid_argument("unknown weight scheme");
}

} // namespace rrd::weighting
