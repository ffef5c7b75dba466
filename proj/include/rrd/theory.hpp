#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrd::theory {

enum class NoiseFamily { gaussian, bounded_shifted_bernoulli };

const char* to_string(NoiseFamily f);
NoiseFamily family_from_string(std::string_view s);

struct InvalidParams : std::runtime_error {
    explicit InvalidParams(const std::string& why) : std::runtime_error(why) {}
};

struct ZeroVariance : std::runtime_error {
    ZeroVariance() : std::runtime_error("weighted noise variance is zero") {}
};

/// Synthetic verdict model: per trial a label Y in {-1,+1}, per-rubric
/// verdicts Yhat_k = mu_k * Y + Z_k with mean-zero noise Z of covariance
/// Sigma. The bounded family draws Z as sign-thresholded correlated
/// Gaussians scaled per-coordinate, so Z stays bounded while its covariance
/// still equals Sigma exactly.
struct TheoryParams {
    int m = 1;
    Eigen::VectorXd mu;     // per-rubric edge, entries > 0
    Eigen::MatrixXd sigma;  // SPD noise covariance
    double class_prior = 0.5;
    NoiseFamily family = NoiseFamily::gaussian;

    static TheoryParams equicorrelated(int m, double mu, double sigma, double rho,
                                       NoiseFamily family = NoiseFamily::gaussian,
                                       double class_prior = 0.5);
    void validate() const;
};

struct VerdictSample {
    Eigen::MatrixXd y_hat;  // trials x m
    std::vector<int> labels; // +1 / -1 per trial
};

/// Deterministic under (seed); per-trial RNG streams keyed by trial index.
VerdictSample sample_verdicts(const TheoryParams& params, int trials, std::uint64_t seed);

/// exp(-Delta^2 / (2 * w' Sigma w)) with Delta = w' mu.
double misclassification_bound(const TheoryParams& params, const Eigen::VectorXd& w);

/// Closed form for the equal-variance equicorrelated case with unit weights:
/// exp(-m mu^2 / (2 sigma^2 [1 + (m-1) rho])).
double equicorrelated_bound(int m, double mu, double sigma, double rho);

struct ErrorEstimate {
    double error = 0.0;
    double std_error = 0.0;
    int trials = 0;
};

/// Fraction of trials with sign(w' Yhat) != Y; an exact zero score counts as
/// an error (pessimistic).
ErrorEstimate empirical_error(const TheoryParams& params, const Eigen::VectorXd& w, int trials,
                              std::uint64_t seed);

/// Xi(w) = (w' mu)^2 / (w' Sigma w).
double snr(const Eigen::VectorXd& w, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

/// kappa = mu' Sigma^{-1} mu, the maximum of Xi over all weights.
double optimal_snr(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

struct CosineCheck {
    double ratio = 0.0; // Xi(w) / kappa
    double cos2 = 0.0;  // cos^2 angle(Sigma^{1/2} w, Sigma^{-1/2} mu)
};

CosineCheck cosine_identity_check(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& sigma);

/// Symmetric positive square root via eigendecomposition.
Eigen::MatrixXd sqrt_matrix(const Eigen::MatrixXd& sigma);

struct MinimaxReport {
    std::vector<double> candidate_infs; // worst-case Xi per candidate, wu last
    double wu_inf = 0.0;
    bool wu_wins = false;               // wu_inf >= every candidate inf - tol
    double whitened_direction_error = 0.0; // || Sigma^{1/2} w_wu - 1/sqrt(m) ||_inf
};

/// Worst-case Xi over whitened edge directions z (unit vectors in the
/// nonnegative orthant) for each candidate weight vector and for
/// w_wu ~ Sigma^{-1/2} 1. The coordinate corners e_i are always appended to
/// the z samples, which makes the worst case exact for the winner.
MinimaxReport minimax_check(const Eigen::MatrixXd& sigma,
                            const std::vector<Eigen::VectorXd>& candidate_weights,
                            const std::vector<Eigen::VectorXd>& z_samples, double tol = 1e-9);

struct GridPoint {
    int m = 1;
    double rho = 0.0;
    double mu_over_sigma = 1.0;
    NoiseFamily family = NoiseFamily::gaussian;
};

struct GridOutcome {
    GridPoint point;
    double bound = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    bool pass = false; // empirical <= bound + 3 SE
};

/// m in {1,2,5,10,20} x rho in {0,0.3,0.7} x mu/sigma in {0.25,0.5,1},
/// doubled over both noise families.
std::vector<GridPoint> default_grid();

std::vector<GridOutcome> run_grid(const std::vector<GridPoint>& grid, int trials,
                                  std::uint64_t seed);

std::string grid_csv(const std::vector<GridOutcome>& outcomes);

} // namespace rrd::theory
