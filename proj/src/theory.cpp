#include "rrd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace rrd::theory {

const char* to_string(NoiseFamily f) {
    return f == NoiseFamily::gaussian ? "gaussian" : "bounded_shifted_bernoulli";
}

NoiseFamily family_from_string(std::string_view s) {
    if (s == "gaussian") return NoiseFamily::gaussian;
    if (s == "bounded_shifted_bernoulli" || s == "bounded") {
        return NoiseFamily::bounded_shifted_bernoulli;
    }
    throw InvalidParams("unknown noise family: " + std::string(s));
}

TheoryParams TheoryParams::equicorrelated(int m, double mu, double sigma, double rho,
                                          NoiseFamily family, double class_prior) {
    if (m >= 2 && (rho <= -1.0 / (m - 1) || rho >= 1.0)) {
        throw InvalidParams("equicorrelated rho out of (-1/(m-1), 1)");
    }
    TheoryParams p;
    p.m = m;
    p.mu = Eigen::VectorXd::Constant(m, mu);
    p.sigma = sigma * sigma *
              (rho * Eigen::MatrixXd::Ones(m, m) + (1.0 - rho) * Eigen::MatrixXd::Identity(m, m));
    p.family = family;
    p.class_prior = class_prior;
    p.validate();
    return p;
}

void TheoryParams::validate() const {
    if (m < 1 || mu.size() != m || sigma.rows() != m || sigma.cols() != m) {
        throw InvalidParams("inconsistent dimensions");
    }
    if ((mu.array() <= 0.0).any()) throw InvalidParams("every edge mu_k must be positive");
    if (class_prior <= 0.0 || class_prior >= 1.0) throw InvalidParams("class prior not in (0,1)");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidParams("sigma is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidParams("sigma is not positive definite");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct NoiseSampler {
    NoiseFamily family;
    Eigen::MatrixXd chol;       // Gaussian: chol(Sigma); bounded: chol of copula corr
    Eigen::VectorXd scales;     // bounded family: per-coordinate |Z_k|

    explicit NoiseSampler(const TheoryParams& p) : family(p.family) {
        if (family == NoiseFamily::gaussian) {
            chol = Eigen::LLT<Eigen::MatrixXd>(p.sigma).matrixL();
            return;
        }
        // Bounded family: Z_k = s_k * sign(G_k) with G a correlated standard
        // Gaussian. sign thresholding maps Gaussian correlation g to
        // (2/pi) asin(g), so the copula uses g = sin(pi rho / 2) to land the
        // realized covariance exactly on Sigma.
        const auto m = p.sigma.rows();
        scales = p.sigma.diagonal().cwiseSqrt();
        Eigen::MatrixXd copula(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                double r = p.sigma(i, j) / (scales(i) * scales(j));
                copula(i, j) = std::sin(std::numbers::pi * r / 2.0);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(copula);
        if (llt.info() == Eigen::Success) {
            chol = llt.matrixL();
        } else {
            // The elementwise sine map can leave PSD for some matrices; clip
            // the spectrum and re-factor.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(copula);
            Eigen::VectorXd vals = es.eigenvalues().cwiseMax(1e-12);
            Eigen::MatrixXd fixed =
                es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
            chol = Eigen::LLT<Eigen::MatrixXd>(fixed).matrixL();
        }
    }

    Eigen::VectorXd draw(std::mt19937_64& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd g(chol.rows());
        for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = normal(rng);
        Eigen::VectorXd correlated = chol * g;
        if (family == NoiseFamily::gaussian) return correlated;
        Eigen::VectorXd z(correlated.size());
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            z(k) = scales(k) * (correlated(k) >= 0.0 ? 1.0 : -1.0);
        }
        return z;
    }
};

} // namespace

VerdictSample sample_verdicts(const TheoryParams& params, int trials, std::uint64_t seed) {
    params.validate();
    if (trials < 1) throw InvalidParams("trials must be >= 1");
    NoiseSampler sampler(params);
    VerdictSample out;
    out.y_hat.resize(trials, params.m);
    out.labels.resize(trials);
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(t))));
        std::bernoulli_distribution label(params.class_prior);
        int y = label(rng) ? 1 : -1;
        Eigen::VectorXd z = sampler.draw(rng);
        out.y_hat.row(t) = (params.mu.array() * y + z.array()).transpose();
        out.labels[t] = y;
    }
    return out;
}

double misclassification_bound(const TheoryParams& params, const Eigen::VectorXd& w) {
    params.validate();
    if (w.size() != params.m) throw InvalidParams("weight length mismatch");
    double delta = w.dot(params.mu);
    double variance = w.dot(params.sigma * w);
    if (variance <= 0.0) throw ZeroVariance();
    return std::exp(-0.5 * delta * delta / variance);
}

double equicorrelated_bound(int m, double mu, double sigma, double rho) {
    return std::exp(-m * mu * mu / (2.0 * sigma * sigma * (1.0 + (m - 1) * rho)));
}

ErrorEstimate empirical_error(const TheoryParams& params, const Eigen::VectorXd& w, int trials,
                              std::uint64_t seed) {
    auto sample = sample_verdicts(params, trials, seed);
    int errors = 0;
    for (int t = 0; t < trials; ++t) {
        double score = w.dot(sample.y_hat.row(t));
        int predicted = score > 0.0 ? 1 : -1; // score == 0 counted as error
        if (score == 0.0 || predicted != sample.labels[t]) ++errors;
    }
    ErrorEstimate est;
    est.trials = trials;
    est.error = static_cast<double>(errors) / trials;
    est.std_error = std::sqrt(est.error * (1.0 - est.error) / trials);
    return est;
}

double snr(const Eigen::VectorXd& w, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    double variance = w.dot(sigma * w);
    if (variance <= 0.0) throw ZeroVariance();
    double delta = w.dot(mu);
    return delta * delta / variance;
}

double optimal_snr(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    return mu.dot(sigma.llt().solve(mu));
}

Eigen::MatrixXd sqrt_matrix(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    Eigen::VectorXd vals = es.eigenvalues().cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

CosineCheck cosine_identity_check(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& sigma) {
    if (w.norm() == 0.0) throw InvalidParams("w must be nonzero");
    CosineCheck out;
    out.ratio = snr(w, mu, sigma) / optimal_snr(mu, sigma);
    Eigen::MatrixXd root = sqrt_matrix(sigma);
    Eigen::VectorXd u = root * w;                     // Sigma^{1/2} w
    Eigen::VectorXd v = root.llt().solve(mu);         // Sigma^{-1/2} mu
    double c = u.dot(v) / (u.norm() * v.norm());
    out.cos2 = c * c;
    return out;
}

MinimaxReport minimax_check(const Eigen::MatrixXd& sigma,
                            const std::vector<Eigen::VectorXd>& candidate_weights,
                            const std::vector<Eigen::VectorXd>& z_samples, double tol) {
    const auto m = sigma.rows();
    Eigen::MatrixXd root = sqrt_matrix(sigma);

    std::vector<Eigen::VectorXd> zs = z_samples;
    for (Eigen::Index i = 0; i < m; ++i) zs.push_back(Eigen::VectorXd::Unit(m, i));

    // In whitened coordinates Xi(w; z) = kappa * (u'z)^2 / ||u||^2 with
    // u = Sigma^{1/2} w and kappa = 1 for unit z; only relative order matters.
    auto worst_case = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd u = (root * w).normalized();
        double inf = std::numeric_limits<double>::infinity();
        for (const auto& z : zs) {
            double c = u.dot(z.normalized());
            inf = std::min(inf, c * c);
        }
        return inf;
    };

    MinimaxReport report;
    for (const auto& w : candidate_weights) report.candidate_infs.push_back(worst_case(w));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    Eigen::VectorXd inv_sqrt_vals = es.eigenvalues().array().rsqrt();
    Eigen::MatrixXd inv_root =
        es.eigenvectors() * inv_sqrt_vals.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd w_wu = inv_root * Eigen::VectorXd::Ones(m) / std::sqrt(double(m));
    report.wu_inf = worst_case(w_wu);
    report.candidate_infs.push_back(report.wu_inf);

    Eigen::VectorXd whitened = root * w_wu;
    report.whitened_direction_error =
        (whitened.array() - 1.0 / std::sqrt(double(m))).abs().maxCoeff();

    report.wu_wins = true;
    for (double inf : report.candidate_infs) {
        if (report.wu_inf < inf - tol) report.wu_wins = false;
    }
    return report;
}

std::vector<GridPoint> default_grid() {
    std::vector<GridPoint> grid;
    for (NoiseFamily family : {NoiseFamily::gaussian, NoiseFamily::bounded_shifted_bernoulli}) {
        for (int m : {1, 2, 5, 10, 20}) {
            for (double rho : {0.0, 0.3, 0.7}) {
                for (double ratio : {0.25, 0.5, 1.0}) {
                    grid.push_back({m, rho, ratio, family});
                }
            }
        }
    }
    return grid;
}

std::vector<GridOutcome> run_grid(const std::vector<GridPoint>& grid, int trials,
                                  std::uint64_t seed) {
    std::vector<GridOutcome> out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& pt = grid[i];
        auto params = TheoryParams::equicorrelated(pt.m, pt.mu_over_sigma, 1.0, pt.rho, pt.family);
        Eigen::VectorXd w = Eigen::VectorXd::Ones(pt.m);
        GridOutcome o;
        o.point = pt;
        o.bound = misclassification_bound(params, w);
        auto est = empirical_error(params, w, trials, seed + i);
        o.empirical = est.error;
        o.std_error = est.std_error;
        o.pass = o.empirical <= o.bound + 3.0 * o.std_error;
        out.push_back(o);
    }
    return out;
}

std::string grid_csv(const std::vector<GridOutcome>& outcomes) {
    std::ostringstream csv;
    csv << "family,m,rho,mu_over_sigma,bound,empirical,std_error,pass\n";
    for (const auto& o : outcomes) {
        csv << to_string(o.point.family) << ',' << o.point.m << ',' << o.point.rho << ','
            << o.point.mu_over_sigma << ',' << o.bound << ',' << o.empirical << ','
            << o.std_error << ',' << (o.pass ? "pass" : "FAIL") << '\n';
    }
    return csv.str();
}

} // namespace rrd::theory
