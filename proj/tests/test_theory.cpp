#include "rrd/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rrd::theory;

namespace {

Eigen::MatrixXd random_spd(int m, std::mt19937& rng, double eig_lo = 0.3, double eig_hi = 3.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    std::uniform_real_distribution<double> eig(eig_lo, eig_hi);
    Eigen::VectorXd vals(m);
    for (int i = 0; i < m; ++i) vals(i) = eig(rng);
    return q * vals.asDiagonal() * q.transpose();
}

} // namespace

TEST_CASE("parameter validation") {
    TheoryParams p = TheoryParams::equicorrelated(3, 1.0, 1.0, 0.2);
    CHECK(p.m == 3);
    CHECK(p.mu(0) == doctest::Approx(1.0));
    CHECK(p.sigma(0, 1) == doctest::Approx(0.2));
    CHECK(p.sigma(0, 0) == doctest::Approx(1.0));
    CHECK_NOTHROW(p.validate());

    CHECK_THROWS_AS(TheoryParams::equicorrelated(3, -1.0, 1.0, 0.0), InvalidParams);
    CHECK_THROWS_AS(TheoryParams::equicorrelated(3, 1.0, 1.0, 1.5), InvalidParams);
    CHECK_THROWS_AS(TheoryParams::equicorrelated(3, 1.0, 1.0, -0.9), InvalidParams);
    CHECK_THROWS_AS(TheoryParams::equicorrelated(3, 1.0, 1.0, 0.0, NoiseFamily::gaussian, 1.5),
                    InvalidParams);

    TheoryParams bad = p;
    bad.sigma(0, 1) = 0.9;
    CHECK_THROWS_AS(bad.validate(), InvalidParams); // asymmetric
    TheoryParams indef = p;
    indef.sigma = -Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(indef.validate(), InvalidParams);
}

TEST_CASE("noise family names round trip") {
    CHECK(family_from_string(to_string(NoiseFamily::gaussian)) == NoiseFamily::gaussian);
    CHECK(family_from_string(to_string(NoiseFamily::bounded_shifted_bernoulli)) ==
          NoiseFamily::bounded_shifted_bernoulli);
    CHECK(family_from_string("bounded") == NoiseFamily::bounded_shifted_bernoulli);
    CHECK_THROWS_AS(family_from_string("cauchy"), InvalidParams);
}

TEST_CASE("sampling is reproducible under a fixed seed") {
    auto p = TheoryParams::equicorrelated(4, 0.5, 1.0, 0.3);
    auto s1 = sample_verdicts(p, 50, 123);
    auto s2 = sample_verdicts(p, 50, 123);
    CHECK((s1.y_hat - s2.y_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.labels == s2.labels);
    auto s3 = sample_verdicts(p, 50, 124);
    CHECK((s1.y_hat - s3.y_hat).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sampled moments match the model, both families") {
    // Monte Carlo oracle: the conditional mean of Yhat*Y is mu and the noise
    // covariance is Sigma, whichever family generated the noise.
    for (NoiseFamily family :
         {NoiseFamily::gaussian, NoiseFamily::bounded_shifted_bernoulli}) {
        CAPTURE(to_string(family));
        int m = 3, trials = 40000;
        auto p = TheoryParams::equicorrelated(m, 0.8, 1.3, 0.4, family);
        auto s = sample_verdicts(p, trials, 777);
        Eigen::MatrixXd noise(trials, m);
        for (int t = 0; t < trials; ++t) {
            noise.row(t) = s.y_hat.row(t) - s.labels[t] * p.mu.transpose();
        }
        Eigen::RowVectorXd mean = noise.colwise().mean();
        for (int k = 0; k < m; ++k) CHECK(std::abs(mean(k)) < 0.03);
        Eigen::MatrixXd centered = noise.rowwise() - mean;
        Eigen::MatrixXd cov = centered.transpose() * centered / double(trials);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                CHECK(cov(i, j) == doctest::Approx(p.sigma(i, j)).epsilon(0.05));
            }
        }
    }
}

TEST_CASE("bounded family noise really is bounded at sigma_k") {
    auto p = TheoryParams::equicorrelated(2, 0.5, 1.7, 0.3,
                                          NoiseFamily::bounded_shifted_bernoulli);
    auto s = sample_verdicts(p, 500, 9);
    for (int t = 0; t < 500; ++t) {
        for (int k = 0; k < 2; ++k) {
            double z = s.y_hat(t, k) - s.labels[t] * p.mu(k);
            CHECK(std::abs(std::abs(z) - 1.7) < 1e-12);
        }
    }
}

TEST_CASE("class prior shifts the label distribution") {
    auto p = TheoryParams::equicorrelated(1, 1.0, 1.0, 0.0, NoiseFamily::gaussian, 0.2);
    auto s = sample_verdicts(p, 20000, 55);
    double pos = 0;
    for (int y : s.labels) pos += (y == 1);
    CHECK(pos / 20000.0 == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("vanishing noise drives the empirical error to zero") {
    auto p = TheoryParams::equicorrelated(2, 1.0, 1e-6, 0.0);
    auto est = empirical_error(p, Eigen::VectorXd::Ones(2), 2000, 3);
    CHECK(est.error == 0.0);
}

TEST_CASE("bound closed forms") {
    // m=1, mu=sigma=1, w=1: exp(-1/2)
    auto p1 = TheoryParams::equicorrelated(1, 1.0, 1.0, 0.0);
    CHECK(misclassification_bound(p1, Eigen::VectorXd::Ones(1)) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(equicorrelated_bound(1, 1.0, 1.0, 0.0) == doctest::Approx(std::exp(-0.5)));

    // the generic bound with unit weights reduces to the equicorrelated form
    for (int m : {1, 2, 5, 10}) {
        for (double rho : {0.0, 0.3, 0.7}) {
            for (double ratio : {0.25, 0.5, 1.0}) {
                auto p = TheoryParams::equicorrelated(m, ratio, 1.0, rho);
                CHECK(misclassification_bound(p, Eigen::VectorXd::Ones(m)) ==
                      doctest::Approx(equicorrelated_bound(m, ratio, 1.0, rho)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("equicorrelated bound is monotone in m and rho") {
    for (double ratio : {0.25, 0.5, 1.0}) {
        // strictly decreasing in m at fixed rho
        for (double rho : {0.0, 0.3, 0.7}) {
            double prev = equicorrelated_bound(1, ratio, 1.0, rho);
            for (int m : {2, 5, 10, 20}) {
                double b = equicorrelated_bound(m, ratio, 1.0, rho);
                CHECK(b < prev);
                prev = b;
            }
        }
        // strictly increasing in rho at fixed m >= 2 (at m=1 it is constant)
        for (int m : {2, 5, 20}) {
            double prev = equicorrelated_bound(m, ratio, 1.0, 0.0);
            for (double rho : {0.3, 0.7, 0.9}) {
                double b = equicorrelated_bound(m, ratio, 1.0, rho);
                CHECK(b > prev);
                prev = b;
            }
        }
        CHECK(equicorrelated_bound(1, ratio, 1.0, 0.0) ==
              doctest::Approx(equicorrelated_bound(1, ratio, 1.0, 0.7)));
    }
}

TEST_CASE("empirical error matches the Gaussian closed form at m=1") {
    // P(error) = Phi(-mu/sigma) = Phi(-1) ~ 0.158655
    auto p = TheoryParams::equicorrelated(1, 1.0, 1.0, 0.0);
    auto est = empirical_error(p, Eigen::VectorXd::Ones(1), 20000, 42);
    CHECK(std::abs(est.error - 0.158655) < 0.012);
    CHECK(est.std_error == doctest::Approx(std::sqrt(est.error * (1 - est.error) / 20000)));
    CHECK(est.error <= misclassification_bound(p, Eigen::VectorXd::Ones(1)));
}

TEST_CASE("snr maximum is attained at w = Sigma^{-1} mu") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        int m = 2 + static_cast<int>(rng() % 6);
        Eigen::MatrixXd sigma = random_spd(m, rng);
        std::uniform_real_distribution<double> mu_dist(0.2, 2.0);
        Eigen::VectorXd mu(m);
        for (int k = 0; k < m; ++k) mu(k) = mu_dist(rng);
        double kappa = optimal_snr(mu, sigma);
        Eigen::VectorXd w_star = sigma.llt().solve(mu);
        CHECK(snr(w_star, mu, sigma) == doctest::Approx(kappa).epsilon(1e-10));
        // any other weight does no better
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd w(m);
        for (int k = 0; k < m; ++k) w(k) = gauss(rng);
        CHECK(snr(w, mu, sigma) <= kappa + 1e-9);
    }
}

TEST_CASE("snr ratio equals the squared cosine in whitened coordinates") {
    std::mt19937 rng(67);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 1 + static_cast<int>(rng() % 8);
        Eigen::MatrixXd sigma = random_spd(m, rng);
        std::uniform_real_distribution<double> mu_dist(0.2, 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd mu(m), w(m);
        for (int k = 0; k < m; ++k) {
            mu(k) = mu_dist(rng);
            w(k) = gauss(rng);
        }
        if (w.norm() < 1e-6) continue;
        auto check = cosine_identity_check(w, mu, sigma);
        CHECK(std::abs(check.ratio - check.cos2) < 1e-10);
        CHECK(check.ratio <= 1.0 + 1e-12);
    }
}

TEST_CASE("sqrt_matrix squares back to the input") {
    std::mt19937 rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        int m = 2 + static_cast<int>(rng() % 6);
        Eigen::MatrixXd sigma = random_spd(m, rng);
        Eigen::MatrixXd root = sqrt_matrix(sigma);
        CHECK((root * root - sigma).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((root - root.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("whitened-uniform weights win the minimax comparison") {
    std::mt19937 rng(73);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int m = 2 + static_cast<int>(rng() % 5);
        Eigen::MatrixXd sigma = random_spd(m, rng);
        std::vector<Eigen::VectorXd> candidates;
        candidates.push_back(Eigen::VectorXd::Ones(m)); // uniform
        for (int c = 0; c < 10; ++c) {
            Eigen::VectorXd w(m);
            for (int k = 0; k < m; ++k) w(k) = gauss(rng);
            if (w.norm() > 1e-6) candidates.push_back(w);
        }
        std::vector<Eigen::VectorXd> zs;
        for (int z = 0; z < 500; ++z) {
            Eigen::VectorXd v(m);
            for (int k = 0; k < m; ++k) v(k) = unit(rng);
            if (v.norm() > 1e-6) zs.push_back(v);
        }
        auto report = minimax_check(sigma, candidates, zs);
        CHECK(report.wu_wins);
        CHECK(report.whitened_direction_error < 1e-10);
        REQUIRE(report.candidate_infs.size() == candidates.size() + 1);
        CHECK(report.candidate_infs.back() == doctest::Approx(report.wu_inf));
    }
}

TEST_CASE("on the identity covariance, uniform weights already achieve the minimax value") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    auto report = minimax_check(eye, {Eigen::VectorXd::Ones(3)}, {});
    REQUIRE(report.candidate_infs.size() == 2);
    CHECK(report.candidate_infs[0] == doctest::Approx(report.wu_inf).epsilon(1e-12));
    // the corner directions make the worst case (u'e_i)^2 = 1/m exact
    CHECK(report.wu_inf == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero variance and mismatched weights are rejected") {
    auto p = TheoryParams::equicorrelated(2, 1.0, 1.0, 0.0);
    CHECK_THROWS_AS(misclassification_bound(p, Eigen::VectorXd::Ones(3)), InvalidParams);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(snr(zero, p.mu, p.sigma), ZeroVariance);
}

TEST_CASE("default grid covers both families and passes at modest trial counts") {
    auto grid = default_grid();
    CHECK(grid.size() == 90); // 5 m x 3 rho x 3 ratios x 2 families
    auto outcomes = run_grid(grid, 2000, 7);
    REQUIRE(outcomes.size() == 90);
    for (const auto& o : outcomes) {
        CAPTURE(to_string(o.point.family));
        CAPTURE(o.point.m);
        CAPTURE(o.point.rho);
        CAPTURE(o.point.mu_over_sigma);
        CHECK(o.pass);
    }
    auto csv = grid_csv(outcomes);
    CHECK(csv.find("family,m,rho,mu_over_sigma,bound,empirical,std_error,pass") == 0);
    CHECK(csv.find("FAIL") == std::string::npos);
}
