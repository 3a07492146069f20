#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "onebit/bernoulli.hpp"
#include "onebit/centroid.hpp"
#include "onebit/gaussian.hpp"
#include "onebit/nearest_neighbor.hpp"
#include "oracles.hpp"

using namespace onebit;
using oracle::Signs;

namespace {

/// K=1 dataset over `order` classes from explicit sign vectors, class-major.
LabelledDataset dataset_of(std::size_t order, std::size_t pilots, const std::vector<Signs>& rows) {
    std::vector<BinaryObservation> obs;
    for (const auto& s : rows) obs.push_back(oracle::to_obs(s));
    return LabelledDataset(1, order, pilots, std::move(obs));
}

/// Random dataset: each class has a random prototype, pilots flip each bit with probability p.
LabelledDataset random_dataset(std::size_t order, std::size_t pilots, std::size_t n, double p, std::mt19937_64& rng) {
    std::vector<Signs> rows;
    for (std::size_t c = 0; c < order; ++c) {
        const auto proto = oracle::random_signs(n, rng);
        for (std::size_t t = 0; t < pilots; ++t) rows.push_back(oracle::flip_each(proto, p, rng));
    }
    return dataset_of(order, pilots, rows);
}

BernoulliParams manual_bernoulli(const std::vector<Signs>& mu, const std::vector<std::vector<double>>& eps) {
    BernoulliParams p;
    for (const auto& s : mu) p.signatures.push_back(oracle::to_obs(s));
    p.raw_flip_probs = eps;
    p.flip_probs = eps;
    p.refresh_weights();
    return p;
}

}  // namespace

// ---- centroid -------------------------------------------------------------

TEST(FitCentroid, TwoPointAverage) {
    const auto d = dataset_of(2, 2, {{1, 1}, {1, -1}, {-1, -1}, {-1, -1}});
    const auto p = fit_centroid(d);
    EXPECT_EQ(p.means[0], Eigen::Vector2d(1.0, 0.0));
    EXPECT_EQ(p.means[1], Eigen::Vector2d(-1.0, -1.0));
}

TEST(FitCentroid, MeansAreMultiplesOfOneOverT) {
    std::mt19937_64 rng(4);
    const auto d = random_dataset(4, 15, 20, 0.5, rng);
    for (const auto& mu : fit_centroid(d).means)
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            const double scaled = mu(i) * 15.0;
            EXPECT_NEAR(scaled, std::round(scaled), 1e-12);
            EXPECT_LE(std::abs(mu(i)), 1.0);
        }
}

TEST(DetectMcd, ExactMatchAndTieBreak) {
    CentroidParams p{{Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, -1)}};
    EXPECT_EQ(detect_mcd(BinaryObservation::from_signs({1, 1}), p).value, 0u);
    EXPECT_EQ(detect_mcd(BinaryObservation::from_signs({-1, -1}), p).value, 1u);

    CentroidParams same{{Eigen::Vector2d(0.5, 0), Eigen::Vector2d(0.5, 0)}};
    EXPECT_EQ(detect_mcd(BinaryObservation::from_signs({-1, 1}), same).value, 0u);
}

TEST(DetectMcd, AgreesWithLinearScan) {
    std::mt19937_64 rng(8);
    const auto d = random_dataset(8, 5, 12, 0.2, rng);
    const auto p = fit_centroid(d);
    for (int q = 0; q < 500; ++q) {
        const auto r = oracle::random_signs(12, rng);
        const auto expect = oracle::linear_argmin(8, [&](std::size_t c) {
            const auto& m = p.means[c];
            return oracle::squared_distance(r, std::vector<double>(m.data(), m.data() + m.size()));
        });
        ASSERT_EQ(detect_mcd(oracle::to_obs(r), p).value, expect);
    }
}

// ---- gaussian -------------------------------------------------------------

TEST(FitGaussian, HandCovarianceAndShrinkage) {
    const auto d = dataset_of(2, 2, {{1, 1}, {1, -1}, {1, 1}, {-1, -1}});
    const auto samples = d.class_samples(ClassIndex{0});
    const Eigen::VectorXd mu = detail::class_mean(samples, 2);
    const Eigen::MatrixXd raw = sample_covariance(samples, mu);
    EXPECT_TRUE(raw.isApprox(Eigen::Matrix2d{{0, 0}, {0, 1}}));

    const auto p = fit_gaussian(d, 0.1);
    EXPECT_NEAR((p.covariances[0] - Eigen::Matrix2d{{0.05, 0}, {0, 0.95}}).norm(), 0.0, 1e-12);
    EXPECT_NEAR((p.precisions[0] * p.covariances[0] - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-8);
}

TEST(FitGaussian, FullShrinkageGivesScaledIdentity) {
    std::mt19937_64 rng(2);
    const auto d = random_dataset(4, 6, 10, 0.3, rng);
    const auto p = fit_gaussian(d, 1.0);
    for (std::uint32_t c = 0; c < 4; ++c) {
        const auto s = d.class_samples(ClassIndex{c});
        const double nu = std::max(sample_covariance(s, detail::class_mean(s, 10)).trace() / 10.0,
                                   default_min_target_variance);
        EXPECT_NEAR((p.covariances[c] - nu * Eigen::MatrixXd::Identity(10, 10)).norm(), 0.0, 1e-12);
    }
}

TEST(FitGaussian, SingularWithoutShrinkageIsAFitError) {
    const auto d = dataset_of(2, 2, {{1, 1}, {1, -1}, {1, 1}, {-1, -1}});
    try {
        fit_gaussian(d, 0.0);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
    }
    EXPECT_THROW(fit_gaussian(d, 1.5), ContractViolation);
}

TEST(DetectMahalanobis, HandInstanceWithDiagonalPrecisions) {
    GaussianParams p;
    p.means = {Eigen::Vector2d(1, 1), Eigen::Vector2d(0, -1), Eigen::Vector2d(-1, 0.5)};
    p.precisions = {Eigen::Vector2d(1, 1).asDiagonal(), Eigen::Vector2d(0.1, 4).asDiagonal(),
                    Eigen::Vector2d(2, 0.5).asDiagonal()};
    // r = (-1, +1): class 0 -> 4, class 1 -> 0.1 + 16 = 16.1, class 2 -> 0 + 0.125
    EXPECT_EQ(detect_mahalanobis(BinaryObservation::from_signs({-1, 1}), p).value, 2u);
    // r = (+1, -1): class 0 -> 4, class 1 -> 0.1, class 2 -> 8 + 1.125
    EXPECT_EQ(detect_mahalanobis(BinaryObservation::from_signs({1, -1}), p).value, 1u);
    // r = (+1, +1): class 0 -> 0
    EXPECT_EQ(detect_mahalanobis(BinaryObservation::from_signs({1, 1}), p).value, 0u);
}

TEST(DetectMahalanobis, IdentityPrecisionMatchesMcd) {
    std::mt19937_64 rng(21);
    const auto d = random_dataset(16, 6, 16, 0.25, rng);
    auto g = fit_gaussian(d, 0.1);
    for (auto& prec : g.precisions) prec = Eigen::MatrixXd::Identity(16, 16);
    const auto m = fit_centroid(d);
    for (int q = 0; q < 2000; ++q) {
        const auto r = oracle::to_obs(oracle::random_signs(16, rng));
        ASSERT_EQ(detect_mahalanobis(r, g), detect_mcd(r, m));
    }
}

// ---- nearest neighbour ----------------------------------------------------

TEST(DetectEmld, MajorityVote) {
    // Class 0 holds two points at distance 1, class 1 one point at distance 0.
    const auto d = dataset_of(2, 3, {{1, 1, 1, -1}, {1, 1, -1, 1}, {-1, -1, -1, -1},
                                     {1, 1, 1, 1}, {-1, -1, -1, 1}, {-1, -1, 1, -1}});
    const auto r = BinaryObservation::from_signs({1, 1, 1, 1});
    EXPECT_EQ(detect_emld(r, d, 3).value, 0u);
    EXPECT_EQ(detect_emld(r, d, 1).value, 1u);
    EXPECT_EQ(detect_mmd(r, d).value, 1u);
}

TEST(DetectEmld, VoteTieGoesToLowestClass) {
    const auto d = dataset_of(2, 1, {{-1, -1}, {1, 1}});
    EXPECT_EQ(detect_emld(BinaryObservation::from_signs({1, -1}), d, 2).value, 0u);
}

TEST(DetectEmld, KOutOfRange) {
    const auto d = dataset_of(2, 1, {{-1, -1}, {1, 1}});
    const auto r = BinaryObservation::from_signs({1, 1});
    EXPECT_THROW(detect_emld(r, d, 0), ContractViolation);
    EXPECT_THROW(detect_emld(r, d, 3), ContractViolation);
}

TEST(DetectEmld, KOneMatchesMmd) {
    std::mt19937_64 rng(13);
    const auto d = random_dataset(16, 5, 10, 0.2, rng);
    for (int q = 0; q < 2000; ++q) {
        const auto r = oracle::to_obs(oracle::random_signs(10, rng));
        ASSERT_EQ(detect_emld(r, d, 1), detect_mmd(r, d));
    }
}

// ---- bernoulli ------------------------------------------------------------

TEST(FitBernoulli, CoordinateExamples) {
    // Three coordinates over T=5: (+,+,-,+,-), all +1, and a balanced column padded to 4+1.
    const auto d = dataset_of(2, 5, {{1, 1, 1}, {1, 1, -1}, {-1, 1, 1}, {1, 1, -1}, {-1, 1, 1},
                                     {1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    const auto p = fit_bernoulli(d);
    EXPECT_EQ(p.signatures[0][0], 1);
    EXPECT_DOUBLE_EQ(p.raw_flip_probs[0][0], 2.0 / 5.0);
    EXPECT_EQ(p.raw_flip_probs[0][1], 0.0);
    EXPECT_EQ(p.flip_probs[0][1], 1e-3);
    EXPECT_NEAR(p.weights[0][1], -std::log(1e-3), 1e-12);
}

TEST(FitBernoulli, TieGivesPlusOneAndOneHalf) {
    const auto d = dataset_of(2, 2, {{1}, {-1}, {-1}, {-1}});
    const auto p = fit_bernoulli(d);
    EXPECT_EQ(p.signatures[0][0], 1);
    EXPECT_EQ(p.raw_flip_probs[0][0], 0.5);
    EXPECT_EQ(p.signatures[1][0], -1);
    EXPECT_EQ(p.raw_flip_probs[1][0], 0.0);
}

TEST(FitBernoulli, FloorOutOfRange) {
    const auto d = dataset_of(2, 1, {{1}, {-1}});
    EXPECT_THROW(fit_bernoulli(d, 0.0), ContractViolation);
    EXPECT_THROW(fit_bernoulli(d, 0.5), ContractViolation);
}

TEST(FitBernoulli, SignatureMajorityAndWeightBounds) {
    std::mt19937_64 rng(30);
    for (const std::size_t t : {1u, 2u, 5u, 15u}) {
        const auto d = random_dataset(8, t, 24, 0.4, rng);
        const auto p = fit_bernoulli(d, 1e-3);
        for (std::uint32_t c = 0; c < 8; ++c) {
            const auto samples = d.class_samples(ClassIndex{c});
            for (std::size_t i = 0; i < 24; ++i) {
                std::size_t agree = 0;
                for (const auto& r : samples) agree += r[i] == p.signatures[c][i];
                EXPECT_GE(2 * agree, t);
                EXPECT_LE(p.raw_flip_probs[c][i], 0.5);
                EXPECT_GE(p.weights[c][i], std::log(2.0) - 1e-15);
                EXPECT_LE(p.weights[c][i], -std::log(1e-3) + 1e-12);
            }
        }
    }
}

TEST(FitBernoulli, FittedParametersMaximizeTheLikelihoodOnAGrid) {
    std::mt19937_64 rng(77);
    constexpr std::size_t n = 3;
    for (int instance = 0; instance < 10; ++instance) {
        std::vector<Signs> samples;
        for (int t = 0; t < 4; ++t) samples.push_back(oracle::random_signs(n, rng));
        std::vector<BinaryObservation> packed;
        for (const auto& s : samples) packed.push_back(oracle::to_obs(s));
        const auto fit = fit_bernoulli_class(packed);
        const auto fitted = oracle::bernoulli_likelihood(samples, fit.signature.to_signs(), fit.raw_flip_probs);

        // Exhaustive grid over signatures and eps in {0, 0.01, ..., 0.5} per coordinate.
        double best = 0.0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            Signs mu(n);
            for (std::size_t i = 0; i < n; ++i) mu[i] = (mask >> i) & 1u ? -1 : 1;
            // The likelihood factorizes over coordinates, so maximize each eps separately.
            double l = 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                double coord_best = 0.0;
                for (int g = 0; g <= 50; ++g) {
                    const double e = g / 100.0;
                    double v = 1.0;
                    for (const auto& r : samples) v *= r[i] != mu[i] ? e : 1.0 - e;
                    coord_best = std::max(coord_best, v);
                }
                l *= coord_best;
            }
            best = std::max(best, l);
        }
        EXPECT_GE(fitted, best * (1.0 - 1e-12));
    }
}

TEST(DetectBernoulli, HandScores) {
    const auto p = manual_bernoulli({{1, 1}, {-1, 1}}, {{0.1, 0.1}, {0.4, 0.4}});
    const auto a = BinaryObservation::from_signs({1, 1});
    const auto b = BinaryObservation::from_signs({-1, -1});
    EXPECT_EQ(p.score(a, ClassIndex{0}), 0.0);
    EXPECT_NEAR(p.score(a, ClassIndex{1}), 3.665, 1e-3);
    EXPECT_NEAR(p.score(b, ClassIndex{0}), 18.42, 1e-2);
    EXPECT_NEAR(p.score(b, ClassIndex{1}), 3.665, 1e-3);
    EXPECT_EQ(detect_bernoulli(a, p).value, 0u);
    EXPECT_EQ(detect_bernoulli(b, p).value, 1u);

    const Signs ra{1, 1}, rb{-1, -1};
    EXPECT_NEAR(p.score(a, ClassIndex{1}), oracle::bernoulli_quadratic(ra, {-1, 1}, {0.4, 0.4}), 1e-12);
    EXPECT_NEAR(p.score(b, ClassIndex{0}), oracle::bernoulli_quadratic(rb, {1, 1}, {0.1, 0.1}), 1e-12);
}

TEST(DetectBernoulli, IdenticalClassesTieToLowestIndex) {
    const auto p = manual_bernoulli({{1, -1}, {1, -1}, {1, -1}}, {{0.2, 0.3}, {0.2, 0.3}, {0.2, 0.3}});
    EXPECT_EQ(detect_bernoulli(BinaryObservation::from_signs({-1, 1}), p).value, 0u);
    const std::vector<ClassIndex> reversed{ClassIndex{2}, ClassIndex{1}};
    EXPECT_EQ(detect_bernoulli(BinaryObservation::from_signs({-1, 1}), p, reversed).value, 1u);
}

TEST(DetectBernoulli, ExactLikelihoodMatchesLiteralProduct) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eps(0.01, 0.5);
    std::vector<Signs> mu;
    std::vector<std::vector<double>> e;
    for (int c = 0; c < 4; ++c) {
        mu.push_back(oracle::random_signs(6, rng));
        e.emplace_back();
        for (int i = 0; i < 6; ++i) e.back().push_back(eps(rng));
    }
    const auto p = manual_bernoulli(mu, e);
    for (int q = 0; q < 50; ++q) {
        const auto r = oracle::random_signs(6, rng);
        for (std::uint32_t c = 0; c < 4; ++c)
            EXPECT_NEAR(p.score(oracle::to_obs(r), ClassIndex{c}, BernoulliScoring::exact_likelihood),
                        -std::log(oracle::bernoulli_likelihood({r}, mu[c], e[c])), 1e-9);
    }
}

TEST(DetectBernoulli, UniformEpsilonReducesToMinimumHamming) {
    std::mt19937_64 rng(55);
    std::vector<Signs> mu;
    for (int c = 0; c < 32; ++c) mu.push_back(oracle::random_signs(20, rng));
    const auto p = manual_bernoulli(mu, std::vector<std::vector<double>>(32, std::vector<double>(20, 0.17)));
    for (int q = 0; q < 2000; ++q) {
        const auto r = oracle::random_signs(20, rng);
        const auto expect = oracle::linear_argmin(32, [&](std::size_t c) { return double(oracle::hamming(r, mu[c])); });
        ASSERT_EQ(detect_bernoulli(oracle::to_obs(r), p).value, expect);
        ASSERT_EQ(detect_bernoulli(oracle::to_obs(r), p, BernoulliScoring::exact_likelihood).value, expect);
    }
}

// ---- all detectors --------------------------------------------------------

TEST(AllDetectors, NoiselessObservationsAreClassifiedPerfectly) {
    SystemConfig c;
    c.sources = 2;
    c.rx_antennas = 8;
    c.relays = 8;
    c.snr_db = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(101);
    const auto ch = draw_channel(c, rng);
    const auto d = collect_training(ch, c, 3, rng);
    const auto b = fit_bernoulli(d);
    for (std::size_t i = 0; i < b.class_count(); ++i)
        for (std::size_t j = i + 1; j < b.class_count(); ++j) ASSERT_NE(b.signatures[i], b.signatures[j]);

    const auto m = fit_centroid(d);
    const auto g = fit_gaussian(d, 0.1);
    const auto qpsk = ConstellationSet::qpsk();
    for (std::uint32_t k = 0; k < d.class_count(); ++k) {
        const ClassIndex cls{k};
        const auto r = transmit(ch, qpsk, class_decode(cls, 2, 4), rng);
        EXPECT_EQ(detect_mcd(r, m), cls);
        EXPECT_EQ(detect_mahalanobis(r, g), cls);
        EXPECT_EQ(detect_emld(r, d, 3), cls);
        EXPECT_EQ(detect_mmd(r, d), cls);
        EXPECT_EQ(detect_bernoulli(r, b), cls);
        EXPECT_EQ(detect_bernoulli(r, b, BernoulliScoring::exact_likelihood), cls);
    }
}
