#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "prophetlab/errors.hpp"
#include "prophetlab/numerics.hpp"

using namespace prophetlab;
using namespace prophetlab::numerics;

TEST(Binomial, ReferenceValues) {
    EXPECT_NEAR(binom_min_k_expect(2, 0.5, 1), 0.75, 1e-15);
    EXPECT_EQ(binom_min_k_expect(5, 0.0, 3), 0.0);
    EXPECT_NEAR(binom_min_k_expect(4, 0.5, 2), 1.625, 1e-15);
    EXPECT_NEAR(binom_cdf_lt(2, 0.5, 1), 0.25, 1e-15);
    EXPECT_EQ(binom_cdf_lt(3, 1.0, 3), 0.0);
    EXPECT_EQ(binom_cdf_lt(3, 0.0, 1), 1.0);
}

TEST(Binomial, MatchesDirectPmf) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uq(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 120);
        const int k = 1 + static_cast<int>(rng() % 10);
        const double q = uq(rng);
        EXPECT_NEAR(binom_min_k_expect(n, q, k), static_cast<double>(oracle::binomial_min_k(n, q, k)), 1e-12)
            << n << ' ' << q << ' ' << k;
        EXPECT_NEAR(binom_cdf_lt(n, q, k), static_cast<double>(oracle::binomial_lt(n, q, k)), 1e-12);
    }
}

TEST(Binomial, SmallQKeepsRelativeAccuracy) {
    const double q = 1e-9;
    const double e = binom_min_k_expect(100, q, 2);
    EXPECT_NEAR(e / (100 * q), 1.0, 1e-6);
    EXPECT_GT(e, 0.0);
}

TEST(Binomial, DomainErrors) {
    EXPECT_THROW(binom_min_k_expect(3, 1.5, 1), DomainError);
    EXPECT_THROW(binom_cdf_lt(3, -0.1, 1), DomainError);
    EXPECT_THROW(binom_min_k_expect(3, 0.5, 0), DomainError);
    EXPECT_NEAR(binom_min_k_expect(3, 1.0 + 5e-13, 1), 1.0, 1e-15);
}

TEST(PoissonBinomial, ReferenceValues) {
    const ProbVector half({0.5, 0.5});
    EXPECT_NEAR(poisbin_min_k_expect(half, 1), 0.75, 1e-15);
    EXPECT_NEAR(poisbin_cdf_lt(half, 1), 0.25, 1e-15);
    EXPECT_NEAR(poisbin_min_k_expect(ProbVector({1, 1, 1}), 2), 2.0, 1e-15);
    EXPECT_EQ(poisbin_min_k_expect(ProbVector(), 1), 0.0);
    EXPECT_EQ(poisbin_cdf_lt(ProbVector(), 1), 1.0);
}

TEST(PoissonBinomial, ConstantVectorEqualsBinomial) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uq(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 200);
        const int k = 1 + static_cast<int>(rng() % 10);
        const double q = uq(rng);
        const ProbVector p = ProbVector::constant(static_cast<std::size_t>(n), q);
        EXPECT_NEAR(poisbin_min_k_expect(p, k), binom_min_k_expect(n, q, k), 1e-12);
        EXPECT_NEAR(poisbin_cdf_lt(p, k), binom_cdf_lt(n, q, k), 1e-12);
    }
}

TEST(PoissonBinomial, MatchesEnumeration) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uq(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 12);
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& v : p) v = uq(rng);
        const auto pmf = oracle::bernoulli_sum_pmf(p);
        for (int k = 1; k <= 4; ++k) {
            long double e = 0.0L;
            long double lt = 0.0L;
            for (std::size_t d = 0; d < pmf.size(); ++d) {
                e += std::min<long double>(static_cast<long double>(d), k) * pmf[d];
                if (static_cast<int>(d) < k) lt += pmf[d];
            }
            const ProbVector pv(p);
            EXPECT_NEAR(poisbin_min_k_expect(pv, k), static_cast<double>(e), 1e-13);
            EXPECT_NEAR(poisbin_cdf_lt(pv, k), static_cast<double>(lt), 1e-13);
            EXPECT_LE(poisbin_min_k_expect(pv, k), std::min<double>(k, std::accumulate(p.begin(), p.end(), 0.0)) + 1e-15);
        }
    }
}

TEST(PoissonBinomial, PrefixAvailability) {
    const std::vector<double> tau{0.2, 0.7, 0.4, 0.9};
    const auto avail = prefix_availability(tau, 2);
    ASSERT_EQ(avail.size(), tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const ProbVector prefix(std::vector<double>(tau.begin(), tau.begin() + static_cast<long>(i)));
        EXPECT_NEAR(avail[i], poisbin_cdf_lt(prefix, 2), 1e-15);
    }
}

TEST(PoissonBinomial, RejectsInvalidEntries) {
    EXPECT_THROW(ProbVector({0.2, 1.2}), DomainError);
    EXPECT_THROW(ProbVector({std::nan("")}), DomainError);
}

TEST(Poisson, ReferenceValues) {
    EXPECT_NEAR(pois_cdf_lt(std::log(2.0), 1), 0.5, 1e-15);
    EXPECT_NEAR(pois_min_k_expect(std::log(2.0), 1), 0.5, 1e-15);
    EXPECT_EQ(pois_cdf_lt(0.0, 5), 1.0);
    EXPECT_EQ(pois_min_k_expect(0.0, 5), 0.0);
    EXPECT_NEAR(pois_min_k_expect(2.0, 1), 1.0 - std::exp(-2.0), 1e-15);
    EXPECT_THROW(pois_cdf_lt(-1.0, 1), DomainError);
}

TEST(Poisson, MatchesDirectPmf) {
    for (double lambda : {0.01, 0.3, 1.0, 2.5, 7.0, 15.0, 30.0}) {
        for (int k : {1, 2, 3, 5, 10, 20}) {
            EXPECT_NEAR(pois_min_k_expect(lambda, k), static_cast<double>(oracle::poisson_min_k(lambda, k)), 1e-12)
                << lambda << ' ' << k;
        }
    }
}

TEST(Poisson, UpperTailRelativeAccuracy) {
    // Pr[Pois(l) > 1] = 1 - e^{-l}(1 + l), evaluated stably for small l by its series.
    const double l = 1e-5;
    const double series = l * l / 2 - l * l * l / 3 + l * l * l * l / 8;
    EXPECT_NEAR(pois_tail_gt(l, 1) / series, 1.0, 1e-12);
    // E[(Pois(l) - 1)^+] = l - 1 + e^{-l}.
    const double excess = l * l / 2 - l * l * l / 6 + l * l * l * l / 24;
    EXPECT_NEAR(pois_excess_expect(l, 1) / excess, 1.0, 1e-12);
    EXPECT_NEAR(pois_excess_expect(12.0, 3), 12.0 - pois_min_k_expect(12.0, 3), 1e-12);
}

TEST(Poisson, LargeSlotCountStaysFinite) {
    const double v = pois_min_k_expect(10000.0, 10000);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 9900.0);
    EXPECT_LT(v, 10000.0);
    const double c = pois_cdf_lt(10000.0, 10000);
    EXPECT_NEAR(c, 0.5, 0.01);
}

TEST(Properties, MonotoneInQAndN) {
    for (int k : {1, 2, 5}) {
        for (int n : {3, 10, 40}) {
            double prev_e = -1.0;
            double prev_c = 2.0;
            for (int t = 0; t <= 1000; ++t) {
                const double q = t / 1000.0;
                const double e = binom_min_k_expect(n, q, k);
                const double c = binom_cdf_lt(n, q, k);
                EXPECT_GE(e, prev_e - 1e-15);
                EXPECT_LE(c, prev_c + 1e-15);
                EXPECT_GE(binom_min_k_expect(n + 1, q, k), e - 1e-15);
                prev_e = e;
                prev_c = c;
            }
        }
    }
}

TEST(Properties, ConcaveInQ) {
    for (int k : {1, 3}) {
        for (int n : {5, 50}) {
            const double h = 1e-3;
            for (int t = 1; t < 1000; ++t) {
                const double q = t * h;
                const double second = binom_min_k_expect(n, q + h, k) - 2 * binom_min_k_expect(n, q, k) +
                                      binom_min_k_expect(n, q - h, k);
                EXPECT_LE(second, 1e-10);
            }
        }
    }
}

TEST(Properties, ComplementIdentity) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uq(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 6);
        const int n = 1 + static_cast<int>(rng() % 30);
        const double q = uq(rng);
        const double lambda = 8.0 * uq(rng);
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& v : p) v = uq(rng);
        const ProbVector pv(p);
        double sb = 0.0, sp = 0.0, spb = 0.0;
        for (int c = 1; c <= k; ++c) {
            sb += 1.0 - binom_cdf_lt(n, q, c);
            sp += 1.0 - pois_cdf_lt(lambda, c);
            spb += 1.0 - poisbin_cdf_lt(pv, c);
        }
        EXPECT_NEAR(sb, binom_min_k_expect(n, q, k), 1e-12);
        EXPECT_NEAR(sp, pois_min_k_expect(lambda, k), 1e-12);
        EXPECT_NEAR(spb, poisbin_min_k_expect(pv, k), 1e-12);
    }
}
