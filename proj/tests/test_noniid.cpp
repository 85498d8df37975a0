#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "prophetlab/errors.hpp"
#include "prophetlab/noniid.hpp"

using namespace prophetlab;
using namespace prophetlab::noniid;
using ::testing::DoubleNear;

namespace {

// max over a uniform rho grid of min{availability, fill share} for n-1 agents at rate rho.
double crossing_scan(int n, int k, int points) {
    double best = 0.0;
    for (int s = 0; s <= points; ++s) {
        const long double rho = static_cast<long double>(s) / points;
        const long double avail = oracle::binomial_lt(n - 1, rho, k);
        const long double share = oracle::binomial_min_k(n - 1, rho, k) / k;
        best = std::max(best, static_cast<double>(std::min(avail, share)));
    }
    return best;
}

SearchOptions quick_search() {
    SearchOptions o;
    o.restarts = 6;
    o.budget = 4000;
    o.jobs = 2;
    return o;
}

}  // namespace

TEST(BernOpt, SingleSlotClosedForm) {
    for (int n : {2, 5, 10, 40}) {
        const FixedPointResult r = bernopt_equal(n, 1);
        EXPECT_THAT(r.alpha, DoubleNear(0.5, 1e-9)) << n;
        EXPECT_THAT(r.parameter, DoubleNear(1.0 - std::pow(2.0, -1.0 / (n - 1)), 1e-9)) << n;
        EXPECT_LE(r.residual, 1e-10);
    }
}

TEST(BernOpt, MatchesGridScan) {
    for (auto [n, k] : {std::pair{3, 2}, std::pair{6, 2}, std::pair{9, 4}, std::pair{20, 5}}) {
        const double alpha = bernopt_equal(n, k).alpha;
        const double scan = crossing_scan(n, k, 10'000);
        EXPECT_GE(alpha, scan - 1e-12) << n << "," << k;
        EXPECT_LE(alpha - scan, 1e-3) << n << "," << k;
    }
}

TEST(BernOpt, GrowsWithSlotsAtFixedRatio) {
    double prev = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const double alpha = bernopt_equal(10 * k, k).alpha;
        EXPECT_GE(alpha, prev - 1e-12) << k;
        prev = alpha;
    }
}

TEST(BernOpt, RejectsDegenerateSizes) {
    EXPECT_THROW(bernopt_equal(2, 2), DomainError);
    EXPECT_THROW(bernopt_equal(5, 0), DomainError);
}

TEST(PoissonFixedPoint, SingleSlot) {
    const FixedPointResult r = poisson_fixed_point(1);
    EXPECT_THAT(r.parameter, DoubleNear(std::numbers::ln2, 1e-9));
    EXPECT_THAT(r.alpha, DoubleNear(0.5, 1e-9));
}

TEST(PoissonFixedPoint, ResidualAndOracle) {
    for (int k : {2, 3, 7, 20, 60}) {
        const FixedPointResult r = poisson_fixed_point(k);
        EXPECT_LE(r.residual, 1e-10) << k;
        const long double avail = 1.0L - (oracle::poisson_min_k(r.parameter, k) - oracle::poisson_min_k(r.parameter, k - 1));
        EXPECT_THAT(r.alpha, DoubleNear(static_cast<double>(avail), 1e-9)) << k;
    }
}

TEST(PoissonFixedPoint, LimitOfFiniteCrossings) {
    for (int k : {1, 2, 4, 8}) {
        const double limit = poisson_fixed_point(k).alpha;
        EXPECT_GE(bernopt_equal(50 * k, k).alpha, limit - 1e-9) << k;
        EXPECT_NEAR(bernopt_equal(2000 * k, k).alpha, limit, 1e-3) << k;
    }
    EXPECT_GT(poisson_fixed_point(1000).alpha, 0.9);
}

TEST(RateTable, ScaledGapStaysInBand) {
    const std::vector<int> ks{10, 100, 1000, 10'000};
    const std::vector<RateRow> rows = rate_table(ks, 2);
    ASSERT_EQ(rows.size(), ks.size());
    for (std::size_t c = 1; c < rows.size(); ++c) {
        EXPECT_LT(1.0 - rows[c].alpha, 1.0 - rows[c - 1].alpha);
    }
    const Band band = scaled_gap_band(rows);
    EXPECT_GT(band.low, 0.0);
    EXPECT_LE(band.high / band.low, 3.0);
}

TEST(RateTable, CsvLayout) {
    const std::vector<int> ks{2, 3};
    const std::string csv = rate_table_csv(rate_table(ks));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,lambda_k,alpha_k,scaled_gap,certified");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_NE(csv.find("\n2,"), std::string::npos);
    EXPECT_EQ(csv.find("uncertified"), std::string::npos);
    EXPECT_THROW(rate_table(std::vector<int>{1}), DomainError);
}

TEST(WorstCase, OneTypeInstanceAttainsCrossing) {
    for (auto [n, k] : {std::pair{4, 1}, std::pair{5, 2}, std::pair{6, 3}}) {
        const TypeDistributions g = one_type_instance(n, 1e-9);
        const double alpha = bernopt_equal(n, k).alpha;
        EXPECT_NEAR(dual_value(g, k, PolicyClass::OST, Benchmark::Proph), alpha, 1e-6) << n << "," << k;
        EXPECT_NEAR(dual_value(g, k, PolicyClass::ST, Benchmark::Proph), alpha, 1e-6) << n << "," << k;
    }
}

TEST(WorstCase, SingleSlotSearchFindsOneHalf) {
    const SearchOptions options = quick_search();
    const SearchResult ost = worst_case_search(3, 1, PolicyClass::OST, Benchmark::Proph, options);
    EXPECT_NEAR(ost.theta, 0.5, 0.02);
    EXPECT_GE(ost.theta, 0.5 - 1e-9);
    EXPECT_NEAR(dual_value(ost.g, 1, PolicyClass::OST, Benchmark::Proph), ost.theta, 1e-12);
    const SearchResult dp = worst_case_search(2, 1, PolicyClass::DP, Benchmark::Proph, options);
    EXPECT_NEAR(dp.theta, 0.5, 0.02);
    EXPECT_LE(dp.evaluations, options.budget + 1);
}

TEST(WorstCase, ThresholdSearchRespectsCrossingBound) {
    const SearchOptions options = quick_search();
    for (PolicyClass p : {PolicyClass::OST, PolicyClass::ST}) {
        const SearchResult r = worst_case_search(4, 2, p, Benchmark::Proph, options);
        EXPECT_GE(r.theta, bernopt_equal(4, 2).alpha - 1e-6);
        EXPECT_LE(r.theta, bernopt_equal(4, 2).alpha + 0.05);
    }
}

TEST(WorstCase, AllAgentsFitIsPerfect) {
    const SearchResult r = worst_case_search(2, 2, PolicyClass::DP, Benchmark::Proph);
    EXPECT_DOUBLE_EQ(r.theta, 1.0);
    EXPECT_FALSE(r.exhausted);
}

TEST(WorstCase, ResultIndependentOfThreadCount) {
    SearchOptions one = quick_search();
    one.budget = 800;
    one.jobs = 1;
    SearchOptions four = one;
    four.jobs = 4;
    const SearchResult a = worst_case_search(3, 1, PolicyClass::ST, Benchmark::ExAnte, one);
    const SearchResult b = worst_case_search(3, 1, PolicyClass::ST, Benchmark::ExAnte, four);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.evaluations, b.evaluations);
    EXPECT_EQ(a.g.matrix(), b.g.matrix());
}

TEST(WorstCase, RejectsOversizedSearches) {
    EXPECT_THROW(worst_case_search(7, 1, PolicyClass::DP, Benchmark::Proph), DomainError);
    SearchOptions bad;
    bad.step = 0.3;
    EXPECT_THROW(worst_case_search(3, 1, PolicyClass::DP, Benchmark::Proph, bad), DomainError);
}
