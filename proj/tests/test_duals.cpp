#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <random>

#include "generators.hpp"
#include "prophetlab/duals.hpp"
#include "prophetlab/errors.hpp"
#include "prophetlab/numerics.hpp"

using namespace prophetlab;
using namespace prophetlab::duals;
using ::testing::DoubleNear;

namespace {

constexpr Benchmark kBoth[] = {Benchmark::Proph, Benchmark::ExAnte};

TypeDistributions from_rows(std::initializer_list<std::vector<double>> rows) {
    return TypeDistributions(Matrix::from_rows(rows));
}

// Two agents where mixing thresholds beats any single one as eps -> 0.
TypeDistributions separation_instance(double eps) {
    return from_rows({{0.0, 0.5, 0.5, 1.0}, {eps, eps, 1.0, 1.0}});
}

// n-1 agents surely of the middle type, then one agent of the top type with probability eps.
TypeDistributions lifted_one_type(int n, double eps) {
    Matrix g(n, 3);
    for (int i = 0; i + 1 < n; ++i) {
        g(i, 1) = 1.0;
        g(i, 2) = 1.0;
    }
    g(n - 1, 0) = eps;
    g(n - 1, 1) = eps;
    g(n - 1, 2) = 1.0;
    return TypeDistributions(g);
}

TypeDistributions iid(int n, std::span<const double> row) {
    Matrix g(n, static_cast<int>(row.size()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < g.cols(); ++j) g(i, j) = row[static_cast<std::size_t>(j)];
    }
    return TypeDistributions(g);
}

// Crossing value of availability and fill rate for n-1 agents accepted at rate rho.
double crossing_value(int n, int k, double rho) {
    return std::min(numerics::binom_cdf_lt(n - 1, rho, k), numerics::binom_min_k_expect(n - 1, rho, k) / k);
}

double benchmark_value(const model::Instance& inst, Benchmark b) {
    return b == Benchmark::Proph ? model::proph_value(inst) : model::exante_value(inst);
}

}  // namespace

TEST(CoverageTargets, ReferenceValues) {
    const TypeDistributions all_one(Matrix(3, 1, 1.0));
    EXPECT_THAT(coverage_targets(all_one, 1, Benchmark::Proph).q[0], DoubleNear(1.0, 1e-15));
    EXPECT_THAT(coverage_targets(all_one, 2, Benchmark::ExAnte).q[0], DoubleNear(2.0, 1e-15));

    const double eps = 1e-4;
    const CoverageTargets q = coverage_targets(separation_instance(eps), 1, Benchmark::Proph);
    EXPECT_THAT(q.q[0], DoubleNear(eps, 1e-12));
    EXPECT_THAT(q.q[1], DoubleNear(0.5, 2 * eps));
    EXPECT_THAT(q.q[2], DoubleNear(1.0, 1e-15));
    EXPECT_THAT(q.q[3], DoubleNear(1.0, 1e-15));
}

TEST(CoverageTargets, MonotoneAndCapped) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const TypeDistributions g = gen::random_g(rng, 5, 4);
        for (Benchmark b : kBoth) {
            const CoverageTargets q = coverage_targets(g, 2, b);
            for (std::size_t j = 0; j < q.q.size(); ++j) {
                EXPECT_LE(q.q[j], 2.0);
                if (j > 0) EXPECT_GE(q.q[j], q.q[j - 1]);
            }
        }
    }
}

TEST(InnerDual, AcceptAllCoversEverything) {
    for (Benchmark b : kBoth) {
        EXPECT_THAT(inner_dual_dp(TypeDistributions(Matrix(4, 1, 1.0)), 2, b).theta, DoubleNear(1.0, 1e-9));
        EXPECT_THAT(inner_dual_dp(from_rows({{0.3, 1.0}, {0.6, 1.0}}), 2, b).theta, DoubleNear(1.0, 1e-9));
    }
}

TEST(InnerDual, CertificateIsFeasible) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const TypeDistributions g = gen::random_g(rng, 1 + static_cast<int>(rng() % 5), 3);
        const int k = 1 + static_cast<int>(rng() % 2);
        for (Benchmark b : kBoth) {
            const DualResult r = inner_dual_dp(g, k, b);
            EXPECT_LE(r.certificate.polytope_residual(), 1e-9);
            EXPECT_LE(coverage_violation(r.certificate, g, coverage_targets(g, k, b)), 1e-8);
        }
    }
}

TEST(InnerDual, StrongDualityAndRealizability) {
    std::mt19937_64 rng(2025);
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 3);
        const int k = 1 + static_cast<int>(rng() % 2);
        const TypeDistributions g = gen::random_g(rng, n, m);
        for (Benchmark b : kBoth) {
            const double dual = inner_dual_dp(g, k, b).theta;
            const PrimalInnerSolution primal = primal_inner_dp(g, k, b);
            EXPECT_THAT(primal.objective, DoubleNear(dual, 1e-7));
            double normalization = 0.0;
            const CoverageTargets q = coverage_targets(g, k, b);
            for (int j = 0; j < m; ++j) normalization += q.q[static_cast<std::size_t>(j)] * primal.gains[static_cast<std::size_t>(j)];
            EXPECT_THAT(normalization, DoubleNear(1.0, 1e-9));
            const model::Instance inst = instance_from_gains(g, k, primal.gains);
            EXPECT_THAT(model::dp_value(inst) / benchmark_value(inst, b), DoubleNear(dual, 1e-6));
        }
    }
}

TEST(InnerDual, ClassicalTwoPointFamily) {
    // Agent 1 is surely mid-valued; agent 2 is rarely the top type and otherwise worthless.
    const TypeDistributions g = from_rows({{0.0, 1.0, 1.0}, {1e-3, 1e-3, 1.0}});
    EXPECT_THAT(primal_inner_dp(from_rows({{0.0, 1.0}, {1e-3, 1.0}}), 1, Benchmark::Proph).objective,
                DoubleNear(1.0, 1e-9));
    const PrimalInnerSolution p = primal_inner_dp(g, 1, Benchmark::Proph);
    EXPECT_LT(p.objective, 0.51);
    EXPECT_GT(p.objective, 0.49);
}

TEST(InnerDual, ExAnteNeverAboveProph) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const TypeDistributions g = gen::random_g(rng, 4, 3);
        const int k = 1 + static_cast<int>(rng() % 2);
        EXPECT_LE(inner_dual_dp(g, k, Benchmark::ExAnte).theta, inner_dual_dp(g, k, Benchmark::Proph).theta + 1e-8);
        EXPECT_LE(ost_best(g, k, Benchmark::ExAnte).theta, ost_best(g, k, Benchmark::Proph).theta + 1e-8);
        EXPECT_LE(st_mixture_theta(g, k, Benchmark::ExAnte).theta,
                  st_mixture_theta(g, k, Benchmark::Proph).theta + 1e-8);
    }
}

TEST(ThresholdDual, ClosedFormMatchesRestrictedLp) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 3);
        const int k = 1 + static_cast<int>(rng() % 3);
        const TypeDistributions g = gen::random_g(rng, n, m);
        const StaticThreshold rule{static_cast<int>(rng() % static_cast<unsigned>(m)), 0.05 + 0.95 * u(rng)};
        for (Benchmark b : kBoth) {
            const double closed = ost_theta(g, k, rule, b);
            EXPECT_THAT(closed, DoubleNear(inner_dual_ost_lp(g, k, b, rule).theta, 1e-9));
            EXPECT_LE(closed, inner_dual_dp(g, k, b).theta + 1e-8);
        }
    }
}

TEST(ThresholdDual, SlotDistributionIdentities) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const int m = 1 + static_cast<int>(rng() % 4);
        const int k = 1 + static_cast<int>(rng() % 3);
        const TypeDistributions g = gen::random_g(rng, n, m);
        const StaticThreshold rule{static_cast<int>(rng() % static_cast<unsigned>(m)), 0.01 + 0.99 * u(rng)};
        const DualSolution cert = ost_certificate(g, k, rule);
        EXPECT_LE(cert.polytope_residual(), 1e-12);
        const std::vector<double> tau = model::acceptance_probabilities(g, rule);
        double filled = 0.0;
        for (int i = 0; i < n; ++i) {
            double avail = 0.0;
            for (int l = 0; l < k; ++l) avail += cert.x(i, l);
            const std::span<const double> before(tau.data(), static_cast<std::size_t>(i));
            EXPECT_THAT(avail, DoubleNear(numerics::poisbin_cdf_lt(numerics::ProbVector({before.begin(), before.end()}), k), 1e-10));
            filled += tau[static_cast<std::size_t>(i)] * avail;
            const std::span<const double> upto(tau.data(), static_cast<std::size_t>(i + 1));
            EXPECT_THAT(filled, DoubleNear(numerics::poisbin_min_k_expect(numerics::ProbVector({upto.begin(), upto.end()}), k), 1e-10));
        }
    }
}

TEST(ThresholdDual, SeparationInstanceCapsSingleThreshold) {
    const double eps = 1e-4;
    const TypeDistributions g = separation_instance(eps);
    for (Benchmark b : kBoth) {
        for (int type = 0; type < 4; ++type) {
            for (double rho : {0.1, 0.5, 0.9, 1.0}) {
                EXPECT_LE(ost_theta(g, 1, {type, rho}, b), 0.5 + 5 * eps);
            }
        }
        EXPECT_LE(ost_best(g, 1, b).theta, 0.501);
        EXPECT_GE(st_mixture_theta(g, 1, b, 101).theta, 0.666);
    }
}

TEST(ThresholdDual, FullAcceptanceOnOneSureType) {
    // Every agent has the only type; accepting all fills the k slots the benchmark fills.
    const TypeDistributions g(Matrix(5, 1, 1.0));
    EXPECT_THAT(ost_theta(g, 2, {0, 1.0}, Benchmark::Proph), DoubleNear(1.0, 1e-12));
}

TEST(ThresholdDual, IidFairShareRate) {
    for (auto [n, k] : {std::pair{4, 2}, std::pair{10, 3}, std::pair{20, 1}}) {
        const double tau = static_cast<double>(k) / n;
        const double expected = numerics::binom_min_k_expect(n, tau, k) / k;
        // Two types: a rare one (probability 1e-9) and everything else.
        const std::vector<double> row{1e-9, 1.0};
        const TypeDistributions g = iid(n, row);
        const StaticThreshold rule{1, (tau - 1e-9) / (1.0 - 1e-9)};
        EXPECT_THAT(ost_theta(g, k, rule, Benchmark::Proph), DoubleNear(expected, 1e-6));
    }
}

TEST(ThresholdDual, IidUniformGridPicksFairShare) {
    const int m = 100;
    std::vector<double> row(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) row[static_cast<std::size_t>(j)] = (j + 1.0) / m;
    for (auto [n, k] : {std::pair{10, 2}, std::pair{8, 1}}) {
        const TypeDistributions g = iid(n, row);
        const OstChoice best = ost_best(g, k, Benchmark::Proph);
        const double tau = model::acceptance_probabilities(g, best.rule)[0];
        EXPECT_NEAR(tau, static_cast<double>(k) / n, 0.02);
    }
}

TEST(ThresholdDual, OneTypeCrossingValue) {
    for (auto [n, k] : {std::pair{2, 1}, std::pair{5, 1}, std::pair{6, 2}, std::pair{8, 3}}) {
        const TypeDistributions g = lifted_one_type(n, 1e-10);
        const OstChoice best = ost_best(g, k, Benchmark::Proph);
        EXPECT_EQ(best.rule.type, 1);
        EXPECT_THAT(best.theta, DoubleNear(crossing_value(n, k, best.rule.rho), 1e-8));
    }
}

TEST(Mixture, HierarchyOnRandomG) {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 25; ++t) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int k = 1 + static_cast<int>(rng() % 2);
        const TypeDistributions g = gen::random_g(rng, n, 3);
        for (Benchmark b : kBoth) {
            const double dp = inner_dual_dp(g, k, b).theta;
            const MixtureResult mix = st_mixture_theta(g, k, b);
            const double ost = ost_best(g, k, b).theta;
            EXPECT_GE(dp - mix.theta, -1e-8);
            EXPECT_GE(mix.theta - ost, -1e-9);
            double mass = 0.0;
            for (const MixtureComponent& c : mix.support) mass += c.weight;
            EXPECT_THAT(mass, DoubleNear(1.0, 1e-9));
        }
    }
}

TEST(Mixture, NoGainOnOneTypeInstances) {
    for (auto [n, k] : {std::pair{5, 1}, std::pair{8, 2}, std::pair{10, 3}}) {
        const TypeDistributions g = lifted_one_type(n, 1e-7);
        for (Benchmark b : kBoth) {
            EXPECT_NEAR(st_mixture_theta(g, k, b).theta, ost_best(g, k, b).theta, 1e-6);
        }
    }
}

TEST(Mixture, NoGainOnIidInstances) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 10; ++t) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int k = 1 + static_cast<int>(rng() % 2);
        const TypeDistributions one = gen::random_g(rng, 1, 3);
        const std::vector<double> row{one(0, 0), one(0, 1), one(0, 2)};
        const TypeDistributions g = iid(n, row);
        for (Benchmark b : kBoth) {
            EXPECT_NEAR(st_mixture_theta(g, k, b).theta, ost_best(g, k, b).theta, 1e-6);
        }
    }
}

TEST(Ocrs, ReferenceValues) {
    EXPECT_THAT(ocrs_value(std::vector<double>{0.5, 0.5}, 1).theta, DoubleNear(2.0 / 3.0, 1e-8));
    EXPECT_THAT(ocrs_value(std::vector<double>{1.0, 0.0, 0.0}, 1).theta, DoubleNear(1.0, 1e-9));
    EXPECT_THAT(ocrs_value(std::vector<double>{1.0, 1.0, 1.0}, 3).theta, DoubleNear(1.0, 1e-9));
    EXPECT_THROW(ocrs_value(std::vector<double>{0.7, 0.7}, 1), DomainError);
}

TEST(Ocrs, TwoAgentFormula) {
    for (double g1 : {0.2, 0.5, 0.8}) {
        const double g2 = 1.0 - g1;
        EXPECT_THAT(ocrs_value(std::vector<double>{g1, g2}, 1).theta, DoubleNear(1.0 / (1.0 + g1), 1e-8));
    }
}

TEST(Ocrs, WorstMarginals) {
    const OcrsSearchResult two = ocrs_worst_g(2, 1, 0.01);
    EXPECT_FALSE(two.exhausted);
    EXPECT_GE(two.theta, 0.50);
    EXPECT_LE(two.theta, 0.51);
    EXPECT_NEAR(two.marginals[0], 0.99, 1e-9);
    EXPECT_NEAR(two.marginals[1], 0.01, 1e-9);
    EXPECT_THAT(ocrs_worst_g(1, 1, 0.1).theta, DoubleNear(1.0, 1e-9));
    EXPECT_GE(ocrs_worst_g(3, 1, 0.05).theta, 0.5 - 1e-9);
    const OcrsSearchResult capped = ocrs_worst_g(3, 1, 0.05, 50);
    EXPECT_TRUE(capped.exhausted);
    EXPECT_EQ(capped.evaluations, 50);
}

TEST(Report, JsonCarriesCertificate) {
    const TypeDistributions g = from_rows({{0.2, 1.0}, {0.4, 1.0}, {0.1, 1.0}});
    for (PolicyClass p : {PolicyClass::DP, PolicyClass::ST, PolicyClass::OST}) {
        const GuaranteeReport r = guarantee_report(g, 1, p, Benchmark::Proph);
        const auto doc = nlohmann::json::parse(to_json(r));
        EXPECT_EQ(doc["policy"], to_string(p));
        EXPECT_EQ(doc["benchmark"], "proph");
        EXPECT_NEAR(doc["theta"].get<double>(), r.theta, 1e-15);
        EXPECT_EQ(doc.contains("certificate"), p != PolicyClass::ST);
        EXPECT_LE(r.coverage_residual, 1e-8);
        EXPECT_LE(r.polytope_residual, 1e-9);
    }
    EXPECT_EQ(parse_policy("OST"), PolicyClass::OST);
    EXPECT_EQ(parse_benchmark("ExAnte"), Benchmark::ExAnte);
    EXPECT_THROW(parse_policy("greedy"), ValidationError);
}
