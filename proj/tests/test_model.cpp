#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "prophetlab/errors.hpp"
#include "prophetlab/model.hpp"

using namespace prophetlab;
using namespace prophetlab::model;
using ::testing::DoubleNear;
using ::testing::HasSubstr;

namespace {

// k=1, two agents: agent 1 is surely the middle type, agent 2 is the top or bottom type.
Instance two_agent_instance() {
    return {1, {2.0, 1.0, 0.0}, Matrix::from_rows({{0.0, 1.0, 0.0}, {0.5, 0.0, 0.5}})};
}

Instance with_extra_zero_type(const Instance& inst) {
    std::vector<double> values = inst.values();
    values.push_back(0.0);
    Matrix p(inst.n(), inst.m() + 1);
    for (int i = 0; i < inst.n(); ++i) {
        for (int j = 0; j < inst.m(); ++j) p(i, j) = inst.probs()(i, j);
    }
    return {inst.k(), values, p};
}

Instance scaled(const Instance& inst, double c) {
    std::vector<double> values = inst.values();
    for (double& v : values) v *= c;
    return {inst.k(), values, inst.probs()};
}

}  // namespace

TEST(Benchmarks, TwoAgentReferenceValues) {
    const Instance inst = two_agent_instance();
    EXPECT_THAT(proph_value(inst), DoubleNear(1.5, 1e-15));
    EXPECT_THAT(proph_value_bruteforce(inst), DoubleNear(1.5, 1e-15));
    EXPECT_THAT(exante_value(inst), DoubleNear(1.5, 1e-15));
    EXPECT_THAT(dp_value(inst), DoubleNear(1.0, 1e-15));
    EXPECT_THAT(st_value(inst, {1, 1.0}), DoubleNear(1.0, 1e-15));
    EXPECT_THAT(best_st(inst).value, DoubleNear(1.0, 1e-12));
}

TEST(Benchmarks, SingleAgentAndLargeCapacity) {
    const Instance one{2, {5.0, 3.0, 1.0}, Matrix::from_rows({{0.2, 0.3, 0.5}})};
    const double mean = 0.2 * 5 + 0.3 * 3 + 0.5 * 1;
    EXPECT_THAT(proph_value(one), DoubleNear(mean, 1e-15));
    EXPECT_THAT(dp_value(one), DoubleNear(mean, 1e-15));
    EXPECT_THAT(exante_value(Instance(1, {5.0}, Matrix::from_rows({{1.0}}))), DoubleNear(5.0, 1e-15));

    const Instance all_one{5, {1.0}, Matrix(4, 1, 1.0)};
    EXPECT_THAT(proph_value(all_one), DoubleNear(4.0, 1e-15));
    EXPECT_THAT(dp_value(all_one), DoubleNear(4.0, 1e-15));
    EXPECT_THAT(st_value(all_one, {0, 1.0}), DoubleNear(4.0, 1e-15));
    EXPECT_THAT(exante_value(Instance(2, {1.0}, Matrix(4, 1, 1.0))), DoubleNear(2.0, 1e-15));
}

TEST(Benchmarks, DpAcceptsEverythingWithSpareSlots) {
    const Instance inst{3, {4.0, 2.0, 1.0}, Matrix::from_rows({{0.1, 0.2, 0.7}, {0.5, 0.5, 0.0}, {0.3, 0.3, 0.4}})};
    double total = 0.0;
    for (int i = 0; i < inst.n(); ++i) total += inst.expected_value(i);
    EXPECT_THAT(dp_value(inst), DoubleNear(total, 1e-14));
    EXPECT_THAT(st_value(inst, {2, 1.0}), DoubleNear(total, 1e-14));
}

TEST(StaticThreshold, NothingClearsAnEmptyTopType) {
    const Instance inst{1, {3.0, 1.0}, Matrix::from_rows({{0.0, 1.0}, {0.0, 1.0}})};
    EXPECT_EQ(st_value(inst, {0, 1.0}), 0.0);
    EXPECT_EQ(simulate_policy(inst, StaticThreshold{0, 1.0}, 1000, 1).mean, 0.0);
}

TEST(StaticThreshold, BestRuleAcceptsDominantFirstAgent) {
    const Instance inst{1, {10.0, 1.0}, Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}})};
    const ThresholdChoice best = best_st(inst);
    EXPECT_THAT(best.value, DoubleNear(10.0, 1e-12));
    const auto tau = acceptance_probabilities(TypeDistributions::from_instance(inst), best.rule);
    EXPECT_THAT(tau[0], DoubleNear(1.0, 1e-12));
    EXPECT_THAT(st_value(inst, best.rule), DoubleNear(best.value, 1e-9));
}

TEST(StaticThreshold, SingleTypeOptimizesRho) {
    const Instance inst{1, {1.0}, Matrix(3, 1, 1.0)};
    const ThresholdChoice best = best_st(inst);
    EXPECT_EQ(best.rule.type, 0);
    EXPECT_THAT(best.value, DoubleNear(1.0, 1e-9));
}

TEST(Properties, OrderingChainOnRandomInstances) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 100; ++t) {
        const Instance inst = gen::random_instance(rng, 6, 4, 3);
        const double ea = exante_value(inst);
        const double pr = proph_value(inst);
        const double dp = dp_value(inst);
        const ThresholdChoice st = best_st(inst);
        EXPECT_GE(ea - pr, -1e-9);
        EXPECT_GE(pr - dp, -1e-9);
        EXPECT_GE(dp - st.value, -1e-9);
        EXPECT_THAT(st_value(inst, st.rule), DoubleNear(st.value, 1e-9));
    }
}

TEST(Properties, ProphetMatchesBruteForce) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 60; ++t) {
        const Instance inst = gen::random_instance(rng, 6, 4, 3);
        EXPECT_THAT(proph_value(inst), DoubleNear(proph_value_bruteforce(inst), 1e-10));
    }
}

TEST(Properties, BruteForceSizeLimit) {
    const Instance inst{1, {1.0, 0.0}, Matrix(21, 2, 0.5)};
    EXPECT_THROW(proph_value_bruteforce(inst), SizeLimit);
}

TEST(Properties, ScalingValues) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const Instance inst = gen::random_instance(rng, 5, 4, 3);
        const Instance big = scaled(inst, 3.5);
        const auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        EXPECT_TRUE(rel(proph_value(big), 3.5 * proph_value(inst)));
        EXPECT_TRUE(rel(exante_value(big), 3.5 * exante_value(inst)));
        EXPECT_TRUE(rel(dp_value(big), 3.5 * dp_value(inst)));
        const ThresholdChoice a = best_st(inst);
        const ThresholdChoice b = best_st(big);
        EXPECT_TRUE(rel(b.value, 3.5 * a.value));
        EXPECT_EQ(a.rule.type, b.rule.type);
        EXPECT_NEAR(a.rule.rho, b.rule.rho, 1e-6);
    }
}

TEST(Properties, ZeroProbabilityTypeIsInert) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        const Instance inst = gen::random_instance(rng, 5, 3, 3);
        const Instance wider = with_extra_zero_type(inst);
        EXPECT_NEAR(proph_value(wider), proph_value(inst), 1e-12);
        EXPECT_NEAR(exante_value(wider), exante_value(inst), 1e-12);
        EXPECT_NEAR(dp_value(wider), dp_value(inst), 1e-12);
        EXPECT_NEAR(best_st(wider).value, best_st(inst).value, 1e-12);
    }
}

TEST(MonteCarlo, DpPolicyOnTwoAgentInstance) {
    const Instance inst = two_agent_instance();
    const MonteCarloEstimate est = simulate_policy(inst, dp_policy(inst), 1'000'000, 42);
    EXPECT_NEAR(est.mean, 1.0, 0.004);
}

TEST(MonteCarlo, AgreesWithExactValues) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 4; ++t) {
        const Instance inst = gen::random_instance(rng, 6, 4, 3);
        const auto dp = simulate_policy(inst, dp_policy(inst), 100'000, 1000 + static_cast<unsigned>(t));
        EXPECT_LE(std::abs(dp.mean - dp_value(inst)), 4 * dp.std_error + 1e-12);
        const StaticThreshold rule = best_st(inst).rule;
        const auto st = simulate_policy(inst, rule, 100'000, 2000 + static_cast<unsigned>(t));
        EXPECT_LE(std::abs(st.mean - st_value(inst, rule)), 4 * st.std_error + 1e-12);
    }
}

TEST(MonteCarlo, ReproducibleAndDeterministic) {
    const Instance inst = two_agent_instance();
    const auto a = simulate_policy(inst, StaticThreshold{1, 0.5}, 5000, 9);
    const auto b = simulate_policy(inst, StaticThreshold{1, 0.5}, 5000, 9);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    const Instance fixed{1, {2.0}, Matrix(3, 1, 1.0)};
    const auto det = simulate_policy(fixed, dp_policy(fixed), 1000, 3);
    EXPECT_EQ(det.mean, 2.0);
    EXPECT_EQ(det.std_error, 0.0);
}

TEST(InstanceJson, RoundTrip) {
    std::mt19937_64 rng(4);
    const Instance inst = gen::random_instance(rng, 5, 4, 3);
    const Instance back = parse_instance_json(instance_to_json(inst));
    EXPECT_EQ(back.probs(), inst.probs());
    EXPECT_EQ(back.values(), inst.values());
    EXPECT_EQ(back.k(), inst.k());
}

TEST(InstanceJson, ReportsOffendingEntry) {
    const auto message = [](const std::string& text) {
        try {
            parse_instance_json(text);
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_THAT(message(R"({"k":1,"n":2,"m":2,"values":[1,0],"probs":[[0.5,0.5],[0.7,0.7]]})"),
                HasSubstr("row 1"));
    EXPECT_THAT(message(R"({"k":1,"n":1,"m":2,"values":[1,0],"probs":[[1.5,-0.5]]})"), HasSubstr("probs[0][0]"));
    EXPECT_THAT(message(R"({"k":1,"n":1,"m":2,"values":[0,1],"probs":[[0.5,0.5]]})"), HasSubstr("nonincreasing"));
    EXPECT_THAT(message(R"({"k":1,"n":2,"m":2,"values":[1,0],"probs":[[0.5,0.5]]})"), HasSubstr("2 rows"));
    EXPECT_THAT(message(R"({"k":1,"n":1,"values":[1],"probs":[[1]]})"), HasSubstr("\"m\""));
    EXPECT_THAT(message("{not json"), HasSubstr("malformed"));
    EXPECT_THROW(load_instance("/nonexistent/instance.json"), ValidationError);
}

TEST(GJson, ValidatesRows) {
    const GFile f = parse_g_json(R"({"k":2,"n":2,"m":2,"G":[[0.25,1],[0,1]]})");
    EXPECT_EQ(f.k, 2);
    EXPECT_EQ(f.g.n(), 2);
    EXPECT_THAT(f.g.prob(0, 1), DoubleNear(0.75, 1e-15));
    EXPECT_THROW(parse_g_json(R"({"k":1,"n":1,"m":2,"G":[[0.5,0.9]]})"), ValidationError);
    EXPECT_THROW(parse_g_json(R"({"k":1,"n":1,"m":2,"G":[[0.6,0.5]]})"), ValidationError);
}
