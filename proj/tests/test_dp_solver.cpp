#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "platoon/dp_solver.hpp"

using namespace platoon;

namespace {

const ModelParams balanced{0.5, 0.5, 10, 0.999};
const ModelParams frequent{0.4, 0.8, 5, 0.999};
const ModelParams costly{0.45, 0.65, 20, 0.999};

DiscountedSolution solve(const ModelParams& params, int x_max = 200, double tol = 1e-6) {
    return value_iterate_discounted(params, TruncationConfig{x_max, 10}, tol);
}

} // namespace

TEST(FiniteHorizon, FirstStageFromEmptyStation) {
    const auto sol = value_iterate_finite({0.5, 0.5, 10, 0.99}, 1, {50, 10});
    ASSERT_EQ(sol.values.size(), 1u);
    // Only TruckOnly leaves a held truck (cost 1); Both is a free platoon dispatch.
    EXPECT_NEAR(sol.values[0].values[0], 0.5 * 0.5 * 1.0, 1e-15);
}

TEST(FiniteHorizon, FirstStageJoinsEveryPlatoon) {
    for (double kappa : {1.5, 5.0, 20.0}) {
        const auto sol = value_iterate_finite({0.3, 0.6, kappa, 0.9}, 1, {40, 10});
        const auto& pol = sol.policies[0];
        EXPECT_EQ(pol.with_platoon[0], Action::Hold);
        for (int y = 1; y <= pol.x_max(); ++y) EXPECT_EQ(pol.with_platoon[y], Action::Dispatch) << y;
    }
}

TEST(FiniteHorizon, SmallSurchargeDispatchesEverywhere) {
    const auto sol = value_iterate_finite({0.5, 0.5, 0.5, 0.99}, 25, {60, 10});
    for (const auto& pol : sol.policies) {
        for (int y = 1; y <= pol.x_max(); ++y) {
            EXPECT_EQ(pol.with_platoon[y], Action::Dispatch);
            EXPECT_EQ(pol.without_platoon[y], Action::Dispatch);
        }
        EXPECT_EQ(extract_threshold(pol).threshold, 0);
    }
    EXPECT_TRUE(sol.truncation_reliable);
}

TEST(FiniteHorizon, MatchesUntruncatedRecursionBelowTheCap) {
    const ModelParams params{0.45, 0.65, 20, 0.95};
    const int x_max = 40;
    const auto sol = value_iterate_finite(params, 12, {x_max, 10});
    oracle::UntruncatedDp ref(params.p, params.q, params.kappa, params.beta);
    for (const auto& table : sol.values) {
        const int k = static_cast<int>(table.iterations);
        EXPECT_EQ(table.exact_upto, x_max - k);
        for (int x = 0; x <= table.exact_upto; ++x)
            EXPECT_NEAR(table.values[x], ref.value(k, x), 1e-9 * (1 + std::abs(table.values[x]))) << k << ' ' << x;
    }
}

TEST(FiniteHorizon, EarlyStagesFlagTruncation) {
    // With kappa > 1 the one-stage policy never dispatches without a platoon.
    const auto sol = value_iterate_finite(balanced, 3, {50, 10});
    EXPECT_FALSE(sol.truncation_reliable);
    EXPECT_EQ(extract_threshold(sol.policies[0]).threshold, 50);
}

TEST(FiniteHorizon, RejectsBadInput) {
    EXPECT_THROW(value_iterate_finite(balanced, 0, {50, 10}), ValidationError);
    EXPECT_THROW(value_iterate_finite(balanced, 3, {1, 10}), ValidationError);
    EXPECT_THROW(value_iterate_finite({1.0, 0.5, 1, 0.9}, 3, {10, 1}), ValidationError);
}

TEST(Discounted, ScenarioThresholds) {
    EXPECT_EQ(extract_threshold(solve(balanced).policy).threshold, 1);
    EXPECT_EQ(extract_threshold(solve(frequent).policy).threshold, 2);
    EXPECT_EQ(extract_threshold(solve(costly).policy).threshold, 4);
}

TEST(Discounted, SmallSurchargeGivesZeroThreshold) {
    for (const ModelParams params : {ModelParams{0.5, 0.5, 0.5, 0.999}, ModelParams{0.8, 0.2, 0.9, 0.99},
                                     ModelParams{0.2, 0.8, 0.0, 0.9}}) {
        const auto sol = solve(params, 80);
        EXPECT_EQ(extract_threshold(sol.policy).threshold, 0);
        EXPECT_TRUE(sol.truncation_reliable);
    }
}

TEST(Discounted, StopsWithinTolerance) {
    const auto sol = solve(balanced, 100, 1e-6);
    EXPECT_LT(sol.residual, 1e-6 * (1 - balanced.beta) / (2 * balanced.beta));
    EXPECT_GT(sol.values.iterations, 1);
    EXPECT_TRUE(sol.truncation_reliable);
}

TEST(Discounted, SweepCapRaisesConvergenceError) {
    try {
        value_iterate_discounted(balanced, {100, 10}, 1e-6, 5);
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.sweeps(), 5);
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(Discounted, RejectsNonPositiveTolerance) {
    EXPECT_THROW(value_iterate_discounted(balanced, {100, 10}, 0.0), ValidationError);
    EXPECT_THROW(value_iterate_discounted(balanced, {100, 10}, -1.0), ValidationError);
}

TEST(Discounted, DoublingTruncationChangesNothing) {
    for (const auto& params : {balanced, frequent, costly}) {
        const auto a = solve(params, 200, 1e-8);
        const auto b = solve(params, 400, 1e-8);
        EXPECT_EQ(extract_threshold(a.policy).threshold, extract_threshold(b.policy).threshold);
        for (int x = 0; x <= 50; ++x) EXPECT_NEAR(a.values.values[x], b.values.values[x], 1e-6) << x;
    }
}

TEST(QDifference, SignTestReproducesPolicy) {
    for (const auto& params : {balanced, frequent, costly}) {
        const auto sol = solve(params);
        const double bound = hold_bound(params);
        for (int x = 1; x <= sol.values.x_max() - 1; ++x) {
            const double d = q_difference(sol.values, x, params);
            const Action expected = d <= bound ? Action::Hold : Action::Dispatch;
            EXPECT_EQ(sol.policy.without_platoon[x], expected) << x;
        }
    }
}

TEST(QDifference, NondecreasingInState) {
    for (const auto& params : {balanced, frequent, costly}) {
        const auto sol = solve(params);
        for (int x = 1; x + 1 <= sol.values.exact_upto - 1; ++x)
            EXPECT_GE(q_difference(sol.values, x + 1, params), q_difference(sol.values, x, params) - 1e-9) << x;
    }
}

TEST(QDifference, FirstDispatchStateIsThresholdPlusOne) {
    const auto sol = solve(balanced);
    int first = -1;
    for (int x = 1; x < sol.values.x_max(); ++x) {
        if (q_difference(sol.values, x, balanced) > hold_bound(balanced)) {
            first = x;
            break;
        }
    }
    EXPECT_EQ(first, 2);
}

TEST(QDifference, OutOfRange) {
    const auto sol = solve(balanced, 50);
    EXPECT_THROW(q_difference(sol.values, 0, balanced), ValidationError);
    EXPECT_THROW(q_difference(sol.values, 50, balanced), ValidationError);
    EXPECT_NO_THROW(q_difference(sol.values, 49, balanced));
}

TEST(Convexity, EveryStageTablePasses) {
    const auto sol = value_iterate_finite(costly, 60, {200, 10});
    for (const auto& t : sol.values) {
        const auto rep = check_convexity(t);
        EXPECT_TRUE(rep.pass) << "stage " << t.iterations << " min " << rep.min_second_difference << " at "
                              << rep.location;
    }
}

TEST(Convexity, ConvergedTablePasses) {
    for (const auto& params : {balanced, frequent, costly}) EXPECT_TRUE(check_convexity(solve(params).values).pass);
}

TEST(Convexity, CorruptedEntryIsLocated) {
    auto raised = solve(balanced, 60).values;
    raised.values[20] += 1.0;
    const auto r = check_convexity(raised);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.location, 20);

    // Lowering an entry raises its own second difference and drops both
    // neighbours', so the failure shows up next to it on a flat-curvature table.
    ValueTable lowered;
    for (int x = 0; x <= 12; ++x) lowered.values.push_back(0.25 * x * x);
    lowered.values[6] -= 1.0;
    const auto l = check_convexity(lowered);
    EXPECT_FALSE(l.pass);
    EXPECT_EQ(l.location, 5);
    EXPECT_DOUBLE_EQ(l.min_second_difference, 0.5 - 1.0);
}

TEST(Convexity, UserTableCheckedEverywhere) {
    ValueTable t;
    t.values = {0, 1, 4, 9, 16};
    const auto r = check_convexity(t);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.checked_upto, 3);
    EXPECT_DOUBLE_EQ(r.min_second_difference, 2.0);
}

TEST(ExtractThreshold, AllDispatchIsZero) {
    PolicyTable pol{std::vector<Action>(10, Action::Dispatch), std::vector<Action>(10, Action::Dispatch)};
    pol.with_platoon[0] = pol.without_platoon[0] = Action::Hold;
    EXPECT_EQ(extract_threshold(pol).threshold, 0);
}

TEST(ExtractThreshold, ReportsNonThresholdStates) {
    PolicyTable pol{std::vector<Action>(10, Action::Dispatch), std::vector<Action>(10, Action::Hold)};
    pol.with_platoon[0] = Action::Hold;
    for (int y = 4; y < 10; ++y) pol.without_platoon[y] = Action::Dispatch;
    pol.without_platoon[7] = Action::Hold;
    const auto ex = extract_threshold(pol);
    EXPECT_FALSE(ex.ok());
    ASSERT_EQ(ex.threshold_violations.size(), 1u);
    EXPECT_EQ(ex.threshold_violations[0], 7);

    pol.without_platoon[7] = Action::Dispatch;
    pol.with_platoon[5] = Action::Hold;
    const auto ex2 = extract_threshold(pol);
    EXPECT_FALSE(ex2.ok());
    ASSERT_EQ(ex2.platoon_violations.size(), 1u);
    EXPECT_EQ(ex2.platoon_violations[0], 5);

    pol.with_platoon[5] = Action::Dispatch;
    EXPECT_EQ(extract_threshold(pol).threshold, 3);
}

TEST(Discounted, HeavySurchargeNeverDispatchesAlone) {
    // Holding one more truck forever costs at most 1/(1-beta), so dispatching
    // alone cannot win once kappa - 1 >= beta/(1-beta).
    const ModelParams params{0.5, 0.5, 10, 0.9};
    const auto sol = solve(params, 100);
    EXPECT_EQ(extract_threshold(sol.policy).threshold, 100);
    EXPECT_FALSE(sol.truncation_reliable);
    EXPECT_LT(sol.values.exact_upto, 100 - 10);
    for (int x = 1; x < 100; ++x) EXPECT_LT(q_difference(sol.values, x, params), 1 / (1 - params.beta));
}

TEST(ExtractThreshold, CapRowIgnored) {
    PolicyTable pol{std::vector<Action>(10, Action::Dispatch), std::vector<Action>(10, Action::Dispatch)};
    pol.with_platoon[0] = pol.without_platoon[0] = Action::Hold;
    pol.without_platoon[9] = Action::Hold;
    EXPECT_EQ(extract_threshold(pol).threshold, 0);
    pol.without_platoon[8] = Action::Hold;
    EXPECT_FALSE(extract_threshold(pol).ok());
    EXPECT_EQ(extract_threshold(pol, 7).threshold, 0);
}

// Structural properties over the solver grid: platoons always joined,
// threshold shape, convex values and a monotone decision statistic.
TEST(StructuralGrid, ThresholdConvexityAndPlatoonDispatch) {
    for (double p : {0.2, 0.5, 0.8}) {
        for (double q : {0.2, 0.5, 0.8}) {
            for (double kappa : {2.0, 5.0, 10.0, 20.0}) {
                for (double beta : {0.9, 0.99, 0.999}) {
                    const ModelParams params{p, q, kappa, beta};
                    SCOPED_TRACE(testing::Message() << p << ' ' << q << ' ' << kappa << ' ' << beta);
                    const bool never_alone = kappa - 1 >= beta / (1 - beta) - 1e-9;
                    // Grow the cap until a useful stretch of states is out of its reach.
                    int x_max = 200;
                    auto sol = solve(params, x_max);
                    while (sol.values.exact_upto < 50) sol = solve(params, x_max *= 2);

                    const auto ex = extract_threshold(sol.policy, x_max - 10);
                    EXPECT_TRUE(ex.ok());
                    EXPECT_TRUE(ex.platoon_violations.empty());
                    EXPECT_EQ(sol.truncation_reliable, !never_alone);
                    if (never_alone) {
                        EXPECT_EQ(ex.threshold, x_max);
                    }
                    const auto conv = check_convexity(sol.values);
                    EXPECT_TRUE(conv.pass) << conv.min_second_difference << " at " << conv.location;
                    EXPECT_GE(conv.checked_upto, 49);
                    for (int x = 1; x + 1 <= sol.values.exact_upto - 1; ++x)
                        EXPECT_GE(q_difference(sol.values, x + 1, params),
                                  q_difference(sol.values, x, params) - 1e-9);
                }
            }
        }
    }
}
