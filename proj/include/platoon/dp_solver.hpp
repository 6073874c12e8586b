#pragma once

// Exact dynamic programming on the truncated state space {0, ..., x_max}.
//
// Recursion (J_0 = 0):
//   J_{k+1}(x) = sum_e P(e) * min_a [ c(y_e, a) + beta * J_k(a(y_e)) ],
//   y_e = min(x + truck(e), x_max).
// A truck arriving at a full station (x = x_max) is discarded.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

struct TruncationConfig {
    int x_max = 200;
    /// The extracted threshold must stay at least this far below x_max.
    int margin = 10;
};

inline void validate_truncation(const TruncationConfig& t) {
    if (t.x_max < 2) throw ValidationError(Field::XMax, "x_max must be >= 2");
    if (t.margin < 0) throw ValidationError(Field::Margin, "margin must be >= 0");
}

struct ValueTable {
    std::vector<double> values;     ///< indexed by queue length 0..x_max
    long iterations = 0;            ///< stage index (finite horizon) or sweep count
    double beta = 0.0;
    /// Largest state whose value the cap at x_max cannot influence
    /// (x_max - k for stage k; x_max - margin for a reliable discounted fixed
    /// point, less when no threshold keeps the chain away from the cap).
    int exact_upto = std::numeric_limits<int>::max();

    int x_max() const noexcept { return static_cast<int>(values.size()) - 1; }
};

/// Contingent actions, indexed by the post-arrival queue y in [0, x_max].
struct PolicyTable {
    std::vector<Action> with_platoon;
    std::vector<Action> without_platoon;

    int x_max() const noexcept { return static_cast<int>(without_platoon.size()) - 1; }
};

struct ThresholdExtraction {
    std::optional<int> threshold;
    /// y where the no-platoon action contradicts the threshold pattern.
    std::vector<int> threshold_violations;
    /// y >= 1 where a passing platoon is not joined (or y = 0 where Dispatch is recorded).
    std::vector<int> platoon_violations;

    bool ok() const noexcept { return threshold.has_value(); }
};

struct FiniteHorizonSolution {
    std::vector<ValueTable> values;   ///< J_1 .. J_N
    std::vector<PolicyTable> policies; ///< policy with k stages to go, k = 1..N
    bool truncation_reliable = true;
};

struct DiscountedSolution {
    ValueTable values;
    PolicyTable policy;
    double residual = 0.0;
    bool truncation_reliable = true;
};

struct ConvexityReport {
    bool pass = true;
    double min_second_difference = std::numeric_limits<double>::infinity();
    int location = -1;   ///< interior state attaining the minimum, -1 if nothing checked
    int checked_upto = 0; ///< last interior state examined
};

inline constexpr double convexity_tolerance = 1e-9;
inline constexpr long default_sweep_cap = 1'000'000;

namespace detail {

struct StageResult {
    double value;
    Action action;
};

// Hold wins ties.
inline StageResult best_action(int y, bool platoon, const ModelParams& params, std::span<const double> next) {
    const double hold = y + params.beta * next[static_cast<std::size_t>(y)];
    if (y < 1) return {hold, Action::Hold};
    const double surcharge = platoon ? 0.0 : params.kappa;
    const double dispatch = (y - 1) + surcharge + params.beta * next[static_cast<std::size_t>(y - 1)];
    if (dispatch < hold) return {dispatch, Action::Dispatch};
    return {hold, Action::Hold};
}

inline int capped_arrival(int x, SlotEvent e, int x_max) noexcept {
    return std::min(post_arrival(x, e), x_max);
}

inline void bellman_sweep(const ModelParams& params, std::span<const double> current, std::vector<double>& out) {
    const int x_max = static_cast<int>(current.size()) - 1;
    const auto dist = event_distribution(params);
    out.assign(current.size(), 0.0);
    for (int x = 0; x <= x_max; ++x) {
        double acc = 0.0;
        for (const auto& [event, prob] : dist) {
            const int y = capped_arrival(x, event, x_max);
            acc += prob * best_action(y, has_platoon(event), params, current).value;
        }
        out[static_cast<std::size_t>(x)] = acc;
    }
}

// Slots a state d below the cap needs before any discarded arrival can affect
// it; past that the per-slot cost gap grows at most linearly, so the value
// error is below beta^d (1 + kappa) / (1 - beta)^2. Returns the smallest d that
// keeps four times that (a second difference) under a tenth of the tolerance.
inline int cap_influence_depth(const ModelParams& params, double tol) {
    const double one_minus = 1.0 - params.beta;
    const double target = tol / (40.0 * (1.0 + params.kappa)) * one_minus * one_minus;
    return static_cast<int>(std::ceil(std::log(target) / std::log(params.beta)));
}

} // namespace detail

/// Greedy contingent policy against the continuation table `next`.
inline PolicyTable greedy_policy(const ModelParams& params, std::span<const double> next) {
    const auto n = next.size();
    PolicyTable policy{std::vector<Action>(n), std::vector<Action>(n)};
    for (std::size_t y = 0; y < n; ++y) {
        const int yi = static_cast<int>(y);
        policy.with_platoon[y] = detail::best_action(yi, true, params, next).action;
        policy.without_platoon[y] = detail::best_action(yi, false, params, next).action;
    }
    return policy;
}

/// Threshold m with no-platoon Hold on y <= m and Dispatch on y > m, plus the
/// check that a passing platoon is always joined. The no-platoon pattern is
/// read on y <= check_upto only (never the cap row, whose arrivals are
/// discarded). m = x_max means no dispatch without a platoon in that range.
inline ThresholdExtraction extract_threshold(const PolicyTable& policy,
                                             int check_upto = std::numeric_limits<int>::max()) {
    ThresholdExtraction out;
    const int x_max = policy.x_max();
    if (x_max < 0 || policy.with_platoon.size() != policy.without_platoon.size()) {
        out.threshold_violations.push_back(-1);
        return out;
    }

    const int last = std::min(check_upto, x_max - 1);
    int first_dispatch = x_max + 1;
    for (int y = 1; y <= last; ++y) {
        if (policy.without_platoon[static_cast<std::size_t>(y)] == Action::Dispatch) {
            first_dispatch = y;
            break;
        }
    }
    const int m = first_dispatch - 1;

    for (int y = 0; y <= x_max; ++y) {
        const auto idx = static_cast<std::size_t>(y);
        const Action expected = (y >= 1 && y > m) ? Action::Dispatch : Action::Hold;
        if (y <= last && policy.without_platoon[idx] != expected) out.threshold_violations.push_back(y);
        const Action platoon_expected = y >= 1 ? Action::Dispatch : Action::Hold;
        if (policy.with_platoon[idx] != platoon_expected) out.platoon_violations.push_back(y);
    }
    if (out.threshold_violations.empty() && out.platoon_violations.empty()) out.threshold = m;
    return out;
}

namespace detail {

inline bool threshold_within_margin(const PolicyTable& policy, int margin) {
    const int trusted = policy.x_max() - margin;
    const auto ex = extract_threshold(policy, trusted);
    return ex.ok() && *ex.threshold < trusted;
}

} // namespace detail

inline FiniteHorizonSolution value_iterate_finite(const ModelParams& params_in, int horizon, const TruncationConfig& trunc) {
    const ModelParams params = validate_params(params_in);
    validate_truncation(trunc);
    if (horizon < 1) throw ValidationError(Field::Horizon, "horizon must be >= 1");

    FiniteHorizonSolution sol;
    sol.values.reserve(static_cast<std::size_t>(horizon));
    sol.policies.reserve(static_cast<std::size_t>(horizon));

    std::vector<double> current(static_cast<std::size_t>(trunc.x_max) + 1, 0.0);
    std::vector<double> next;
    for (int k = 1; k <= horizon; ++k) {
        sol.policies.push_back(greedy_policy(params, current));
        detail::bellman_sweep(params, current, next);
        current.swap(next);
        sol.values.push_back(ValueTable{current, k, params.beta, std::max(-1, trunc.x_max - k)});

        if (!detail::threshold_within_margin(sol.policies.back(), trunc.margin)) sol.truncation_reliable = false;
    }
    return sol;
}

/// Iterates to the fixed point. Stops once the sup-norm step falls below
/// tol * (1 - beta) / (2 * beta), which puts the greedy policy within tol of optimal.
inline DiscountedSolution value_iterate_discounted(const ModelParams& params_in, const TruncationConfig& trunc, double tol,
                                                   long sweep_cap = default_sweep_cap) {
    const ModelParams params = validate_params(params_in);
    validate_truncation(trunc);
    if (!(tol > 0.0) || !std::isfinite(tol)) throw ValidationError(Field::Tol, "tol must be > 0");
    if (sweep_cap < 1) throw ValidationError(Field::Other, "sweep cap must be >= 1");

    const double stop = tol * (1.0 - params.beta) / (2.0 * params.beta);
    std::vector<double> current(static_cast<std::size_t>(trunc.x_max) + 1, 0.0);
    std::vector<double> next;
    double residual = std::numeric_limits<double>::infinity();
    long sweeps = 0;
    while (sweeps < sweep_cap) {
        detail::bellman_sweep(params, current, next);
        ++sweeps;
        residual = 0.0;
        for (std::size_t i = 0; i < current.size(); ++i) residual = std::max(residual, std::abs(next[i] - current[i]));
        current.swap(next);
        if (residual < stop) break;
    }
    if (!(residual < stop))
        throw ConvergenceError("value iteration did not converge within " + std::to_string(sweep_cap) +
                                   " sweeps (residual " + std::to_string(residual) + ")",
                               residual, sweeps);

    DiscountedSolution sol;
    sol.policy = greedy_policy(params, current);
    sol.residual = residual;
    sol.truncation_reliable =
        detail::threshold_within_margin(sol.policy, trunc.margin);
    // Without a threshold well below the cap, the optimal chain can climb into
    // it, so only states out of the cap's discounted reach are trusted.
    const int exact = sol.truncation_reliable
                          ? trunc.x_max - trunc.margin
                          : trunc.x_max - detail::cap_influence_depth(params, convexity_tolerance);
    sol.values = ValueTable{std::move(current), sweeps, params.beta, exact};
    return sol;
}

/// Decision statistic for the no-platoon contingency at post-arrival queue x.
///
/// Both actions are taken after the slot's arrivals are seen, so every event
/// that leaves x trucks with no platoon compares the same pair of continuation
/// states (x under Hold, x-1 under Dispatch). The event-weighted difference
/// therefore reduces to J(x) - J(x-1). Hold iff the result is <= (kappa-1)/beta.
inline double q_difference(const ValueTable& table, QueueState x, const ModelParams& /*params*/) {
    if (x < 1 || x > table.x_max() - 1)
        throw ValidationError(Field::Other, "state " + std::to_string(x) + " outside [1, x_max-1]");
    const auto i = static_cast<std::size_t>(x);
    return table.values[i] - table.values[i - 1];
}

inline double hold_bound(const ModelParams& params) {
    return (params.kappa - 1.0) / params.beta;
}

/// Second differences J(x+1) + J(x-1) - 2J(x) over the interior states
/// untouched by the truncation cap.
inline ConvexityReport check_convexity(const ValueTable& table) {
    ConvexityReport report;
    const int last = std::min(table.x_max() - 1, table.exact_upto - 1);
    report.checked_upto = last;
    for (int x = 1; x <= last; ++x) {
        const auto i = static_cast<std::size_t>(x);
        const double d2 = table.values[i + 1] + table.values[i - 1] - 2.0 * table.values[i];
        if (d2 < report.min_second_difference) {
            report.min_second_difference = d2;
            report.location = x;
        }
    }
    report.pass = !(report.min_second_difference < -convexity_tolerance);
    return report;
}

} // namespace platoon
