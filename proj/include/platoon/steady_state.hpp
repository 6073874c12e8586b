#pragma once

// Long-run behaviour of the threshold policies pi_m.
//
// Under pi_m the queue lives on {0, ..., m}: below the threshold it moves up
// with probability p(1-q) and down with probability (1-p)q, and a truck that
// would push it past m is sent off immediately. The stationary law is
// geometric, f(x) = A^x f(0) with A = p(1-q) / ((1-p)q).
//
// Two routes to the average cost J(pi_m) are provided: the printed closed
// forms, and a first-principles oracle (dense balance solve times the
// event-enumerated slot cost). The oracle is the canonical value.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

inline constexpr double equal_rate_tolerance = 1e-12;
inline constexpr double geometric_sum_switch = 1e-6;
inline constexpr int default_search_cap = 200;

struct StationaryDistribution {
    std::vector<double> f; ///< f[x] for x in [0, m]; mass above m is zero
    int m = 0;
    double ratio = 1.0; ///< A

    double sum() const noexcept {
        double s = 0.0;
        for (double v : f) s += v;
        return s;
    }
};

enum class CostBranch { ZeroThreshold, UnitThreshold, EqualRates, General };

inline const char* to_string(CostBranch b) {
    switch (b) {
        case CostBranch::ZeroThreshold: return "m0";
        case CostBranch::UnitThreshold: return "m1";
        case CostBranch::EqualRates: return "p_eq_q";
        case CostBranch::General: return "p_ne_q";
    }
    return "?";
}

struct AverageCostResult {
    double j_closed = 0.0;
    double j_oracle = 0.0;
    CostBranch branch = CostBranch::ZeroThreshold;
    double discrepancy = 0.0;
    /// The p = q, m >= 2 closed form is known to overshoot by p(1-p)/(m+1).
    bool flagged = false;
};

struct ThresholdSearch {
    int m_star = 0;
    std::vector<double> cost_curve; ///< J(pi_0) .. J(pi_{m*+1})
};

namespace detail {

inline void require_threshold(int m) {
    if (m < 0) throw ValidationError(Field::Threshold, "threshold m must be >= 0");
}

inline bool equal_rates(double a) noexcept { return std::abs(a - 1.0) < equal_rate_tolerance; }

} // namespace detail

inline double factor_a(const ModelParams& params) {
    return params.p * (1.0 - params.q) / ((1.0 - params.p) * params.q);
}

inline StationaryDistribution stationary_closed_form(const ModelParams& params, int m) {
    detail::require_threshold(m);
    const double a = factor_a(params);
    StationaryDistribution out;
    out.m = m;
    out.ratio = a;
    out.f.assign(static_cast<std::size_t>(m) + 1, 0.0);

    double f0 = 1.0;
    if (m == 0) {
        f0 = 1.0;
    } else if (detail::equal_rates(a)) {
        f0 = 1.0 / (m + 1);
    } else if (std::abs(a - 1.0) < geometric_sum_switch) {
        double s = 0.0, term = 1.0;
        for (int x = 0; x <= m; ++x, term *= a) s += term;
        f0 = 1.0 / s;
    } else {
        f0 = (a - 1.0) / (std::pow(a, m + 1) - 1.0);
    }
    double term = f0;
    for (int x = 0; x <= m; ++x, term *= a) out.f[static_cast<std::size_t>(x)] = term;
    return out;
}

/// Row-stochastic transition matrix of the chain pi_m induces on {0, ..., m},
/// built by pushing every event through threshold_action and transition_step.
inline Eigen::MatrixXd policy_transition_matrix(const ModelParams& params, int m) {
    detail::require_threshold(m);
    const int n = m + 1;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    const ThresholdPolicy policy{m};
    for (int x = 0; x < n; ++x) {
        for (const auto& [event, prob] : event_distribution(params)) {
            const auto out = transition_step(x, event, threshold_action(x, event, policy), params);
            if (out.next_state < 0 || out.next_state > m)
                throw ComputationError("threshold chain left {0..m}");
            P(x, out.next_state) += prob;
        }
    }
    return P;
}

/// Direct solve of the global balance equations, one row replaced by sum f = 1.
inline StationaryDistribution stationary_oracle(const ModelParams& params, int m) {
    const Eigen::MatrixXd P = policy_transition_matrix(params, m);
    const auto n = P.rows();
    Eigen::MatrixXd system = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw ComputationError("singular balance system");
    const Eigen::VectorXd f = lu.solve(rhs);

    StationaryDistribution out;
    out.m = m;
    out.ratio = factor_a(params);
    out.f.assign(f.data(), f.data() + n);
    return out;
}

/// Expected realized cost of one slot that starts at x under pi_m.
inline double expected_slot_cost(QueueState x, int m, const ModelParams& params) {
    detail::require_threshold(m);
    if (x < 0 || x > m) throw ValidationError(Field::Other, "state outside [0, m] has no stationary mass");
    double cost = 0.0;
    const ThresholdPolicy policy{m};
    for (const auto& [event, prob] : event_distribution(params))
        cost += prob * transition_step(x, event, threshold_action(x, event, policy), params).cost;
    return cost;
}

/// The four-branch closed form for J(pi_m), evaluated exactly as printed.
inline double average_cost_closed_form(const ModelParams& params, int m, CostBranch* branch_out = nullptr) {
    detail::require_threshold(m);
    const double p = params.p, q = params.q, kappa = params.kappa;
    const double a = factor_a(params);
    auto set = [&](CostBranch b) {
        if (branch_out) *branch_out = b;
    };

    if (m == 0) {
        set(CostBranch::ZeroThreshold);
        return p * (1.0 - q) * kappa;
    }
    if (m == 1) {
        set(CostBranch::UnitThreshold);
        return p * (1.0 - q) / (a + 1.0) +
               a * (p * (1.0 - q) * (1.0 + kappa) + (1.0 - p) * (1.0 - q) + p * q) / (a + 1.0);
    }
    const double md = m;
    if (detail::equal_rates(a)) {
        set(CostBranch::EqualRates);
        return (md * md + md - 2.0 * (kappa + 1.0) * (p - 1.0) * p) / (2.0 * (md + 1.0));
    }
    set(CostBranch::General);
    const double am = std::pow(a, m);
    const double am1 = am * a;
    const double tail = 1.0 - am1;
    const double denom = (1.0 - a) * tail;
    return p * (1.0 - q) * (1.0 - a) / tail + (a * a * (q - p) + a * (1.0 + p - q) + am * (-md - p + q)) / denom +
           am1 * (md + p - q - 1.0) / denom + (md - q + p * q * (1.0 - kappa) + p * kappa) * ((am - am1) / tail);
}

inline CostBranch cost_branch(const ModelParams& params, int m) {
    CostBranch b{};
    average_cost_closed_form(params, m, &b);
    return b;
}

/// Canonical J(pi_m): sum over x of expected_slot_cost(x) * f_oracle(x).
inline double average_cost_oracle(const ModelParams& params, int m) {
    const auto dist = stationary_oracle(params, m);
    double j = 0.0;
    for (int x = 0; x <= m; ++x) j += expected_slot_cost(x, m, params) * dist.f[static_cast<std::size_t>(x)];
    return j;
}

inline AverageCostResult evaluate_average_cost(const ModelParams& params, int m) {
    AverageCostResult r;
    r.j_closed = average_cost_closed_form(params, m, &r.branch);
    r.j_oracle = average_cost_oracle(params, m);
    r.discrepancy = std::abs(r.j_closed - r.j_oracle);
    r.flagged = r.branch == CostBranch::EqualRates;
    return r;
}

/// Walks m = 0, 1, 2, ... and stops at the first m with J(pi_m) < J(pi_{m+1}).
inline ThresholdSearch find_optimal_threshold(const ModelParams& params, int m_cap = default_search_cap) {
    if (m_cap < 1) throw ValidationError(Field::Threshold, "search cap must be >= 1");
    ThresholdSearch out;
    out.cost_curve.push_back(average_cost_oracle(params, 0));
    for (int m = 0; m <= m_cap; ++m) {
        out.cost_curve.push_back(average_cost_oracle(params, m + 1));
        const auto i = static_cast<std::size_t>(m);
        if (out.cost_curve[i] < out.cost_curve[i + 1]) {
            out.m_star = m;
            return out;
        }
    }
    throw SearchCapExceeded("no increase of J(pi_m) found up to m = " + std::to_string(m_cap), out.cost_curve);
}

/// lim J(pi_m) as m grows; std::nullopt when p >= q (the cost diverges).
inline std::optional<double> asymptotic_limit(const ModelParams& params) {
    const double p = params.p, q = params.q;
    if (p >= q) return std::nullopt;
    const double a = factor_a(params);
    return p * (1.0 - q) * (1.0 - a) + (a * a * (q - p) + a * (1.0 + p - q)) / (1.0 - a);
}

} // namespace platoon
