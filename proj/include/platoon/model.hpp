#pragma once

// Station dynamics for the truck/platoon dispatching problem.
//
// One slot: the truck arrival (if any) joins the queue first, then the platoon
// (if any) passes. The controller observes both, picks Hold or Dispatch, and the
// slot cost is charged on the post-arrival queue y:
//
//   Hold                 -> next = y,   cost = y
//   Dispatch, platoon    -> next = y-1, cost = y-1
//   Dispatch, no platoon -> next = y-1, cost = y-1+kappa
//
// At most one truck leaves per slot.

#include <array>
#include <cmath>
#include <utility>

#include "platoon/errors.hpp"

namespace platoon {

/// Number of trucks waiting at slot start.
using QueueState = int;

struct ModelParams {
    double p = 0.5;     ///< truck arrival probability per slot
    double q = 0.5;     ///< platoon arrival probability per slot
    double kappa = 1.0; ///< surcharge for dispatching without a platoon
    double beta = 0.99; ///< discount factor; ignored by the average-cost code
};

/// Checks p, q in (0,1), finite kappa >= 0, beta in (0,1).
inline ModelParams validate_params(double p, double q, double kappa, double beta) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError(Field::P, "p out of open interval (0,1)");
    if (!(q > 0.0 && q < 1.0)) throw ValidationError(Field::Q, "q out of open interval (0,1)");
    if (!std::isfinite(kappa)) throw ValidationError(Field::Kappa, "kappa must be finite");
    if (kappa < 0.0) throw ValidationError(Field::Kappa, "kappa must be >= 0");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError(Field::Beta, "beta out of open interval (0,1)");
    return ModelParams{p, q, kappa, beta};
}

inline ModelParams validate_params(const ModelParams& m) {
    return validate_params(m.p, m.q, m.kappa, m.beta);
}

enum class SlotEvent { NoArrivals, PlatoonOnly, TruckOnly, Both };

inline constexpr std::array<SlotEvent, 4> all_events{
    SlotEvent::NoArrivals, SlotEvent::PlatoonOnly, SlotEvent::TruckOnly, SlotEvent::Both};

constexpr bool has_truck(SlotEvent e) noexcept {
    return e == SlotEvent::TruckOnly || e == SlotEvent::Both;
}

constexpr bool has_platoon(SlotEvent e) noexcept {
    return e == SlotEvent::PlatoonOnly || e == SlotEvent::Both;
}

constexpr SlotEvent make_event(bool truck, bool platoon) noexcept {
    if (truck) return platoon ? SlotEvent::Both : SlotEvent::TruckOnly;
    return platoon ? SlotEvent::PlatoonOnly : SlotEvent::NoArrivals;
}

inline const char* to_string(SlotEvent e) {
    switch (e) {
        case SlotEvent::NoArrivals: return "NoArrivals";
        case SlotEvent::PlatoonOnly: return "PlatoonOnly";
        case SlotEvent::TruckOnly: return "TruckOnly";
        case SlotEvent::Both: return "Both";
    }
    return "?";
}

enum class Action { Hold, Dispatch };

/// Dispatch iff the post-arrival queue exceeds m, except that a truck always
/// leaves with a passing platoon.
struct ThresholdPolicy {
    int m = 0;
};

struct SlotOutcome {
    QueueState next_state = 0;
    double cost = 0.0;
};

struct EventProbability {
    SlotEvent event;
    double probability;
};

inline double event_probability(SlotEvent e, const ModelParams& params) {
    const double pt = has_truck(e) ? params.p : 1.0 - params.p;
    const double pp = has_platoon(e) ? params.q : 1.0 - params.q;
    return pt * pp;
}

inline std::array<EventProbability, 4> event_distribution(const ModelParams& params) {
    std::array<EventProbability, 4> out{};
    for (std::size_t i = 0; i < all_events.size(); ++i)
        out[i] = {all_events[i], event_probability(all_events[i], params)};
    return out;
}

constexpr QueueState post_arrival(QueueState x, SlotEvent e) noexcept {
    return has_truck(e) ? x + 1 : x;
}

/// Applies `action` to an already-formed post-arrival queue y.
inline SlotOutcome apply_action(QueueState y, bool platoon, Action action, double kappa) {
    if (action == Action::Hold) return {y, static_cast<double>(y)};
    if (y < 1) throw DomainError("dispatch from an empty queue");
    const double base = static_cast<double>(y - 1);
    return {y - 1, platoon ? base : base + kappa};
}

inline SlotOutcome transition_step(QueueState x, SlotEvent event, Action action, double kappa) {
    if (x < 0) throw DomainError("negative queue length");
    return apply_action(post_arrival(x, event), has_platoon(event), action, kappa);
}

inline SlotOutcome transition_step(QueueState x, SlotEvent event, Action action, const ModelParams& params) {
    return transition_step(x, event, action, params.kappa);
}

inline Action threshold_action_post(QueueState y, bool platoon, ThresholdPolicy policy) noexcept {
    if (y >= 1 && (platoon || y > policy.m)) return Action::Dispatch;
    return Action::Hold;
}

inline Action threshold_action(QueueState x, SlotEvent event, ThresholdPolicy policy) {
    if (policy.m < 0) throw ValidationError(Field::Threshold, "threshold must be >= 0");
    return threshold_action_post(post_arrival(x, event), has_platoon(event), policy);
}

} // namespace platoon
