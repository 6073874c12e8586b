#pragma once

// Slot-by-slot simulation of the station under a threshold policy, and the
// replication harness (grand mean with a Student-t interval on the
// per-replication means).
//
// Each slot draws two uniforms from the replication's stream, truck first and
// platoon second. That order is part of the reproducibility contract.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/rng.hpp"

namespace platoon {

struct SimConfig {
    long slots = 1'000'000;
    int replications = 30;
    std::uint64_t base_seed = 20240101;
    double confidence_level = 0.99;
    long warmup_slots = 0;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

inline void validate_sim_config(const SimConfig& c) {
    if (c.slots < 1) throw ValidationError(Field::Slots, "slots must be >= 1");
    if (c.replications < 1) throw ValidationError(Field::Replications, "replications must be >= 1");
    if (!(c.confidence_level > 0.0 && c.confidence_level < 1.0))
        throw ValidationError(Field::Confidence, "confidence level must lie in (0,1)");
    if (c.warmup_slots < 0) throw ValidationError(Field::Slots, "warmup must be >= 0");
}

struct RunResult {
    double mean_cost = 0.0;
    QueueState final_queue = 0;
    QueueState max_queue = 0; ///< largest queue seen at a slot boundary
};

struct SimSummary {
    std::vector<double> per_replication_means;
    double grand_mean = 0.0;
    /// Absent for a single replication.
    std::optional<double> ci_half_width;
    long slots_simulated = 0;
    std::vector<QueueState> final_queue_lengths;
    std::vector<std::uint64_t> seeds;

    std::optional<double> ci_low() const {
        if (!ci_half_width) return std::nullopt;
        return grand_mean - *ci_half_width;
    }
    std::optional<double> ci_high() const {
        if (!ci_half_width) return std::nullopt;
        return grand_mean + *ci_half_width;
    }
};

/// One run from an empty station. Costs of the first `warmup` slots are
/// discarded; the mean is taken over the remaining `slots`.
inline RunResult simulate_run(const ModelParams& params, int m, long slots, std::uint64_t seed, long warmup = 0) {
    if (slots < 1) throw ValidationError(Field::Slots, "slots must be >= 1");
    if (m < 0) throw ValidationError(Field::Threshold, "threshold must be >= 0");
    Xoshiro256StarStar rng(seed);
    const ThresholdPolicy policy{m};
    RunResult out;
    QueueState x = 0;
    double total = 0.0;
    const long horizon = warmup + slots;
    for (long n = 0; n < horizon; ++n) {
        const bool truck = rng.uniform() < params.p;
        const bool platoon = rng.uniform() < params.q;
        const SlotEvent e = make_event(truck, platoon);
        const SlotOutcome step = transition_step(x, e, threshold_action(x, e, policy), params.kappa);
        if (n >= warmup) total += step.cost;
        x = step.next_state;
        out.max_queue = std::max(out.max_queue, x);
    }
    out.mean_cost = total / static_cast<double>(slots);
    out.final_queue = x;
    return out;
}

/// Two-sided Student-t quantile with `dof` degrees of freedom.
inline double t_quantile(double confidence, int dof) {
    const boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

inline SimSummary summarize(std::vector<double> means, double confidence) {
    SimSummary s;
    const auto n = means.size();
    double sum = 0.0;
    for (double v : means) sum += v;
    s.grand_mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : means) ss += (v - s.grand_mean) * (v - s.grand_mean);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        s.ci_half_width = t_quantile(confidence, static_cast<int>(n - 1)) * sd / std::sqrt(static_cast<double>(n));
    }
    s.per_replication_means = std::move(means);
    return s;
}

inline SimSummary simulate_replications(const ModelParams& params, int m, const SimConfig& config) {
    validate_sim_config(config);
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<RunResult> runs(reps);
    std::vector<std::uint64_t> seeds(reps);
    for (std::size_t r = 0; r < reps; ++r) seeds[r] = replication_seed(config.base_seed, r);

    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, reps));
    auto work = [&](unsigned w) {
        for (std::size_t r = w; r < reps; r += workers)
            runs[r] = simulate_run(params, m, config.slots, seeds[r], config.warmup_slots);
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    std::vector<double> means;
    means.reserve(reps);
    for (const auto& run : runs) means.push_back(run.mean_cost);
    SimSummary s = summarize(std::move(means), config.confidence_level);
    s.slots_simulated = config.slots;
    s.seeds = std::move(seeds);
    for (const auto& run : runs) s.final_queue_lengths.push_back(run.final_queue);
    return s;
}

} // namespace platoon
