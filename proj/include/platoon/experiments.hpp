#pragma once

// Experiment drivers behind the `platoon` command line tool. Each driver
// turns an ExperimentSpec into a rendered report (CSV or JSON) plus an exit
// status, so the exact bytes the tool writes can be tested in-process.
//
// Exit codes: 0 success, 2 input validation, 3 computation, 4 I/O.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "platoon/dp_solver.hpp"
#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/simulation.hpp"
#include "platoon/steady_state.hpp"

namespace platoon {

enum class Command { Evaluate, Search, Dp, Simulate, Sweep };
enum class Format { Csv, Json };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int computation = 3;
inline constexpr int io = 4;
} // namespace exit_code

struct ExperimentSpec {
    Command command = Command::Evaluate;
    ModelParams params{0.5, 0.5, 10.0, 0.999};
    std::optional<int> m;           ///< evaluate/simulate threshold; sweep lower bound
    int m_max = 10;                 ///< sweep upper bound, search cap
    std::optional<int> horizon;     ///< dp: also run a finite-horizon solve
    TruncationConfig truncation{};
    double tol = 1e-6;
    SimConfig sim{};
    bool simulate = false;          ///< sweep: fill the simulation columns
    std::string out;                ///< empty = stdout
    Format format = Format::Csv;
};

struct Report {
    std::string body;
    int status = exit_code::ok;
    std::string message; ///< diagnostic for stderr, empty on success
};

/// 12 significant digits, the fixed precision of every emitted number.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double round12(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_number(v).c_str(), nullptr);
}

inline const char* to_string(Command c) {
    switch (c) {
        case Command::Evaluate: return "evaluate";
        case Command::Search: return "search";
        case Command::Dp: return "dp";
        case Command::Simulate: return "simulate";
        case Command::Sweep: return "sweep";
    }
    return "?";
}

namespace detail {

using nlohmann::ordered_json;

inline constexpr const char* not_available = "NA";

/// Key/value CSV used by the scalar reports.
class KeyValueCsv {
public:
    KeyValueCsv() { out_ << "key,value\n"; }
    void add(const std::string& key, const std::string& value) { out_ << key << ',' << value << '\n'; }
    void add(const std::string& key, double value) { add(key, format_number(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, long value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline ordered_json params_json(const ModelParams& p) {
    return ordered_json{{"p", round12(p.p)}, {"q", round12(p.q)}, {"kappa", round12(p.kappa)}, {"beta", round12(p.beta)}};
}

inline ordered_json number_list(const std::vector<double>& v) {
    auto arr = ordered_json::array();
    for (double x : v) arr.push_back(round12(x));
    return arr;
}

inline ordered_json optional_number(const std::optional<double>& v) {
    if (!v) return not_available;
    return round12(*v);
}

inline std::string optional_cell(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string(not_available);
}

inline int require_m(const ExperimentSpec& spec) {
    if (!spec.m) throw ValidationError(Field::Threshold, "this command needs --m");
    if (*spec.m < 0) throw ValidationError(Field::Threshold, "m must be >= 0");
    return *spec.m;
}

} // namespace detail

/// Expected overshoot of the printed p = q, m >= 2 closed form over the oracle.
inline double equal_rate_excess(const ModelParams& params, int m) {
    return params.p * (1.0 - params.p) / (m + 1);
}

inline Report run_evaluate(const ExperimentSpec& spec) {
    const ModelParams params = validate_params(spec.params);
    const int m = detail::require_m(spec);
    const AverageCostResult r = evaluate_average_cost(params, m);
    const auto closed = stationary_closed_form(params, m);
    const auto oracle = stationary_oracle(params, m);
    const double excess = equal_rate_excess(params, m);
    const bool excess_matches = std::abs((r.j_closed - r.j_oracle) - excess) <= 1e-9;

    Report rep;
    if (r.flagged)
        rep.message = "note: the p = q closed form exceeds the stationary oracle by " + format_number(r.j_closed - r.j_oracle);
    if (spec.format == Format::Json) {
        detail::ordered_json j;
        j["command"] = "evaluate";
        j["params"] = detail::params_json(params);
        j["m"] = m;
        j["branch"] = to_string(r.branch);
        j["j_closed"] = round12(r.j_closed);
        j["j_oracle"] = round12(r.j_oracle);
        j["discrepancy"] = round12(r.discrepancy);
        j["flagged"] = r.flagged;
        if (r.flagged) {
            j["expected_excess"] = round12(excess);
            j["excess_matches"] = excess_matches;
        }
        j["ratio_a"] = round12(closed.ratio);
        j["f_closed"] = detail::number_list(closed.f);
        j["f_oracle"] = detail::number_list(oracle.f);
        rep.body = detail::dump(j);
        return rep;
    }
    detail::KeyValueCsv csv;
    csv.add("command", std::string("evaluate"));
    csv.add("p", params.p);
    csv.add("q", params.q);
    csv.add("kappa", params.kappa);
    csv.add("m", m);
    csv.add("branch", std::string(to_string(r.branch)));
    csv.add("j_closed", r.j_closed);
    csv.add("j_oracle", r.j_oracle);
    csv.add("discrepancy", r.discrepancy);
    csv.add("flagged", r.flagged);
    if (r.flagged) {
        csv.add("expected_excess", excess);
        csv.add("excess_matches", excess_matches);
    }
    csv.add("ratio_a", closed.ratio);
    for (int x = 0; x <= m; ++x) {
        const auto i = static_cast<std::size_t>(x);
        csv.add("f_closed[" + std::to_string(x) + "]", closed.f[i]);
        csv.add("f_oracle[" + std::to_string(x) + "]", oracle.f[i]);
    }
    rep.body = csv.str();
    return rep;
}

inline Report render_search(const ModelParams& params, const std::vector<double>& curve, std::optional<int> m_star,
                            Format format) {
    const auto limit = asymptotic_limit(params);
    Report rep;
    if (format == Format::Json) {
        detail::ordered_json j;
        j["command"] = "search";
        j["params"] = detail::params_json(params);
        j["m_star"] = m_star ? detail::ordered_json(*m_star) : detail::ordered_json(detail::not_available);
        j["cost_curve"] = detail::number_list(curve);
        j["asymptotic_limit"] = limit ? detail::ordered_json(round12(*limit)) : detail::ordered_json("diverges");
        rep.body = detail::dump(j);
        return rep;
    }
    detail::KeyValueCsv csv;
    csv.add("command", std::string("search"));
    csv.add("p", params.p);
    csv.add("q", params.q);
    csv.add("kappa", params.kappa);
    csv.add("m_star", m_star ? std::to_string(*m_star) : std::string(detail::not_available));
    csv.add("asymptotic_limit", limit ? format_number(*limit) : std::string("diverges"));
    for (std::size_t m = 0; m < curve.size(); ++m) csv.add("J[" + std::to_string(m) + "]", curve[m]);
    rep.body = csv.str();
    return rep;
}

inline Report run_search(const ExperimentSpec& spec) {
    const ModelParams params = validate_params(spec.params);
    try {
        const auto found = find_optimal_threshold(params, spec.m_max);
        return render_search(params, found.cost_curve, found.m_star, spec.format);
    } catch (const SearchCapExceeded& e) {
        Report rep = render_search(params, e.curve(), std::nullopt, spec.format);
        rep.status = exit_code::computation;
        rep.message = e.what();
        return rep;
    }
}

inline Report run_dp(const ExperimentSpec& spec) {
    const ModelParams params = validate_params(spec.params);
    validate_truncation(spec.truncation);
    Report rep;
    DiscountedSolution sol;
    try {
        sol = value_iterate_discounted(params, spec.truncation, spec.tol);
    } catch (const ConvergenceError& e) {
        if (spec.format == Format::Json) {
            rep.body = detail::dump({{"command", "dp"}, {"converged", false}, {"residual", round12(e.residual())},
                                     {"sweeps", e.sweeps()}});
        } else {
            detail::KeyValueCsv csv;
            csv.add("command", std::string("dp"));
            csv.add("converged", false);
            csv.add("residual", e.residual());
            csv.add("sweeps", e.sweeps());
            rep.body = csv.str();
        }
        rep.status = exit_code::computation;
        rep.message = e.what();
        return rep;
    }

    const int trusted = spec.truncation.x_max - spec.truncation.margin;
    const auto ex = extract_threshold(sol.policy, trusted);
    const auto convexity = check_convexity(sol.values);
    const auto search = find_optimal_threshold(params, std::max(spec.m_max, default_search_cap));
    const double bound = hold_bound(params);

    std::vector<double> deltas;
    const int delta_upto = std::min(sol.values.x_max() - 1, (ex.threshold ? *ex.threshold : 0) + 5);
    for (int x = 1; x <= delta_upto; ++x) deltas.push_back(q_difference(sol.values, x, params));

    std::optional<int> finite_threshold;
    bool finite_convex = true;
    if (spec.horizon) {
        const auto fin = value_iterate_finite(params, *spec.horizon, spec.truncation);
        const auto fex = extract_threshold(fin.policies.back(), trusted);
        finite_threshold = fex.threshold;
        for (const auto& t : fin.values) finite_convex = finite_convex && check_convexity(t).pass;
    }

    const bool agrees = ex.threshold && *ex.threshold == search.m_star;
    if (!ex.ok()) {
        rep.status = exit_code::computation;
        rep.message = "policy is not of threshold type";
    }

    if (spec.format == Format::Json) {
        detail::ordered_json j;
        j["command"] = "dp";
        j["params"] = detail::params_json(params);
        j["x_max"] = spec.truncation.x_max;
        j["sweeps"] = sol.values.iterations;
        j["converged"] = true;
        j["threshold"] = ex.threshold ? detail::ordered_json(*ex.threshold) : detail::ordered_json(detail::not_available);
        j["threshold_violations"] = ex.threshold_violations;
        j["platoon_violations"] = ex.platoon_violations;
        j["truncation_reliable"] = sol.truncation_reliable;
        j["convexity_pass"] = convexity.pass;
        j["min_second_difference"] = round12(convexity.min_second_difference);
        j["min_second_difference_at"] = convexity.location;
        j["hold_bound"] = round12(bound);
        j["delta"] = detail::number_list(deltas);
        j["average_cost_m_star"] = search.m_star;
        j["agrees_with_average_cost"] = agrees;
        if (spec.horizon) {
            j["horizon"] = *spec.horizon;
            j["finite_threshold"] =
                finite_threshold ? detail::ordered_json(*finite_threshold) : detail::ordered_json(detail::not_available);
            j["finite_convexity_pass"] = finite_convex;
        }
        rep.body = detail::dump(j);
        return rep;
    }
    detail::KeyValueCsv csv;
    csv.add("command", std::string("dp"));
    csv.add("p", params.p);
    csv.add("q", params.q);
    csv.add("kappa", params.kappa);
    csv.add("beta", params.beta);
    csv.add("x_max", spec.truncation.x_max);
    csv.add("sweeps", sol.values.iterations);
    csv.add("converged", true);
    csv.add("threshold", ex.threshold ? std::to_string(*ex.threshold) : std::string(detail::not_available));
    csv.add("structure_violations",
            static_cast<int>(ex.threshold_violations.size() + ex.platoon_violations.size()));
    csv.add("truncation_reliable", sol.truncation_reliable);
    csv.add("convexity_pass", convexity.pass);
    csv.add("min_second_difference", convexity.min_second_difference);
    csv.add("min_second_difference_at", convexity.location);
    csv.add("hold_bound", bound);
    for (std::size_t i = 0; i < deltas.size(); ++i) csv.add("delta[" + std::to_string(i + 1) + "]", deltas[i]);
    csv.add("average_cost_m_star", search.m_star);
    csv.add("agrees_with_average_cost", agrees);
    if (spec.horizon) {
        csv.add("horizon", *spec.horizon);
        csv.add("finite_threshold",
                finite_threshold ? std::to_string(*finite_threshold) : std::string(detail::not_available));
        csv.add("finite_convexity_pass", finite_convex);
    }
    rep.body = csv.str();
    return rep;
}

inline Report run_simulate(const ExperimentSpec& spec) {
    const ModelParams params = validate_params(spec.params);
    const int m = detail::require_m(spec);
    validate_sim_config(spec.sim);
    const SimSummary s = simulate_replications(params, m, spec.sim);
    const double j = average_cost_oracle(params, m);

    Report rep;
    if (spec.format == Format::Json) {
        detail::ordered_json j_out;
        j_out["command"] = "simulate";
        j_out["params"] = detail::params_json(params);
        j_out["m"] = m;
        j_out["slots"] = s.slots_simulated;
        j_out["reps"] = spec.sim.replications;
        j_out["seed"] = spec.sim.base_seed;
        j_out["confidence"] = round12(spec.sim.confidence_level);
        auto rows = detail::ordered_json::array();
        for (std::size_t r = 0; r < s.per_replication_means.size(); ++r)
            rows.push_back({{"replication", r},
                            {"seed", s.seeds[r]},
                            {"mean_cost", round12(s.per_replication_means[r])},
                            {"final_queue", s.final_queue_lengths[r]}});
        j_out["replications"] = rows;
        j_out["grand_mean"] = round12(s.grand_mean);
        j_out["ci_low"] = detail::optional_number(s.ci_low());
        j_out["ci_high"] = detail::optional_number(s.ci_high());
        j_out["j_oracle"] = round12(j);
        rep.body = detail::dump(j_out);
        return rep;
    }
    std::ostringstream out;
    out << "row,seed,mean_cost,ci_lo,ci_hi,final_queue,j_oracle\n";
    for (std::size_t r = 0; r < s.per_replication_means.size(); ++r)
        out << r << ',' << s.seeds[r] << ',' << format_number(s.per_replication_means[r]) << ",,,"
            << s.final_queue_lengths[r] << ",\n";
    out << "aggregate," << spec.sim.base_seed << ',' << format_number(s.grand_mean) << ','
        << detail::optional_cell(s.ci_low()) << ',' << detail::optional_cell(s.ci_high()) << ",," << format_number(j)
        << '\n';
    rep.body = out.str();
    return rep;
}

struct SweepRow {
    int m = 0;
    double j_closed = 0.0;
    double j_oracle = 0.0;
    CostBranch branch{};
    std::optional<SimSummary> sim;
};

inline std::vector<SweepRow> sweep_rows(const ExperimentSpec& spec) {
    const ModelParams params = validate_params(spec.params);
    const int lo = spec.m.value_or(0);
    if (lo < 0) throw ValidationError(Field::Threshold, "m must be >= 0");
    if (spec.m_max < lo) throw ValidationError(Field::Threshold, "m-max must be >= m");
    if (spec.simulate) validate_sim_config(spec.sim);

    std::vector<SweepRow> rows;
    for (int m = lo; m <= spec.m_max; ++m) {
        SweepRow row;
        row.m = m;
        const auto r = evaluate_average_cost(params, m);
        row.j_closed = r.j_closed;
        row.j_oracle = r.j_oracle;
        row.branch = r.branch;
        if (spec.simulate) row.sim = simulate_replications(params, m, spec.sim);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Report run_sweep(const ExperimentSpec& spec) {
    const auto rows = sweep_rows(spec);
    Report rep;
    if (spec.format == Format::Json) {
        auto arr = detail::ordered_json::array();
        for (const auto& row : rows) {
            detail::ordered_json j;
            j["m"] = row.m;
            j["j_closed"] = round12(row.j_closed);
            j["j_oracle"] = round12(row.j_oracle);
            j["branch"] = to_string(row.branch);
            if (row.sim) {
                j["sim_mean"] = round12(row.sim->grand_mean);
                j["sim_ci_lo"] = detail::optional_number(row.sim->ci_low());
                j["sim_ci_hi"] = detail::optional_number(row.sim->ci_high());
                j["reps"] = spec.sim.replications;
                j["slots"] = spec.sim.slots;
                j["seed"] = spec.sim.base_seed;
            }
            arr.push_back(std::move(j));
        }
        rep.body = detail::dump({{"command", "sweep"}, {"params", detail::params_json(spec.params)}, {"rows", arr}});
        return rep;
    }
    std::ostringstream out;
    out << "m,j_closed,j_oracle,branch,sim_mean,sim_ci_lo,sim_ci_hi,reps,slots,seed\n";
    for (const auto& row : rows) {
        out << row.m << ',' << format_number(row.j_closed) << ',' << format_number(row.j_oracle) << ','
            << to_string(row.branch) << ',';
        if (row.sim) {
            out << format_number(row.sim->grand_mean) << ',' << detail::optional_cell(row.sim->ci_low()) << ','
                << detail::optional_cell(row.sim->ci_high()) << ',' << spec.sim.replications << ','
                << spec.sim.slots << ',' << spec.sim.base_seed;
        } else {
            out << ",,,,,";
        }
        out << '\n';
    }
    rep.body = out.str();
    return rep;
}

/// Dispatches on spec.command and folds library exceptions into exit codes.
inline Report run_experiment(const ExperimentSpec& spec) {
    try {
        switch (spec.command) {
            case Command::Evaluate: return run_evaluate(spec);
            case Command::Search: return run_search(spec);
            case Command::Dp: return run_dp(spec);
            case Command::Simulate: return run_simulate(spec);
            case Command::Sweep: return run_sweep(spec);
        }
    } catch (const ValidationError& e) {
        return Report{"", exit_code::validation, e.what()};
    } catch (const ComputationError& e) {
        return Report{"", exit_code::computation, e.what()};
    } catch (const DomainError& e) {
        return Report{"", exit_code::computation, e.what()};
    }
    return Report{"", exit_code::validation, "unknown command"};
}

/// Writes the report body to `path` (stdout when empty). Returns false on I/O failure.
inline bool write_report(const Report& rep, const std::string& path) {
    if (path.empty()) {
        std::fwrite(rep.body.data(), 1, rep.body.size(), stdout);
        return std::fflush(stdout) == 0;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) return false;
    f << rep.body;
    f.close();
    return static_cast<bool>(f);
}

} // namespace platoon
