// platoon: command line front end for the dispatching solvers.
//
//   platoon <evaluate|search|dp|simulate|sweep> [flags]
//
// Every flag can also be given in a flat key = value config file (--config);
// flags on the command line take precedence.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "platoon/experiments.hpp"

namespace {

const std::map<std::string, platoon::Command> commands{
    {"evaluate", platoon::Command::Evaluate}, {"search", platoon::Command::Search},
    {"dp", platoon::Command::Dp},             {"simulate", platoon::Command::Simulate},
    {"sweep", platoon::Command::Sweep},
};

const std::map<std::string, platoon::Format> formats{{"csv", platoon::Format::Csv}, {"json", platoon::Format::Json}};

} // namespace

int main(int argc, char** argv) {
    platoon::ExperimentSpec spec;
    CLI::App app{"Truck/platoon dispatching: threshold policies, DP solves and simulation"};
    app.set_config("--config", "", "Flat key = value file mirroring the flags");

    std::string command;
    app.add_option("command", command, "evaluate | search | dp | simulate | sweep")
        ->required()
        ->check(CLI::IsMember(commands));

    int m = -1;
    int horizon = 0;
    std::string format = "csv";
    app.add_option("--p", spec.params.p, "Truck arrival probability")->capture_default_str();
    app.add_option("--q", spec.params.q, "Platoon arrival probability")->capture_default_str();
    app.add_option("--kappa", spec.params.kappa, "Surcharge for dispatching without a platoon")->capture_default_str();
    app.add_option("--beta", spec.params.beta, "Discount factor (dp)")->capture_default_str();
    auto* m_opt = app.add_option("--m", m, "Threshold (evaluate, simulate) or sweep start");
    app.add_option("--m-max", spec.m_max, "Sweep end / search cap")->capture_default_str();
    auto* horizon_opt = app.add_option("--horizon", horizon, "dp: also solve this finite horizon");
    app.add_option("--x-max", spec.truncation.x_max, "Truncation level for DP")->capture_default_str();
    app.add_option("--margin", spec.truncation.margin, "Required gap between threshold and x-max")
        ->capture_default_str();
    app.add_option("--tol", spec.tol, "Value-iteration tolerance")->capture_default_str();
    app.add_option("--slots", spec.sim.slots, "Slots per replication")->capture_default_str();
    app.add_option("--warmup", spec.sim.warmup_slots, "Discarded slots per replication")->capture_default_str();
    app.add_option("--reps", spec.sim.replications, "Replications")->capture_default_str();
    app.add_option("--seed", spec.sim.base_seed, "Base seed")->capture_default_str();
    app.add_option("--confidence", spec.sim.confidence_level, "Confidence level")->capture_default_str();
    app.add_option("--threads", spec.sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
    app.add_flag("--simulate", spec.simulate, "sweep: run the simulator at every m");
    app.add_option("--out", spec.out, "Output path (default stdout)");
    app.add_option("--format", format, "csv | json")->check(CLI::IsMember(formats))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return platoon::exit_code::validation;
    }

    spec.command = commands.at(command);
    spec.format = formats.at(format);
    if (m_opt->count() > 0) spec.m = m;
    if (horizon_opt->count() > 0) spec.horizon = horizon;

    const platoon::Report report = platoon::run_experiment(spec);
    if (!report.message.empty()) std::cerr << report.message << '\n';
    if (!report.body.empty() && !platoon::write_report(report, spec.out)) {
        std::cerr << "cannot write " << (spec.out.empty() ? std::string("stdout") : spec.out) << '\n';
        return platoon::exit_code::io;
    }
    return report.status;
}
