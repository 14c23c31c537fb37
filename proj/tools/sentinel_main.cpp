#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sentinel/parallel.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/sdp.hpp"
#include "sentinel/synthesis.hpp"

namespace {

using namespace sentinel;

struct Flags {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> tol_feas;
    std::optional<double> grid_step;
    std::optional<int> q_star;
    std::optional<int> window;
    std::optional<double> b;
    std::optional<double> alpha;
    bool dump_sdp = false;
};

Scenario load_scenario(const Flags& flags) {
    Scenario s;
    if (flags.scenario == "example1") {
        s = example_scenario(Mode::kExample1);
    } else if (flags.scenario == "example2") {
        s = example_scenario(Mode::kExample2);
    } else if (flags.scenario == "example3") {
        s = example_scenario(Mode::kExample3);
    } else {
        std::ifstream in(flags.scenario);
        if (!in) throw std::runtime_error("cannot open scenario file " + flags.scenario);
        s = scenario_from_json(nlohmann::json::parse(in));
    }
    if (flags.alpha) s.alpha = *flags.alpha;
    if (flags.b) set_attack_bound(s, *flags.b);
    if (flags.seed) s.seeds = {*flags.seed};
    if (flags.out) s.out_dir = *flags.out;
    if (flags.tol_feas) s.solver.tol_feas = *flags.tol_feas;
    if (flags.grid_step) s.grid_step = *flags.grid_step;
    if (flags.q_star) s.q_star = *flags.q_star;
    if (flags.window) s.isolation.window = *flags.window;
    return s;
}

// Writes the SDP at each design's winning c3 for solving elsewhere.
void dump_sdps(const Scenario& s, const RunResult& result) {
    const PlantModel model = build_model(s);
    for (const auto& rel : result.files) {
        if (rel.rfind("designs/", 0) != 0) continue;
        std::ifstream in(std::filesystem::path(s.out_dir) / rel);
        const ObserverDesign d = design_from_json(nlohmann::json::parse(in));
        const auto lmi = assemble(model, subset(model, d.subset), d.c3, d.multiplier);
        const auto path = std::filesystem::path(s.out_dir) / "sdp" / ("sdp_" + subset_label(d.subset) + ".json");
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path) << sdp::to_json(lmi.problem).dump(2) << '\n';
    }
}

int dispatch(Stage stage, const Flags& flags) {
    const Scenario scenario = load_scenario(flags);
    RunContext context;
    context.threads = thread_count_from_env();
    context.log = &std::cerr;
    const RunResult result = execute(scenario, stage, context);
    if (flags.dump_sdp) dump_sdps(scenario, result);
    std::cout << result.manifest.dump(2) << '\n';
    return result.ok() ? 0 : 1;
}

void add_common(CLI::App* cmd, Flags& flags) {
    cmd->add_option("scenario", flags.scenario, "scenario JSON file (run also takes example1|example2|example3)")
        ->required();
    cmd->add_option("--seed", flags.seed, "single run seed, replacing the scenario's seed list");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--tol-feas", flags.tol_feas, "SDP feasibility tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--grid-step", flags.grid_step, "coarse c3 grid step")->check(CLI::Range(1e-4, 0.5));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentinel: attack-resilient observer synthesis, estimation and isolation"};
    app.require_subcommand(1);
    Flags flags;

    auto* synth = app.add_subcommand("synthesize", "synthesize observer designs for the scenario's subsets");
    add_common(synth, flags);
    synth->add_flag("--dump-sdp", flags.dump_sdp, "also write the SDP at each winning c3 as JSON");
    auto* simulate = app.add_subcommand("simulate", "simulate the plant and write trace CSVs");
    add_common(simulate, flags);
    auto* estimate = app.add_subcommand("estimate", "run the observer or observer bank and write logs");
    add_common(estimate, flags);
    auto* isolate = app.add_subcommand("isolate", "run windowed isolation and write reports");
    add_common(isolate, flags);
    isolate->add_option("--q-star", flags.q_star, "number of attacked sensors")->check(CLI::PositiveNumber);
    isolate->add_option("--window", flags.window, "window size N")->check(CLI::PositiveNumber);
    auto* verify = app.add_subcommand("verify", "check synthesized designs against their certificates");
    add_common(verify, flags);
    auto* run = app.add_subcommand("run", "full pipeline with the scenario's assertions");
    add_common(run, flags);
    run->add_option("--b", flags.b, "attack bound, a ~ U(-b, b)")->check(CLI::NonNegativeNumber);
    run->add_option("--alpha", flags.alpha, "nonlinearity weight of the example plant");
    run->add_option("--window", flags.window, "isolation window size N")->check(CLI::PositiveNumber);
    run->add_option("--q-star", flags.q_star, "number of attacked sensors")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return dispatch(Stage::kSynthesize, flags);
        if (simulate->parsed()) return dispatch(Stage::kSimulate, flags);
        if (estimate->parsed()) return dispatch(Stage::kEstimate, flags);
        if (isolate->parsed()) return dispatch(Stage::kIsolate, flags);
        if (verify->parsed()) return dispatch(Stage::kVerify, flags);
        if (run->parsed()) return dispatch(Stage::kRun, flags);
    } catch (const InfeasibleSubsetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
