#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentinel/estimator.hpp"
#include "sentinel/isolation.hpp"
#include "sentinel/model.hpp"
#include "sentinel/synthesis.hpp"

namespace sentinel {

// x+ = [[1, delta], [0, 1]] x + [delta alpha / 2; delta alpha] sin(x1 + x2) + [delta; delta] u
// y  = [[3, 0.3], [3, 0.6], [6, 0.9], [1.2, 12]] x + a + m
// returned in monotone form: A - G H and f(v) = v + sin(v).
PlantModel example_model(double delta = 0.1, double alpha = 1.0);

enum class Mode { kExample1, kExample2, kExample3, kCustom };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct NoiseConfig {
    double lo = -0.5;
    double hi = 0.5;
    std::optional<std::uint64_t> seed;  // derived from the run seed when unset
};

struct AttackConfig {
    std::vector<int> support;
    double lo = 0.0;
    double hi = 0.0;
    std::optional<std::uint64_t> seed;

    bool active() const { return !support.empty() && lo < hi; }
};

struct Scenario {
    Mode mode = Mode::kCustom;
    double delta = 0.1;
    double alpha = 1.0;
    // Custom plant: {A, G, H, C, B?, f, f_gain?, monotonize?}. With monotonize
    // (the default) A and f are the raw matrix and nonlinearity g.
    nlohmann::json model;
    std::optional<Vector> x0;  // standard normal per seed when unset
    Vector xhat0;              // zeros when empty
    int horizon = 500;
    NoiseConfig noise;
    AttackConfig attack;
    int q = 0;       // > 0 runs the subset bank
    int q_star = 0;  // > 0 runs isolation
    IsolationOptions isolation;
    std::vector<std::uint64_t> seeds{1};
    sdp::SolverSettings solver;
    double grid_step = 0.05;
    std::string out_dir = "sentinel-out";
};

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& scenario);

// Example 1: one observer on all four sensors, 20 seeds.
// Example 2: q = 1, W = {3}, a3 ~ U(-10, 10), horizon 500, 20 seeds.
// Example 3: q* = 1, W = {3}, a3 ~ U(-2.5, 2.5), N = 100, horizon 1000, 20 seeds.
Scenario example_scenario(Mode mode);
void set_attack_bound(Scenario& scenario, double b);

PlantModel build_model(const Scenario& scenario);
SynthesisOptions synthesis_options(const Scenario& scenario, unsigned threads);

Vector initial_state(const Scenario& scenario, int n, std::uint64_t seed);
Trace simulate(const Scenario& scenario, const PlantModel& model, std::uint64_t seed);

// sup over k >= from of values[k].
double tail_sup(const std::vector<double>& values, int from);

// Literal ISS bound c lambda^k |e(0)| + gamma max_{j<=k} |m_J(j)| along a trace.
std::vector<double> iss_bound(const ObserverDesign& design, const Trace& trace, const Vector& e0, bool with_noise = true);

enum class Stage { kSynthesize, kSimulate, kEstimate, kIsolate, kVerify, kRun };

std::string to_string(Stage stage);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunResult {
    std::vector<Check> checks;
    std::vector<std::string> files;  // relative to the output directory
    nlohmann::json manifest;

    bool ok() const;
};

struct RunContext {
    unsigned threads = 1;
    std::ostream* log = nullptr;
};

// Executes one stage of the pipeline and writes its artifacts plus manifest.json
// and columns.json into scenario.out_dir.
RunResult execute(const Scenario& scenario, Stage stage, const RunContext& context = {});

}  // namespace sentinel
