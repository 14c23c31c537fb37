#include "sentinel/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sentinel/csv.hpp"
#include "sentinel/json_util.hpp"
#include "sentinel/observer.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/version.hpp"

namespace sentinel {

namespace fs = std::filesystem;

PlantModel example_model(double delta, double alpha) {
    Matrix A_raw(2, 2);
    A_raw << 1.0, delta, 0.0, 1.0;
    Matrix G(2, 1);
    G << 0.5 * delta * alpha, delta * alpha;
    Matrix H(1, 2);
    H << 1.0, 1.0;
    PlantModel model = monotonize(A_raw, G, H, nonlinearity::sine());
    model.C.resize(4, 2);
    model.C << 3.0, 0.3, 3.0, 0.6, 6.0, 0.9, 1.2, 12.0;
    Matrix B(2, 1);
    B << delta, delta;
    model.rho = linear_input(B);
    model.input_dim = 1;
    model.validate();
    return model;
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::kExample1: return "example1";
        case Mode::kExample2: return "example2";
        case Mode::kExample3: return "example3";
        case Mode::kCustom: return "custom";
    }
    return "custom";
}

Mode mode_from_string(const std::string& name) {
    if (name == "example1") return Mode::kExample1;
    if (name == "example2") return Mode::kExample2;
    if (name == "example3") return Mode::kExample3;
    if (name == "custom") return Mode::kCustom;
    throw std::invalid_argument("unknown scenario mode '" + name + "'");
}

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::kSynthesize: return "synthesize";
        case Stage::kSimulate: return "simulate";
        case Stage::kEstimate: return "estimate";
        case Stage::kIsolate: return "isolate";
        case Stage::kVerify: return "verify";
        case Stage::kRun: return "run";
    }
    return "run";
}

bool RunResult::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

// ---------------------------------------------------------------------------
// Scenario documents

Scenario example_scenario(Mode mode) {
    Scenario s;
    s.mode = mode;
    s.seeds.resize(20);
    std::iota(s.seeds.begin(), s.seeds.end(), std::uint64_t{1});
    switch (mode) {
        case Mode::kExample1:
            s.horizon = 500;
            break;
        case Mode::kExample2:
            s.horizon = 500;
            s.q = 1;
            s.attack.support = {3};
            set_attack_bound(s, 10.0);
            break;
        case Mode::kExample3:
            s.horizon = 1000;
            s.q_star = 1;
            s.isolation.window = 100;
            s.attack.support = {3};
            set_attack_bound(s, 2.5);
            break;
        case Mode::kCustom:
            s.seeds = {1};
            break;
    }
    return s;
}

void set_attack_bound(Scenario& scenario, double b) {
    if (b < 0.0) throw std::invalid_argument("attack bound b must be nonnegative");
    scenario.attack.lo = -b;
    scenario.attack.hi = b;
}

Scenario scenario_from_json(const nlohmann::json& doc) {
    Scenario s = example_scenario(mode_from_string(doc.value("mode", std::string("custom"))));
    s.delta = doc.value("delta", s.delta);
    s.alpha = doc.value("alpha", s.alpha);
    if (doc.contains("model")) s.model = doc.at("model");
    if (doc.contains("x0") && !doc.at("x0").is_null()) s.x0 = vector_from_json(doc.at("x0"), "x0");
    if (doc.contains("xhat0")) s.xhat0 = vector_from_json(doc.at("xhat0"), "xhat0");
    s.horizon = doc.value("horizon", s.horizon);
    if (doc.contains("noise")) {
        const auto& n = doc.at("noise");
        s.noise.lo = n.value("lo", s.noise.lo);
        s.noise.hi = n.value("hi", s.noise.hi);
        if (n.contains("seed") && !n.at("seed").is_null()) s.noise.seed = n.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("attack")) {
        const auto& a = doc.at("attack");
        if (a.contains("support")) s.attack.support = a.at("support").get<std::vector<int>>();
        s.attack.lo = a.value("lo", s.attack.lo);
        s.attack.hi = a.value("hi", s.attack.hi);
        if (a.contains("seed") && !a.at("seed").is_null()) s.attack.seed = a.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("b")) set_attack_bound(s, doc.at("b").get<double>());
    s.q = doc.value("q", s.q);
    s.q_star = doc.value("q_star", s.q_star);
    s.isolation.window = doc.value("window", s.isolation.window);
    s.isolation.trust_ratio = doc.value("trust_ratio", s.isolation.trust_ratio);
    if (doc.contains("seeds")) s.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("solver")) {
        const auto& v = doc.at("solver");
        s.solver.tol_feas = v.value("tol_feas", s.solver.tol_feas);
        s.solver.tol_obj = v.value("tol_obj", s.solver.tol_obj);
        s.solver.max_iter = v.value("max_iter", s.solver.max_iter);
    }
    s.grid_step = doc.value("grid_step", s.grid_step);
    s.out_dir = doc.value("out", s.out_dir);

    if (s.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (s.seeds.empty()) throw std::invalid_argument("scenario needs at least one seed");
    if (s.q_star > 0 && s.horizon < s.isolation.window)
        throw std::invalid_argument("isolation horizon must be at least one window long");
    if (s.mode == Mode::kCustom && s.model.is_null()) throw std::invalid_argument("custom scenario needs a model");
    return s;
}

nlohmann::json to_json(const Scenario& s) {
    nlohmann::json doc;
    doc["mode"] = to_string(s.mode);
    doc["delta"] = s.delta;
    doc["alpha"] = s.alpha;
    if (!s.model.is_null()) doc["model"] = s.model;
    doc["x0"] = s.x0 ? vector_json(*s.x0) : nlohmann::json(nullptr);
    if (s.xhat0.size() > 0) doc["xhat0"] = vector_json(s.xhat0);
    doc["horizon"] = s.horizon;
    doc["noise"] = {{"lo", s.noise.lo}, {"hi", s.noise.hi}};
    doc["noise"]["seed"] = s.noise.seed ? nlohmann::json(*s.noise.seed) : nlohmann::json(nullptr);
    doc["attack"] = {{"support", s.attack.support}, {"lo", s.attack.lo}, {"hi", s.attack.hi}};
    doc["attack"]["seed"] = s.attack.seed ? nlohmann::json(*s.attack.seed) : nlohmann::json(nullptr);
    doc["q"] = s.q;
    doc["q_star"] = s.q_star;
    doc["window"] = s.isolation.window;
    doc["trust_ratio"] = s.isolation.trust_ratio;
    doc["seeds"] = s.seeds;
    doc["solver"] = {{"tol_feas", s.solver.tol_feas}, {"tol_obj", s.solver.tol_obj}, {"max_iter", s.solver.max_iter}};
    doc["grid_step"] = s.grid_step;
    doc["out"] = s.out_dir;
    return doc;
}

PlantModel build_model(const Scenario& s) {
    if (s.mode != Mode::kCustom) return example_model(s.delta, s.alpha);

    const auto& m = s.model;
    const Matrix A = matrix_from_json(m.at("A"), "A");
    const Matrix G = matrix_from_json(m.at("G"), "G");
    const Matrix H = matrix_from_json(m.at("H"), "H");
    const auto f = nonlinearity::by_name(m.value("f", std::string("zero")), m.value("f_gain", 1.0));
    PlantModel model;
    if (m.value("monotonize", true)) {
        model = monotonize(A, G, H, f);
    } else {
        model.A = A;
        model.G = G;
        model.H = H;
        model.f.assign(static_cast<std::size_t>(G.cols()), f);
    }
    model.C = matrix_from_json(m.at("C"), "C");
    if (m.contains("B")) {
        const Matrix B = matrix_from_json(m.at("B"), "B");
        model.rho = linear_input(B);
        model.input_dim = static_cast<int>(B.cols());
    }
    model.validate();
    return model;
}

SynthesisOptions synthesis_options(const Scenario& s, unsigned threads) {
    SynthesisOptions options;
    options.solver = s.solver;
    options.grid.coarse_step = s.grid_step;
    options.threads = std::max(1U, threads);
    return options;
}

// ---------------------------------------------------------------------------
// Simulation

Vector initial_state(const Scenario& s, int n, std::uint64_t seed) {
    if (s.x0) {
        if (s.x0->size() != n) throw std::invalid_argument("x0 has wrong length");
        return *s.x0;
    }
    SplitMix64 rng(derive_seed(seed, 0));
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0(i) = rng.normal();
    return x0;
}

Trace simulate(const Scenario& s, const PlantModel& model, std::uint64_t seed) {
    const SignalSpec noise = s.noise.lo < s.noise.hi
                                 ? SignalSpec::uniform(s.noise.lo, s.noise.hi, s.noise.seed.value_or(derive_seed(seed, 1)))
                                 : SignalSpec::zero();
    const SignalSpec attack =
        s.attack.active()
            ? SignalSpec::uniform(s.attack.lo, s.attack.hi, s.attack.seed.value_or(derive_seed(seed, 2)), s.attack.support)
            : SignalSpec::zero();
    return simulate_plant(model, initial_state(s, model.n(), seed), {}, noise, attack, s.horizon);
}

double tail_sup(const std::vector<double>& values, int from) {
    double out = 0.0;
    for (std::size_t k = static_cast<std::size_t>(std::max(from, 0)); k < values.size(); ++k) out = std::max(out, values[k]);
    return out;
}

std::vector<double> iss_bound(const ObserverDesign& design, const Trace& trace, const Vector& e0, bool with_noise) {
    std::vector<double> bound;
    bound.reserve(trace.m.size());
    double noise_sup = 0.0;
    const double e0n = e0.norm();
    double decay = 1.0;
    for (const auto& m : trace.m) {
        double mj = 0.0;
        for (const int i : design.subset) mj += m(i - 1) * m(i - 1);
        noise_sup = std::max(noise_sup, std::sqrt(mj));
        bound.push_back(design.certificate.c * decay * e0n + (with_noise ? design.certificate.gamma * noise_sup : 0.0));
        decay *= design.certificate.lambda;
    }
    return bound;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string fmt_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_ratio(double num, double den) {
    std::ostringstream ss;
    ss.precision(4);
    ss << num << " vs " << den;
    return ss.str();
}

class Pipeline {
public:
    Pipeline(const Scenario& scenario, const RunContext& context)
        : s_(scenario), ctx_(context), model_(build_model(scenario)), options_(synthesis_options(scenario, context.threads)),
          out_(scenario.out_dir) {
        fs::create_directories(out_);
    }

    RunResult finish(Stage stage) {
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : result_.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        write_json("columns.json", column_dictionary());
        nlohmann::json manifest;
        manifest["tool"] = "sentinel";
        manifest["version"] = kVersion;
        manifest["stage"] = to_string(stage);
        manifest["scenario"] = to_json(s_);
        manifest["solver"] = {{"tol_feas", s_.solver.tol_feas},
                              {"tol_obj", s_.solver.tol_obj},
                              {"max_iter", s_.solver.max_iter},
                              {"rho", s_.solver.rho},
                              {"relaxation", s_.solver.relaxation},
                              {"anderson_memory", s_.solver.anderson_memory}};
        manifest["grid"] = {{"coarse_step", options_.grid.coarse_step},
                            {"refine_step", options_.grid.refine_step},
                            {"refine_radius", options_.grid.refine_radius},
                            {"eps", options_.eps}};
        manifest["rng"] = "splitmix64";
        manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
        manifest["checks"] = std::move(checks);
        manifest["files"] = result_.files;
        manifest["ok"] = result_.ok();
        result_.manifest = manifest;
        write_json("manifest.json", manifest, false);
        return result_;
    }

    void synthesize_stage() { designs(); }

    void simulate_stage() {
        for (const auto seed : s_.seeds) {
            const Trace trace = simulate(s_, model_, seed);
            write_csv("trace_seed" + std::to_string(seed) + ".csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
        }
    }

    void verify_stage() {
        for (const auto& d : designs()) {
            const auto report = verify_design(model_, subset(model_, d.subset), d, 10000, 11, s_.solver.tol_feas);
            std::ostringstream detail;
            detail << "dqc_min=" << report.dqc_min << " linearization=" << report.linearization_residual
                   << " lyapunov_slack=" << report.lyapunov_min_slack << " main_max_eig=" << report.main_lmi_max_eig;
            check("design " + subset_label(d.subset) + " verified", report.valid, detail.str());
        }
    }

    void estimate_stage() {
        if (bank_q() == 0) {
            single_observer_runs(false);
        } else {
            bank_runs(s_, "", false);
        }
    }

    void isolate_stage() {
        if (s_.q_star <= 0) throw std::invalid_argument("isolation needs q_star > 0");
        isolation_runs(s_);
    }

    void run_stage() {
        designs();
        verify_stage();
        if (s_.q_star > 0) {
            simulate_stage();
            isolation_runs(s_);
        } else if (s_.q > 0) {
            simulate_stage();
            if (s_.mode == Mode::kExample2) {
                example2_runs();
            } else {
                bank_runs(s_, "", true);
            }
        } else {
            simulate_stage();
            single_observer_runs(true);
        }
    }

private:
    int bank_q() const { return s_.q_star > 0 ? s_.q_star : s_.q; }

    void log(const std::string& msg) const {
        if (ctx_.log) *ctx_.log << msg << '\n';
    }

    void check(std::string name, bool passed, std::string detail) {
        log(std::string(passed ? "ok   " : "FAIL ") + name + (detail.empty() ? "" : "  (" + detail + ")"));
        result_.checks.push_back({std::move(name), passed, std::move(detail)});
    }

    void write_json(const std::string& rel, const nlohmann::json& doc, bool record = true) {
        const fs::path path = out_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << doc.dump(2) << '\n';
        if (record) result_.files.push_back(rel);
    }

    template <class Fn>
    void write_csv(const std::string& rel, Fn&& fn) {
        const fs::path path = out_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        fn(f);
        result_.files.push_back(rel);
    }

    const std::vector<ObserverDesign>& designs() {
        if (designs_) return *designs_;
        std::vector<ObserverDesign> out;
        if (bank_q() > 0) {
            log("synthesizing " + std::to_string(bank_subsets(model_.p(), bank_q()).size()) + " bank observers");
            out = synthesize_bank(model_, bank_q(), options_);
        } else {
            log("synthesizing the all-sensor observer");
            out.push_back(synthesize(model_, full_set(model_), options_));
        }
        for (const auto& d : out) {
            write_json("designs/design_" + subset_label(d.subset) + ".json", to_json(d));
            log("  " + subset_label(d.subset) + ": c3=" + fmt_number(d.c3) + " gamma=" + fmt_number(d.certificate.gamma));
        }
        check("synthesis feasible for every required subset", true, std::to_string(out.size()) + " designs");
        designs_ = std::move(out);
        return *designs_;
    }

    Vector xhat0() const { return s_.xhat0.size() > 0 ? s_.xhat0 : Vector::Zero(model_.n()); }

    void single_observer_runs(bool assert_bounds) {
        const ObserverDesign& design = designs().front();
        bool iss_ok = true;
        double worst_slack = std::numeric_limits<double>::infinity();
        for (const auto seed : s_.seeds) {
            const Trace trace = simulate(s_, model_, seed);
            const auto errors = error_trace(model_, design, trace, xhat0());
            const auto bound = iss_bound(design, trace, errors.front());
            for (std::size_t k = 0; k < errors.size(); ++k) {
                const double slack = bound[k] + 1e-6 - errors[k].norm();
                worst_slack = std::min(worst_slack, slack);
                iss_ok = iss_ok && slack >= 0.0;
            }
            write_csv("error_seed" + std::to_string(seed) + ".csv", [&](std::ostream& o) {
                o << "k";
                for (int i = 1; i <= model_.n(); ++i) o << ",e" << i;
                o << ",e_norm,bound\n";
                for (std::size_t k = 0; k < errors.size(); ++k) {
                    o << k;
                    for (int i = 0; i < model_.n(); ++i) o << ',' << fmt_number(errors[k](i));
                    o << ',' << fmt_number(errors[k].norm()) << ',' << fmt_number(bound[k]) << '\n';
                }
            });
        }
        if (!assert_bounds) return;
        check("ISS bound holds at every step of every seed", iss_ok, "worst slack " + fmt_number(worst_slack));
        if (s_.mode == Mode::kExample1)
            check("gamma <= 1.05", design.certificate.gamma <= 1.05, "gamma=" + fmt_number(design.certificate.gamma));
    }

    // Runs the bank for every seed; returns per-seed tail errors sup_{k >= K/2}.
    std::vector<double> bank_runs(const Scenario& variant, const std::string& tag, bool assert_ceiling) {
        const auto& ds = designs();
        const int from = variant.horizon / 2;
        std::vector<double> tails;
        double gamma_bar = 0.0;
        for (const auto& d : ds) {
            bool clean = true;
            for (const int w : variant.attack.support)
                clean = clean && !std::binary_search(d.subset.begin(), d.subset.end(), w);
            if (clean || !variant.attack.active()) gamma_bar = std::max(gamma_bar, d.certificate.gamma);
        }
        gamma_bar *= 3.0;
        bool ceiling_ok = true;
        std::string ceiling_detail;
        for (const auto seed : variant.seeds) {
            const Trace trace = simulate(variant, model_, seed);
            EstimatorBank bank(model_, bank_q(), ds, xhat0());
            bank.set_threads(ctx_.threads);
            const BankLog log = run_bank(bank, trace);
            write_csv("bank" + tag + "_seed" + std::to_string(seed) + ".csv", [&](std::ostream& o) { write_bank_csv(o, log); });
            const double tail = tail_sup(log.e_norm, from);
            tails.push_back(tail);
            double noise_sup = 0.0;
            for (const auto& m : trace.m) noise_sup = std::max(noise_sup, m.norm());
            if (tail > gamma_bar * noise_sup) {
                ceiling_ok = false;
                ceiling_detail = "seed " + std::to_string(seed) + ": " + fmt_ratio(tail, gamma_bar * noise_sup);
            }
        }
        if (assert_ceiling)
            check("tail error within 3 max gamma |m|" + tag, ceiling_ok,
                  ceiling_ok ? "gamma_bar=" + fmt_number(gamma_bar) : ceiling_detail);
        return tails;
    }

    static double mean(const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    void example2_runs() {
        const double b = s_.attack.hi;
        Scenario free = s_;
        set_attack_bound(free, 0.0);
        Scenario unit = s_;
        set_attack_bound(unit, 1.0);

        const double tail_b = mean(bank_runs(s_, "_b" + fmt_number(b), true));
        const double tail_free = mean(bank_runs(free, "_free", true));
        const double tail_1 = b == 1.0 ? tail_b : mean(bank_runs(unit, "_b1", true));
        check("tail error for b=" + fmt_number(b) + " within 25% above b=1", tail_b <= 1.25 * tail_1, fmt_ratio(tail_b, tail_1));
        check("tail error for b=" + fmt_number(b) + " within 25% of attack-free", std::abs(tail_b - tail_free) <= 0.25 * tail_free,
              fmt_ratio(tail_b, tail_free));
    }

    void isolation_runs(const Scenario& variant) {
        const auto& ds = designs();
        int hits = 0;
        int windows = 0;
        for (const auto seed : variant.seeds) {
            const Trace trace = simulate(variant, model_, seed);
            EstimatorBank bank(model_, variant.q_star, ds, xhat0());
            bank.set_threads(ctx_.threads);
            const IsolationReport report = isolate(bank, trace, variant.isolation);
            write_csv("isolation_seed" + std::to_string(seed) + ".csv", [&](std::ostream& o) { write_isolation_csv(o, report); });
            if (variant.attack.active()) {
                const auto summary = evaluate(report, variant.attack.support);
                for (const bool h : summary.hits) hits += h ? 1 : 0;
                windows += static_cast<int>(summary.hits.size());
            }
        }
        if (!variant.attack.active()) return;
        if (static_cast<int>(variant.attack.support.size()) != variant.q_star) {
            log("attacked set size differs from q*; accusations are not meaningful");
            return;
        }
        const double accuracy = windows > 0 ? static_cast<double>(hits) / windows : 0.0;
        check("attacked set accused in at least 80% of windows", accuracy >= 0.8,
              std::to_string(hits) + "/" + std::to_string(windows) + " windows");
    }

    const Scenario& s_;
    const RunContext& ctx_;
    PlantModel model_;
    SynthesisOptions options_;
    fs::path out_;
    RunResult result_;
    std::optional<std::vector<ObserverDesign>> designs_;
};

}  // namespace

RunResult execute(const Scenario& scenario, Stage stage, const RunContext& context) {
    Pipeline pipeline(scenario, context);
    switch (stage) {
        case Stage::kSynthesize: pipeline.synthesize_stage(); break;
        case Stage::kSimulate: pipeline.simulate_stage(); break;
        case Stage::kEstimate: pipeline.estimate_stage(); break;
        case Stage::kIsolate: pipeline.isolate_stage(); break;
        case Stage::kVerify: pipeline.verify_stage(); break;
        case Stage::kRun: pipeline.run_stage(); break;
    }
    return pipeline.finish(stage);
}

}  // namespace sentinel
