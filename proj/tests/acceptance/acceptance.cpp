// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 after reporting
// unless --strict is given, in which case any FAIL makes the exit status 1.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "bank_oracle.hpp"
#include "random_sdp.hpp"
#include "sdp_oracle.hpp"
#include "sentinel/estimator.hpp"
#include "sentinel/isolation.hpp"
#include "sentinel/observer.hpp"
#include "sentinel/parallel.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/synthesis.hpp"

using namespace sentinel;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

const PlantModel& plant(double alpha) {
    static const PlantModel nonlinear = example_model(0.1, 1.0);
    static const PlantModel linear = example_model(0.1, 0.0);
    return alpha == 0.0 ? linear : nonlinear;
}

const std::vector<ObserverDesign>& bank_designs(double alpha) {
    static const std::vector<ObserverDesign> nonlinear = synthesize_bank(plant(1.0), 1);
    static const std::vector<ObserverDesign> linear = synthesize_bank(plant(0.0), 1);
    return alpha == 0.0 ? linear : nonlinear;
}

unsigned threads() { return thread_count_from_env(); }

Outcome example1_synthesis(ObserverDesign& out) {
    const auto t0 = std::chrono::steady_clock::now();
    SynthesisOptions options;
    options.threads = threads();
    out = synthesize(plant(1.0), full_set(plant(1.0)), options);
    const double elapsed = seconds_since(t0);
    const bool band = out.c3 >= 0.85 && out.c3 <= 0.95;
    const bool gamma = out.certificate.gamma <= 1.05;
    return {band && gamma && elapsed <= 60.0,
            fmt("c3=%.3f (band [0.85,0.95] %s), gamma=%.4f (<=1.05 %s), %.1fs", out.c3, band ? "ok" : "missed",
                out.certificate.gamma, gamma ? "ok" : "missed", elapsed)};
}

Outcome iss_certificate(const ObserverDesign& design) {
    double worst_noisy = std::numeric_limits<double>::infinity();
    double worst_clean = std::numeric_limits<double>::infinity();
    for (const bool noisy : {true, false}) {
        Scenario s = example_scenario(Mode::kExample1);
        if (!noisy) s.noise = {0.0, 0.0, std::nullopt};
        for (const auto seed : s.seeds) {
            const Trace t = simulate(s, plant(1.0), seed);
            const auto e = error_trace(plant(1.0), design, t, Vector::Zero(2));
            const auto bound = iss_bound(design, t, e.front(), noisy);
            double& worst = noisy ? worst_noisy : worst_clean;
            for (std::size_t k = 0; k < e.size(); ++k) worst = std::min(worst, bound[k] + 1e-6 - e[k].norm());
        }
    }
    return {worst_noisy >= 0.0 && worst_clean >= 0.0,
            fmt("20 seeds x 501 steps; min slack noisy=%.3g, noise-free=%.3g", worst_noisy, worst_clean)};
}

Outcome dqc_suite() {
    std::vector<Nonlinearity> fs = {nonlinearity::zero(), nonlinearity::identity(), nonlinearity::cubic(),
                                    nonlinearity::linear(2.0)};
    for (const char* raw : {"sin", "tanh"}) {
        Nonlinearity g = nonlinearity::by_name(raw);
        Nonlinearity f = g;
        f.name = std::string("v+") + raw;
        f.eval = [g](double v) { return v + g(v); };
        fs.push_back(f);
    }
    SplitMix64 rng(303);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& f : fs) {
        for (const double kappa : {1e-3, 1.0, 250.0}) {
            for (int s = 0; s < 10000; ++s) {
                const double q1 = rng.uniform(-20, 20);
                const double q2 = (s % 3 == 0) ? q1 + rng.uniform(-1e-3, 1e-3) : rng.uniform(-20, 20);
                // [dq; df]' kappa [[0, 1], [1, 0]] [dq; df]
                worst = std::min(worst, 2.0 * kappa * (q1 - q2) * (f(q1) - f(q2)));
            }
        }
    }
    return {worst >= -1e-12, fmt("%zu nonlinearities x 3 kappa x 1e4 pairs; min slack %.3g", fs.size(), worst)};
}

Outcome linearization_suite() {
    SplitMix64 rng(404);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + trial % 4, ny = 1 + (trial / 4) % 4, r = 1 + (trial / 16) % 3;
        PlantModel m;
        auto rnd = [&](int rows, int cols) {
            Matrix M(rows, cols);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) M(i, j) = rng.uniform(-2, 2);
            return M;
        };
        m.A = rnd(n, n);
        m.G = rnd(n, r);
        m.H = rnd(r, n);
        m.C = rnd(ny, n);
        m.f.assign(static_cast<std::size_t>(r), nonlinearity::identity());
        std::vector<int> all(static_cast<std::size_t>(ny));
        std::iota(all.begin(), all.end(), 1);
        const LmiInstance inst(m, subset(m, all), rng.uniform(0.01, 0.99), MultiplierKind::kMonotone);
        LmiVariables v;
        const Matrix R = rnd(n, n);
        v.P = R * R.transpose() + Matrix::Identity(n, n);
        v.Y = rnd(n, ny);
        v.kappa = rng.uniform(1e-3, 10.0);
        v.Y2 = rnd(r, ny);
        const Matrix K = v.Y2 / v.kappa;
        const Matrix M = inst.multiplier(v.kappa);
        const Matrix G = inst.gamma(K), G1 = inst.gamma1(), G2 = inst.gamma2(v.Y2);
        worst = std::max(worst, (G.transpose() * M * G - (G1.transpose() * M * G1 + G1.transpose() * G2 + G2.transpose() * G1)).norm());
    }
    return {worst <= 1e-10, fmt("1000 random tuples; max residual %.3g", worst)};
}

Outcome sdp_oracle_suite() {
    int matched = 0, total = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    std::string first_miss;
    auto compare = [&](const sdp::SdpProblem& p, double reference, const std::string& name) {
        const sdp::SdpSolution s = sdp::solve(p);
        const double tol = std::max(1e-4, 1e-3 * std::abs(reference));
        const double err = std::abs(s.objective - reference);
        const bool ok = s.status == sdp::SolveStatus::kOptimal && err <= tol;
        worst_excess = std::max(worst_excess, err - tol);
        matched += ok ? 1 : 0;
        ++total;
        if (!ok && first_miss.empty()) first_miss = name;
    };

    SplitMix64 rng(505);
    for (int i = 0; i < 10; ++i) {
        const int m = 1 + i % 4;
        Vector a(m), d(m);
        for (int j = 0; j < m; ++j) {
            a(j) = rng.uniform(-3, 3);
            d(j) = rng.uniform(0.2, 5);
        }
        const auto p = oracle::schur_family(a, d);
        const auto ref = oracle::solve_sdp(p, 40.0);
        const double analytic = a.cwiseQuotient(d).dot(a);
        // The oracle is held to the analytic value too.
        if (!ref || std::abs(ref->objective - analytic) > 1e-5 * std::max(1.0, analytic)) {
            if (first_miss.empty()) first_miss = "oracle schur " + std::to_string(i);
            ++total;
            continue;
        }
        compare(p, analytic, "schur " + std::to_string(i));
    }
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const int nvars = 1 + static_cast<int>(seed % 5);
        const auto p = oracle::random_sdp(1000 + seed, nvars, 2.0);
        const auto ref = oracle::solve_sdp(p, 2.0);
        if (!ref) {
            if (first_miss.empty()) first_miss = "oracle random " + std::to_string(seed);
            ++total;
            continue;
        }
        compare(p, ref->objective, "random " + std::to_string(seed));
    }
    return {matched == total, fmt("%d/%d matched (10 Schur, 50 random); worst excess over tolerance %.3g%s", matched, total,
                                  worst_excess, first_miss.empty() ? "" : ("; first miss " + first_miss).c_str())};
}

double bank_tail(double b, std::uint64_t seed) {
    Scenario s = example_scenario(Mode::kExample2);
    set_attack_bound(s, b);
    const Trace t = simulate(s, plant(1.0), seed);
    EstimatorBank bank(plant(1.0), 1, bank_designs(1.0), Vector::Zero(2));
    const BankLog log = run_bank(bank, t);
    return tail_sup(log.e_norm, 250);
}

Outcome example2_robustness() {
    std::vector<double> free, b1, b10;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        free.push_back(bank_tail(0.0, seed));
        b1.push_back(bank_tail(1.0, seed));
        b10.push_back(bank_tail(10.0, seed));
    }
    const double m_free = mean(free), m1 = mean(b1), m10 = mean(b10);
    const bool vs_b1 = m10 <= 1.25 * m1;
    const bool vs_free = std::abs(m10 - m_free) <= 0.25 * m_free;
    return {vs_b1 && vs_free,
            fmt("mean sup_{k>=250}|e| over 20 seeds: b=10 %.4f, b=1 %.4f (ratio %.3f, %s), attack-free %.4f (ratio %.3f, %s)",
                m10, m1, m10 / m1, vs_b1 ? "ok" : "over", m_free, m10 / m_free, vs_free ? "ok" : "over")};
}

double isolation_accuracy(double alpha) {
    int hits = 0, windows = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Scenario s = example_scenario(Mode::kExample3);
        s.alpha = alpha;
        const Trace t = simulate(s, plant(alpha), seed);
        EstimatorBank bank(plant(alpha), 1, bank_designs(alpha), Vector::Zero(2));
        const IsolationReport r = isolate(bank, t, s.isolation);
        for (const bool h : evaluate(r, {3}).hits) hits += h ? 1 : 0;
        windows += static_cast<int>(r.windows.size());
    }
    return static_cast<double>(hits) / windows;
}

Outcome example3_isolation() {
    const double nonlinear = isolation_accuracy(1.0);
    const double linear = isolation_accuracy(0.0);
    return {nonlinear >= 0.8 && linear >= 0.8,
            fmt("accuracy over 20 seeds x 10 windows: alpha=1 %.3f, alpha=0 %.3f (threshold 0.8)", nonlinear, linear)};
}

Outcome brute_force_bank() {
    int mismatches = 0, steps = 0;
    for (const double alpha : {1.0, 0.0}) {
        const PlantModel& m = plant(alpha);
        SplitMix64 rng(alpha == 0.0 ? 808 : 809);
        EstimatorBank bank(m, 1, bank_designs(alpha), Vector::Zero(2));
        oracle::BruteForceBank brute(m, 1, bank_designs(alpha), Vector::Zero(2));
        for (int k = 0; k < 100; ++k) {
            Vector y(4);
            for (int i = 0; i < 4; ++i) y(i) = rng.uniform(-5, 5);
            bank.step(y, Vector::Zero(1));
            brute.step(y, Vector::Zero(1));
            const auto pi = brute.pi();
            bool same = bank.sigma() == brute.sigma() && (bank.estimate().array() == brute.estimate().array()).all();
            for (std::size_t j = 0; j < pi.size(); ++j) same = same && bank.pi()(static_cast<Eigen::Index>(j)) == pi[j];
            mismatches += same ? 0 : 1;
            ++steps;
        }
    }
    return {mismatches == 0, fmt("%d steps over 2 banks, %d mismatches (exact comparison)", steps, mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    int failed = 0;
    auto report = [&](int id, const char* title, const Outcome& o) {
        std::printf("criterion %d: %s  %s  [%s]\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    };

    ObserverDesign design;
    report(1, "example-1 synthesis", example1_synthesis(design));
    report(2, "ISS certificate validity", iss_certificate(design));
    report(3, "incremental quadratic constraint", dqc_suite());
    report(4, "linearized multiplier identity", linearization_suite());
    report(5, "SDP oracle equivalence", sdp_oracle_suite());
    report(6, "example-2 robustness", example2_robustness());
    report(7, "example-3 isolation accuracy", example3_isolation());
    report(8, "brute-force pi/sigma equivalence", brute_force_bank());
    std::printf("%d/8 criteria passed\n", 8 - failed);
    return strict && failed > 0 ? 1 : 0;
}
