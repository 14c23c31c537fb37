#include <cmath>

#include "doctest.h"
#include "sentinel/model.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/scenario.hpp"

using namespace sentinel;

namespace {

Matrix raw_A() { return (Matrix(2, 2) << 1.0, 0.1, 0.0, 1.0).finished(); }
Matrix raw_G() { return (Matrix(2, 1) << 0.05, 0.1).finished(); }
Matrix raw_H() { return (Matrix(1, 2) << 1.0, 1.0).finished(); }

}  // namespace

TEST_CASE("monotonize rewrites the sine plant") {
    const PlantModel m = monotonize(raw_A(), raw_G(), raw_H(), nonlinearity::sine());
    const Matrix expected = (Matrix(2, 2) << 0.95, 0.05, -0.1, 0.9).finished();
    CHECK((m.A - expected).norm() < 1e-15);
    CHECK(m.f.size() == 1);
    CHECK(m.f[0](0.3) == doctest::Approx(0.3 + std::sin(0.3)).epsilon(1e-15));

    SplitMix64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vector x = (Vector(2) << rng.uniform(-5, 5), rng.uniform(-5, 5)).finished();
        const double v = (raw_H() * x)(0);
        const Vector raw = raw_A() * x + raw_G() * std::sin(v);
        const Vector rewritten = m.A * x + m.G * m.f[0](v);
        worst = std::max(worst, (raw - rewritten).norm());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("monotonize with zero nonlinearity keeps the dynamics") {
    const PlantModel m = monotonize(raw_A(), raw_G(), raw_H(), nonlinearity::zero());
    CHECK((m.A - (raw_A() - raw_G() * raw_H())).norm() == 0.0);
    const Vector x = (Vector(2) << 0.7, -1.2).finished();
    const Vector rewritten = m.A * x + m.G * m.apply_f(m.H * x);
    CHECK((rewritten - raw_A() * x).norm() < 1e-15);
}

TEST_CASE("monotonize rejects a decreasing rewrite") {
    CHECK_THROWS_AS(monotonize(raw_A(), raw_G(), raw_H(), nonlinearity::linear(-2.0)), std::invalid_argument);
}

TEST_CASE("implemented nonlinearities have nonnegative difference quotients") {
    for (const char* name : {"zero", "identity", "sin", "tanh", "cubic"}) {
        Nonlinearity f = nonlinearity::by_name(name);
        if (std::string(name) == "sin" || std::string(name) == "tanh") {
            // The raw bounded ones enter through v + g(v).
            const Nonlinearity g = f;
            f.eval = [g](double v) { return v + g(v); };
        }
        CAPTURE(name);
        CHECK(min_difference_quotient(f, 10000, 5) >= -1e-12);
    }
    CHECK(min_difference_quotient(nonlinearity::linear(-1.0)) < 0.0);
}

TEST_CASE("subset extraction") {
    const PlantModel m = example_model();
    const SensorSubset all = subset(m, {1, 2, 3, 4});
    CHECK((all.C - m.C).norm() == 0.0);

    const SensorSubset s12 = subset(m, {1, 2});
    const Matrix expected = (Matrix(2, 2) << 3, 0.3, 3, 0.6).finished();
    CHECK((s12.C - expected).norm() == 0.0);
    CHECK(s12.label() == "1-2");

    CHECK_THROWS_AS(subset(m, {5}), std::invalid_argument);
    CHECK_THROWS_AS(subset(m, {0}), std::invalid_argument);
    CHECK_THROWS_AS(subset(m, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(subset(m, {}), std::invalid_argument);

    CHECK(subset(m, {3, 1}).indices == std::vector<int>{1, 3});
    CHECK(parse_subset_label("1-2-4") == std::vector<int>{1, 2, 4});
    CHECK(subset_label({2, 3}) == "2-3");
}

TEST_CASE("simulate_plant") {
    const PlantModel m = example_model();

    SUBCASE("origin is a fixed point without noise or attack") {
        PlantModel quiet = m;
        quiet.rho = nullptr;
        const Trace t = simulate_plant(quiet, Vector::Zero(2), {}, SignalSpec::zero(), SignalSpec::zero(), 50);
        REQUIRE(t.x.size() == 51);
        for (const auto& x : t.x) CHECK(x.norm() == 0.0);
    }

    SUBCASE("noise stays inside its bounds and outputs follow the sensor equation") {
        const Vector x0 = (Vector(2) << 0.4, -0.9).finished();
        const Trace t = simulate_plant(m, x0, {}, SignalSpec::uniform(-0.5, 0.5, 9), SignalSpec::zero(), 300);
        for (int k = 0; k <= 300; ++k) {
            CHECK(t.m[k].cwiseAbs().maxCoeff() <= 0.5);
            CHECK((t.y[k] - (m.C * t.x[k] + t.a[k] + t.m[k])).norm() == 0.0);
        }
    }

    SUBCASE("attack confined to its support") {
        const Trace t = simulate_plant(m, Vector::Zero(2), {}, SignalSpec::zero(), SignalSpec::uniform(-10, 10, 4, {3}), 200);
        for (const auto& a : t.a) {
            CHECK(a(0) == 0.0);
            CHECK(a(1) == 0.0);
            CHECK(a(3) == 0.0);
            CHECK(std::abs(a(2)) < 10.0);
        }
    }

    SUBCASE("identical seeds reproduce bit for bit") {
        const Vector x0 = (Vector(2) << 1.0, 2.0).finished();
        const auto run = [&] {
            return simulate_plant(m, x0, {}, SignalSpec::uniform(-0.5, 0.5, 77), SignalSpec::uniform(-1, 1, 78, {2}), 100);
        };
        const Trace a = run();
        const Trace b = run();
        for (int k = 0; k <= 100; ++k) {
            CHECK((a.x[k].array() == b.x[k].array()).all());
            CHECK((a.y[k].array() == b.y[k].array()).all());
        }
    }

    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(simulate_plant(m, Vector::Zero(3), {}, SignalSpec::zero(), SignalSpec::zero(), 5),
                        std::invalid_argument);
        CHECK_THROWS_AS(simulate_plant(m, Vector::Zero(2), {}, SignalSpec::zero(), SignalSpec::uniform(-1, 1, 1, {7}), 5),
                        std::invalid_argument);
    }
}

TEST_CASE("SplitMix64 reference stream") {
    // First outputs for seed 0 from the published reference implementation.
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);

    SplitMix64 u(42);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform(-0.5, 0.5);
        CHECK(v > -0.5);
        CHECK(v < 0.5);
    }
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
}
