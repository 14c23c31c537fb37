#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/synthesis.hpp"

using namespace sentinel;

namespace {

Matrix random_matrix(SplitMix64& rng, int rows, int cols) {
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = rng.uniform(-2, 2);
    return M;
}

// Gamma blocks written out from their definitions, independent of LmiInstance.
struct Gammas {
    Matrix G, G1, G2;
};

Gammas hand_gammas(const Matrix& H, const Matrix& C, const Matrix& K, double kappa) {
    const auto r = H.rows(), n = H.cols(), ny = C.rows();
    Gammas g;
    g.G = Matrix::Zero(2 * r, n + ny + r);
    g.G.block(0, 0, r, n) = H + K * C;
    g.G.block(0, n, r, ny) = -K;
    g.G.block(r, n + ny, r, r).setIdentity();
    g.G1 = Matrix::Zero(2 * r, n + ny + r);
    g.G1.block(0, 0, r, n) = H;
    g.G1.block(r, n + ny, r, r).setIdentity();
    const Matrix Y2 = kappa * K;
    g.G2 = Matrix::Zero(2 * r, n + ny + r);
    g.G2.block(r, 0, r, n) = Y2 * C;
    g.G2.block(r, n, r, ny) = -Y2;
    return g;
}

}  // namespace

TEST_CASE("assembly sizes for the example plant") {
    const PlantModel& m = fixtures::example_plant();
    const AssembledLmi lmi = assemble(m, full_set(m), 0.9);
    CHECK(lmi.instance.main_size() == 9);
    CHECK(lmi.instance.coupling_size() == 4);
    CHECK(lmi.instance.variable_count() == 18);
    CHECK(lmi.problem.nvars == 18);
    CHECK_NOTHROW(lmi.problem.validate());

    CHECK_THROWS_AS(assemble(m, full_set(m), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(assemble(m, full_set(m), 1.0), std::invalid_argument);
}

TEST_CASE("assembly with G = 0 keeps the multiplier rows") {
    const PlantModel m = example_model(0.1, 0.0);
    CHECK(m.G.norm() == 0.0);
    const AssembledLmi lmi = assemble(m, full_set(m), 0.5);
    CHECK(lmi.instance.main_size() == 9);
    CHECK_NOTHROW(lmi.problem.validate());
}

TEST_CASE("pack and unpack are inverse") {
    const PlantModel& m = fixtures::example_plant();
    const LmiInstance inst(m, subset(m, {1, 2, 4}), 0.3);
    SplitMix64 rng(8);
    const Vector z = random_matrix(rng, inst.variable_count(), 1);
    const LmiVariables v = inst.unpack(z);
    CHECK((inst.pack(v) - z).norm() == 0.0);
    CHECK((v.P - v.P.transpose()).norm() == 0.0);
}

TEST_CASE("assembled blocks are affine in the variables") {
    const PlantModel& m = fixtures::example_plant();
    const AssembledLmi lmi = assemble(m, full_set(m), 0.7, MultiplierKind::kSlopeRestricted, 0.0);
    SplitMix64 rng(21);
    const Vector z = random_matrix(rng, lmi.problem.nvars, 1);
    const LmiVariables v = lmi.instance.unpack(z);
    // Block 0 is -main >= 0, block 1 is the coupling block.
    CHECK((lmi.problem.block_value(0, z) + lmi.instance.main_block(v)).norm() < 1e-10);
    CHECK((lmi.problem.block_value(1, z) - lmi.instance.coupling_block(v)).norm() < 1e-10);
}

TEST_CASE("linearized multiplier identity on random tuples") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3, ny = 1 + trial % 4, r = 1 + trial % 2;
        const Matrix H = random_matrix(rng, r, n), C = random_matrix(rng, ny, n), K = random_matrix(rng, r, ny);
        const double kappa = rng.uniform(0.01, 10.0);
        Matrix M = Matrix::Zero(2 * r, 2 * r);
        M.topRightCorner(r, r).setIdentity();
        M.bottomLeftCorner(r, r).setIdentity();
        M *= kappa;
        const Gammas g = hand_gammas(H, C, K, kappa);
        const double residual =
            (g.G.transpose() * M * g.G - (g.G1.transpose() * M * g.G1 + g.G1.transpose() * g.G2 + g.G2.transpose() * g.G1))
                .norm();
        CHECK(residual <= 1e-10);
    }
}

TEST_CASE("LmiInstance gamma blocks match their definitions") {
    const PlantModel& m = fixtures::example_plant();
    const SensorSubset s = subset(m, {1, 3, 4});
    const LmiInstance inst(m, s, 0.4);
    SplitMix64 rng(6);
    const Matrix K = random_matrix(rng, 1, 3);
    const Gammas g = hand_gammas(m.H, s.C, K, 2.5);
    CHECK((inst.gamma(K) - g.G).norm() == 0.0);
    CHECK((inst.gamma1() - g.G1).norm() == 0.0);
    CHECK((inst.gamma2(2.5 * K) - g.G2).norm() < 1e-14);
}

TEST_CASE("example design") {
    const PlantModel& m = fixtures::example_plant();
    const ObserverDesign& d = fixtures::example_design();

    CHECK(d.c3 > 0.0);
    CHECK(d.c3 < 1.0);
    CHECK(d.certificate.gamma * d.certificate.gamma == doctest::Approx(d.mu * d.mu1).epsilon(1e-12));
    CHECK(d.certificate.lambda * d.certificate.lambda + d.c3 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.certificate.c >= 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(d.P, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= 1e-6 * (1 - 1e-3));
    CHECK(d.grid.size() >= 19);
    CHECK((d.L - d.P.ldlt().solve(d.variables().Y)).norm() < 1e-9);

    const VerificationReport report = verify_design(m, full_set(m), d, 10000);
    CHECK(report.dqc_ok);
    CHECK(report.linearization_ok);
    CHECK(report.lyapunov_ok);
    CHECK(report.lyapunov_min_slack >= -1e-8);
    CHECK(report.lmi_ok);
    CHECK(report.main_lmi_max_eig <= 1e-7);
    CHECK(report.valid);
}

TEST_CASE("winner is the smallest gamma on the grid") {
    const ObserverDesign& d = fixtures::example_design();
    for (const auto& gp : d.grid)
        if (gp.status == sdp::SolveStatus::kOptimal) CHECK(d.certificate.gamma <= gp.gamma + 1e-9);
}

TEST_CASE("warm start at the winning c3 stays feasible") {
    const PlantModel& m = fixtures::example_plant();
    const ObserverDesign& d = fixtures::example_design();
    const LmiInstance inst(m, full_set(m), d.c3);
    const Vector warm = inst.pack(d.variables());
    GridPoint gp;
    const auto again = design_at(m, full_set(m), d.c3, {}, &warm, &gp);
    REQUIRE(again.has_value());
    CHECK(gp.status == sdp::SolveStatus::kOptimal);
    CHECK(again->certificate.gamma == doctest::Approx(d.certificate.gamma).epsilon(1e-3));
}

TEST_CASE("negative multiplier scale breaks the incremental constraint") {
    const PlantModel& m = fixtures::example_plant();
    ObserverDesign d = fixtures::example_design();
    d.kappa = -1.0;
    const VerificationReport report = verify_design(m, full_set(m), d, 2000);
    CHECK_FALSE(report.dqc_ok);
    CHECK_FALSE(report.valid);
}

TEST_CASE("single sensor subset returns a design or a clean infeasibility") {
    const PlantModel& m = fixtures::example_plant();
    SynthesisOptions options;
    options.grid.points = {0.1, 0.5, 0.9};
    try {
        const ObserverDesign d = synthesize(m, subset(m, {3}), options);
        CHECK(d.subset == std::vector<int>{3});
        CHECK(d.L.cols() == 1);
    } catch (const InfeasibleSubsetError& e) {
        CHECK(e.subset() == std::vector<int>{3});
    }
}

TEST_CASE("infeasible subset names itself") {
    // Unobservable pair: the plant diverges and no sensor sees the second state.
    PlantModel m = fixtures::example_plant();
    m.A = (Matrix(2, 2) << 0.5, 0.0, 0.0, 1.5).finished();
    m.G = Matrix::Zero(2, 1);
    m.C = (Matrix(1, 2) << 1.0, 0.0).finished();
    SynthesisOptions options;
    options.grid.points = {0.2, 0.6};
    options.solver.max_iter = 4000;
    CHECK_THROWS_AS(synthesize(m, full_set(m), options), InfeasibleSubsetError);
}

TEST_CASE("coarse grid") {
    const auto g = coarse_grid(0.05);
    REQUIRE(g.size() == 19);
    CHECK(g.front() == doctest::Approx(0.05));
    CHECK(g.back() == doctest::Approx(0.95));
}

TEST_CASE("design json round-trip") {
    const ObserverDesign& d = fixtures::example_design();
    const ObserverDesign back = design_from_json(nlohmann::json::parse(to_json(d).dump()));
    CHECK(back.subset == d.subset);
    CHECK(back.c3 == d.c3);
    CHECK((back.K - d.K).norm() == 0.0);
    CHECK((back.L - d.L).norm() == 0.0);
    CHECK((back.P - d.P).norm() == 0.0);
    CHECK(back.kappa == d.kappa);
    CHECK(back.certificate.gamma == d.certificate.gamma);
    CHECK(back.multiplier == d.multiplier);

    nlohmann::json broken = to_json(d);
    broken["L"] = nlohmann::json::array({nlohmann::json::array({1.0})});
    CHECK_THROWS(design_from_json(broken));
}

TEST_CASE("channels with a zero G column drop out of the synthesis") {
    const PlantModel m = example_model(0.1, 0.0);
    SynthesisOptions options;
    options.grid.points = {0.3, 0.6};
    const ObserverDesign d = synthesize(m, full_set(m), options);
    CHECK(d.K.rows() == 1);
    CHECK(d.K.norm() == 0.0);
    const VerificationReport report = verify_design(m, full_set(m), d, 2000);
    CHECK(report.valid);
}
