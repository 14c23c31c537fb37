#include <cmath>

#include "doctest.h"
#include "random_sdp.hpp"
#include "sdp_oracle.hpp"
#include "sentinel/sdp.hpp"

using namespace sentinel;

TEST_CASE("oracle reproduces analytic optima") {
    const Vector a = (Vector(3) << 1.0, -2.0, 0.5).finished();
    const Vector d = (Vector(3) << 2.0, 4.0, 0.25).finished();
    const double expected = 0.5 + 1.0 + 1.0;
    const auto r = oracle::solve_sdp(oracle::schur_family(a, d), 10.0);
    REQUIRE(r.has_value());
    CHECK(r->objective == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("solver matches the oracle on a random 4-variable problem") {
    const sdp::SdpProblem p = oracle::random_sdp(404, 4, 3.0);
    const auto ref = oracle::solve_sdp(p, 3.0);
    REQUIRE(ref.has_value());
    const sdp::SdpSolution s = sdp::solve(p);
    REQUIRE(s.status == sdp::SolveStatus::kOptimal);
    CHECK(std::abs(s.objective - ref->objective) <= 1e-4);
}

TEST_CASE("solver matches the oracle on random problems of 1 to 5 variables") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const int nvars = 1 + static_cast<int>(seed % 5);
        const sdp::SdpProblem p = oracle::random_sdp(seed, nvars, 2.0);
        const auto ref = oracle::solve_sdp(p, 2.0);
        REQUIRE(ref.has_value());
        const sdp::SdpSolution s = sdp::solve(p);
        CAPTURE(seed);
        REQUIRE(s.status == sdp::SolveStatus::kOptimal);
        CHECK(std::abs(s.objective - ref->objective) <= std::max(1e-4, 1e-3 * std::abs(ref->objective)));
    }
}
