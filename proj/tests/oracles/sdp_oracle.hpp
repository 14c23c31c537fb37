#pragma once

#include <optional>

#include "sentinel/sdp.hpp"

namespace oracle {

// Brute-force reference for tiny SDPs (up to ~5 variables) restricted to the box
// |z_i| <= box. A dense grid supplies a feasible starting level, then bisection
// on the objective level decides each level with an ellipsoid feasibility search
// on lambda_min. Only Eigen eigenvalues are shared with the solver under test.
struct OracleResult {
    double objective = 0.0;
    sentinel::Vector z;
};

std::optional<OracleResult> solve_sdp(const sentinel::sdp::SdpProblem& problem, double box, int grid_per_axis = 9,
                                      double level_tol = 1e-7);

// min eigenvalue across blocks and lower-bound slacks.
double min_slack(const sentinel::sdp::SdpProblem& problem, const sentinel::Vector& z);

}  // namespace oracle
