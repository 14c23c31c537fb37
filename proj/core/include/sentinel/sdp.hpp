#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sentinel/model.hpp"

namespace sentinel::sdp {

// One affine PSD constraint  F0 + sum_i z_i F_i >= 0.
struct LmiBlock {
    Matrix constant;
    std::vector<Matrix> coeffs;  // one symmetric matrix per decision variable

    int size() const { return static_cast<int>(constant.rows()); }
};

// minimize c'z  subject to every block >= 0 and z_i >= lower_bounds[i] where set.
struct SdpProblem {
    int nvars = 0;
    Vector objective;
    std::vector<LmiBlock> blocks;
    std::vector<std::optional<double>> lower_bounds;  // empty, or one entry per variable

    // Throws std::invalid_argument when shapes disagree or a matrix is not symmetric.
    void validate() const;

    double objective_value(const Vector& z) const;
    Matrix block_value(std::size_t block, const Vector& z) const;

    // Smallest eigenvalue over all blocks and bound slacks at z.
    double feasibility_margin(const Vector& z) const;
};

enum class SolveStatus { kOptimal, kInfeasible, kMaxIterations };

std::string to_string(SolveStatus status);

struct SolverSettings {
    double tol_feas = 1e-7;
    double tol_obj = 1e-6;
    int max_iter = 50000;
    double rho = 1.0;          // initial ADMM penalty, adapted during the run
    double relaxation = 1.0;   // over-relaxation in (0, 2)
    int check_every = 10;
    int anderson_memory = 24;  // 0 disables acceleration
};

struct SdpSolution {
    Vector z;
    SolveStatus status = SolveStatus::kMaxIterations;
    double objective = 0.0;
    double primal_residual = 0.0;  // ||F(z) - S||_F against the projected slack
    double dual_residual = 0.0;    // ||A'Y - c||
    double gap = 0.0;              // c'z + <F0, Y>
    double feasibility_margin = 0.0;
    int iterations = 0;
};

class SdpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pluggable solver interface; synthesis talks to this, not to a concrete method.
class SdpBackend {
public:
    virtual ~SdpBackend() = default;
    virtual SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings,
                              const Vector* warm_start = nullptr) const = 0;
    virtual std::string name() const = 0;
};

// ADMM splitting: z-step is a least-squares restoration of the affine map with an
// objective pull, S-step projects every block onto the PSD cone, then a scaled
// dual update. Blocks and variables are equilibrated first.
class SplittingSolver final : public SdpBackend {
public:
    SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings,
                      const Vector* warm_start = nullptr) const override;
    std::string name() const override { return "admm-splitting"; }
};

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {},
                  const Vector* warm_start = nullptr);

// Nearest PSD matrix in Frobenius norm (negative eigenvalues clamped to zero).
Matrix psd_project(const Matrix& S, double symmetry_tol = 1e-9);

// Problem dump/load for cross-solver debugging. Blocks are dense row-major.
nlohmann::json to_json(const SdpProblem& problem);
SdpProblem problem_from_json(const nlohmann::json& doc);

}  // namespace sentinel::sdp
