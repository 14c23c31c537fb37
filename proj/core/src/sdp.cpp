#include "sentinel/sdp.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <numbers>

namespace sentinel::sdp {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double symmetry_error(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    return (M - M.transpose()).cwiseAbs().maxCoeff();
}

// svec of a symmetric matrix: lower triangle column by column, off-diagonals scaled
// by sqrt(2) so that <svec(X), svec(Y)> = trace(XY).
void svec(const Matrix& M, double* out) {
    const auto s = M.rows();
    for (Eigen::Index j = 0; j < s; ++j) {
        *out++ = M(j, j);
        for (Eigen::Index i = j + 1; i < s; ++i) *out++ = kSqrt2 * 0.5 * (M(i, j) + M(j, i));
    }
}

void smat(const double* in, Eigen::Index s, Matrix& M) {
    for (Eigen::Index j = 0; j < s; ++j) {
        M(j, j) = *in++;
        for (Eigen::Index i = j + 1; i < s; ++i) {
            const double v = *in++ / kSqrt2;
            M(i, j) = v;
            M(j, i) = v;
        }
    }
}

struct Cone {
    Eigen::Index size;
    Eigen::Index offset;
    Eigen::Index length;
};

// The problem in vectorized form  F(z) = f0 + A z  in a product of PSD cones.
struct StandardForm {
    std::vector<Cone> cones;
    Matrix A;
    Vector f0;
    Vector c;
};

StandardForm vectorize(const SdpProblem& problem) {
    StandardForm form;
    Eigen::Index rows = 0;
    for (const auto& block : problem.blocks) {
        const Eigen::Index s = block.size();
        form.cones.push_back({s, rows, s * (s + 1) / 2});
        rows += s * (s + 1) / 2;
    }
    for (const auto& lb : problem.lower_bounds) {
        if (lb) {
            form.cones.push_back({1, rows, 1});
            rows += 1;
        }
    }

    const Eigen::Index n = problem.nvars;
    form.A = Matrix::Zero(rows, n);
    form.f0 = Vector::Zero(rows);
    form.c = problem.objective;

    for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
        const auto& block = problem.blocks[b];
        const auto& cone = form.cones[b];
        svec(block.constant, form.f0.data() + cone.offset);
        Vector column(cone.length);
        for (Eigen::Index i = 0; i < n; ++i) {
            svec(block.coeffs[static_cast<std::size_t>(i)], column.data());
            form.A.block(cone.offset, i, cone.length, 1) = column;
        }
    }
    std::size_t cone_index = problem.blocks.size();
    for (std::size_t i = 0; i < problem.lower_bounds.size(); ++i) {
        if (!problem.lower_bounds[i]) continue;
        const auto& cone = form.cones[cone_index++];
        form.A(cone.offset, static_cast<Eigen::Index>(i)) = 1.0;
        form.f0(cone.offset) = -*problem.lower_bounds[i];
    }
    return form;
}

// Projects every cone segment of v onto the PSD cone in place.
class ConeProjector {
public:
    explicit ConeProjector(const std::vector<Cone>& cones) : cones_(cones) {
        for (const auto& cone : cones) {
            scratch_.emplace_back(cone.size, cone.size);
            solvers_.emplace_back(cone.size);
        }
    }

    void project(Vector& v) {
        for (std::size_t b = 0; b < cones_.size(); ++b) {
            const auto& cone = cones_[b];
            double* seg = v.data() + cone.offset;
            if (cone.size == 1) {
                seg[0] = std::max(seg[0], 0.0);
                continue;
            }
            Matrix& M = scratch_[b];
            smat(seg, cone.size, M);
            auto& eig = solvers_[b];
            eig.compute(M);
            if (eig.eigenvalues()(0) >= 0.0) continue;
            const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
            M.noalias() = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
            svec(M, seg);
        }
    }

    double min_eigenvalue(const Vector& v) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < cones_.size(); ++b) {
            const auto& cone = cones_[b];
            const double* seg = v.data() + cone.offset;
            if (cone.size == 1) {
                worst = std::min(worst, seg[0]);
                continue;
            }
            Matrix& M = scratch_[b];
            smat(seg, cone.size, M);
            solvers_[b].compute(M, Eigen::EigenvaluesOnly);
            worst = std::min(worst, solvers_[b].eigenvalues()(0));
        }
        return worst;
    }

private:
    const std::vector<Cone>& cones_;
    std::vector<Matrix> scratch_;
    std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> solvers_;
};

// Ruiz-style equilibration: positive per-cone row weights and per-variable
// column weights. Scaling a whole cone by a positive scalar keeps it a PSD cone.
void equilibrate(const StandardForm& form, Vector& cone_weight, Vector& var_weight) {
    const auto n = form.A.cols();
    const auto ncones = static_cast<Eigen::Index>(form.cones.size());
    cone_weight = Vector::Ones(ncones);
    var_weight = Vector::Ones(n);
    Matrix scaled = form.A;
    for (int pass = 0; pass < 15; ++pass) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double norm = scaled.col(i).cwiseAbs().maxCoeff();
            if (norm > 0.0) {
                const double f = 1.0 / std::sqrt(norm);
                var_weight(i) *= f;
                scaled.col(i) *= f;
            }
        }
        for (Eigen::Index b = 0; b < ncones; ++b) {
            const auto& cone = form.cones[static_cast<std::size_t>(b)];
            const double norm = scaled.middleRows(cone.offset, cone.length).cwiseAbs().maxCoeff();
            if (norm > 0.0) {
                const double f = 1.0 / std::sqrt(norm);
                cone_weight(b) *= f;
                scaled.middleRows(cone.offset, cone.length) *= f;
            }
        }
    }
    cone_weight = cone_weight.cwiseMax(1e-4).cwiseMin(1e4);
    var_weight = var_weight.cwiseMax(1e-4).cwiseMin(1e4);
}

// Type-II Anderson acceleration over a sliding window of iterate differences.
class AndersonMixer {
public:
    AndersonMixer(Eigen::Index dim, int memory)
        : memory_(std::max(memory, 0)), dV_(dim, std::max(memory, 1)), dG_(dim, std::max(memory, 1)) {}

    void reset() {
        count_ = 0;
        head_ = 0;
        have_prev_ = false;
    }

    void push(const Vector& v, const Vector& g) {
        if (memory_ == 0) return;
        if (have_prev_) {
            dV_.col(head_) = v - prev_v_;
            dG_.col(head_) = g - prev_g_;
            head_ = (head_ + 1) % memory_;
            count_ = std::min(count_ + 1, memory_);
        }
        prev_v_ = v;
        prev_g_ = g;
        have_prev_ = true;
    }

    // Writes the accelerated point into out; returns false when no step is taken.
    bool extrapolate(const Vector& t, const Vector& g, Vector& out) const {
        if (count_ == 0) return false;
        const auto dG = dG_.leftCols(count_);
        const auto dV = dV_.leftCols(count_);
        Matrix gram = dG.transpose() * dG;
        const double reg = 1e-10 * std::max(gram.trace(), 1e-300);
        gram.diagonal().array() += reg;
        const Vector weights = gram.ldlt().solve(dG.transpose() * g);
        if (!weights.allFinite() || weights.norm() > 1e6) return false;
        out = t - (dV + dG) * weights;
        return out.allFinite();
    }

private:
    int memory_;
    Matrix dV_, dG_;
    Vector prev_v_, prev_g_;
    int count_ = 0;
    int head_ = 0;
    bool have_prev_ = false;
};

}  // namespace

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::kOptimal: return "optimal";
        case SolveStatus::kInfeasible: return "infeasible";
        case SolveStatus::kMaxIterations: return "max-iterations";
    }
    return "unknown";
}

void SdpProblem::validate() const {
    if (nvars <= 0) throw std::invalid_argument("SDP needs at least one variable");
    if (objective.size() != nvars) throw std::invalid_argument("objective length must equal nvars");
    if (!lower_bounds.empty() && static_cast<int>(lower_bounds.size()) != nvars)
        throw std::invalid_argument("lower_bounds must be empty or have nvars entries");
    for (const auto& block : blocks) {
        const auto s = block.constant.rows();
        if (block.constant.cols() != s) throw std::invalid_argument("LMI constant must be square");
        if (symmetry_error(block.constant) > 1e-12) throw std::invalid_argument("LMI constant not symmetric");
        if (static_cast<int>(block.coeffs.size()) != nvars)
            throw std::invalid_argument("every LMI block needs one coefficient per variable");
        for (const auto& Fi : block.coeffs) {
            if (Fi.rows() != s || Fi.cols() != s) throw std::invalid_argument("LMI coefficient has wrong size");
            if (symmetry_error(Fi) > 1e-12) throw std::invalid_argument("LMI coefficient not symmetric");
        }
    }
}

double SdpProblem::objective_value(const Vector& z) const { return objective.dot(z); }

Matrix SdpProblem::block_value(std::size_t block, const Vector& z) const {
    const auto& b = blocks.at(block);
    Matrix out = b.constant;
    for (int i = 0; i < nvars; ++i) {
        const double zi = z(i);
        if (zi != 0.0) out += zi * b.coeffs[static_cast<std::size_t>(i)];
    }
    return out;
}

double SdpProblem::feasibility_margin(const Vector& z) const {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const Matrix value = block_value(b, z);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(value, Eigen::EigenvaluesOnly);
        worst = std::min(worst, eig.eigenvalues()(0));
    }
    for (std::size_t i = 0; i < lower_bounds.size(); ++i)
        if (lower_bounds[i]) worst = std::min(worst, z(static_cast<Eigen::Index>(i)) - *lower_bounds[i]);
    return worst;
}

SdpSolution SplittingSolver::solve(const SdpProblem& problem, const SolverSettings& settings,
                                   const Vector* warm_start) const {
    problem.validate();
    if (!(settings.tol_feas > 0.0) || !(settings.tol_obj > 0.0) || settings.max_iter <= 0)
        throw std::invalid_argument("solver tolerances and iteration limit must be positive");

    const StandardForm form = vectorize(problem);
    const Eigen::Index n = problem.nvars;
    const Eigen::Index m = form.A.rows();

    Vector cone_w, var_w;
    equilibrate(form, cone_w, var_w);
    Vector row_w(m);
    for (std::size_t b = 0; b < form.cones.size(); ++b)
        row_w.segment(form.cones[b].offset, form.cones[b].length).setConstant(cone_w(static_cast<Eigen::Index>(b)));

    const Matrix A_hat = row_w.asDiagonal() * form.A * var_w.asDiagonal();
    const Vector f0_hat = row_w.cwiseProduct(form.f0);
    Vector c_hat = var_w.cwiseProduct(form.c);
    const double c_norm = c_hat.norm();
    const double cost_scale = c_norm > 0.0 ? 1.0 / c_norm : 1.0;
    c_hat *= cost_scale;

    const Matrix normal = A_hat.transpose() * A_hat;
    const Eigen::LDLT<Matrix> restoration(normal);
    {
        const Vector d = restoration.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        if (restoration.info() != Eigen::Success || !(d.minCoeff() > 1e-13 * std::max(dmax, 1.0)))
            throw SdpError("restoration system is numerically singular (a variable does not enter any constraint)");
    }

    ConeProjector projector(form.cones);

    // ADMM written as a fixed-point map on v = s + u, where s is the projected
    // slack and u the scaled dual. T(v) performs one relaxed iteration.
    double rho = settings.rho;
    const double alpha = settings.relaxation;
    Vector s_hat(m), u_hat(m), z_hat(n), Az(m), rhs(n);
    auto apply_map = [&](const Vector& v, Vector& out) {
        s_hat = v;
        projector.project(s_hat);
        u_hat = v - s_hat;
        rhs.noalias() = A_hat.transpose() * (s_hat - f0_hat - u_hat);
        rhs -= c_hat / rho;
        z_hat = restoration.solve(rhs);
        Az.noalias() = A_hat * z_hat;
        out = alpha * (Az + f0_hat) + (1.0 - alpha) * s_hat + u_hat;
    };

    Vector v = f0_hat;
    if (warm_start != nullptr) {
        if (warm_start->size() != n) throw std::invalid_argument("warm start has wrong length");
        v = A_hat * warm_start->cwiseQuotient(var_w) + f0_hat;
    }

    AndersonMixer mixer(m, settings.anderson_memory);
    Vector t(m), g(m), plain_next(m);
    bool pending_check = false;
    double last_plain_gnorm = std::numeric_limits<double>::infinity();

    Vector u_at_last_check = Vector::Zero(m);
    int infeasible_streak = 0;

    struct Candidate {
        Vector z;
        double objective = std::numeric_limits<double>::infinity();
        double residual = 0.0;
    } best_feasible;

    SdpSolution sol;
    const double c_unscaled_norm = form.c.norm();

    auto finish = [&](SolveStatus status, int iters, const Vector& z, double pres, double dres, double gap) {
        sol.z = z;
        sol.status = status;
        sol.iterations = iters;
        sol.objective = problem.objective_value(z);
        sol.primal_residual = pres;
        sol.dual_residual = dres;
        sol.gap = gap;
        sol.feasibility_margin = problem.feasibility_margin(z);
        return sol;
    };

    double last_pres = 0.0, last_dres = 0.0, last_gap = 0.0;
    for (int iter = 1; iter <= settings.max_iter; ++iter) {
        apply_map(v, t);
        g = t - v;
        const double gnorm = g.norm();

        // Safeguard: an accelerated point must not blow up the fixed-point residual.
        if (pending_check) {
            pending_check = false;
            if (!(gnorm <= 2.0 * last_plain_gnorm)) {
                mixer.reset();
                v = plain_next;
                continue;
            }
        }
        last_plain_gnorm = gnorm;

        const bool check = iter % settings.check_every == 0 || iter == settings.max_iter;
        if (check) {
            Vector s_next = t;
            projector.project(s_next);
            const Vector u_next = t - s_next;

            const Vector z = var_w.cwiseProduct(z_hat);
            const Vector r_hat = Az + f0_hat - s_next;
            const Vector r = r_hat.cwiseQuotient(row_w);
            const Vector Y = (-rho / cost_scale) * row_w.cwiseProduct(u_next);
            const double pres = r.norm();
            const double dres = (form.A.transpose() * Y - form.c).norm();
            const double pobj = form.c.dot(z);
            const double dobj = -form.f0.dot(Y);
            const double gap = pobj - dobj;
            last_pres = pres;
            last_dres = dres;
            last_gap = gap;

            // Feasibility is judged on the constraint values at z itself.
            const double margin = projector.min_eigenvalue(form.A * z + form.f0);
            const bool primal_ok = margin >= -settings.tol_feas;
            if (primal_ok && pobj < best_feasible.objective) {
                best_feasible.z = z;
                best_feasible.objective = pobj;
                best_feasible.residual = pres;
            }

            const bool dual_ok = dres <= settings.tol_obj * (1.0 + c_unscaled_norm);
            const bool gap_ok = std::abs(gap) <= settings.tol_obj * (1.0 + std::abs(pobj) + std::abs(dobj));
            if (primal_ok && dual_ok && gap_ok) return finish(SolveStatus::kOptimal, iter, z, pres, dres, gap);

            // Primal infeasibility: the dual iterate drifts along a direction Y >= 0
            // with A'Y = 0 and <F0, Y> < 0.
            if (iter >= 200) {
                const Vector drift = -(u_next - u_at_last_check);
                const double f0_dot = f0_hat.dot(drift);
                bool certificate = false;
                if (f0_dot < 0.0 && drift.norm() > 1e-12) {
                    const Vector y = drift / (-f0_dot);
                    if ((A_hat.transpose() * y).norm() <= 1e-7 * std::max(1.0, y.norm()))
                        certificate = projector.min_eigenvalue(y) >= -1e-7 * std::max(1.0, y.norm());
                }
                infeasible_streak = certificate ? infeasible_streak + 1 : 0;
                if (infeasible_streak >= 5) return finish(SolveStatus::kInfeasible, iter, z, pres, dres, gap);
            }
            u_at_last_check = u_next;

            // Residual balancing on the scaled problem.
            if (iter % (settings.check_every * 10) == 0) {
                const double prim_rel = r_hat.norm() / std::max({Az.norm(), s_next.norm(), f0_hat.norm(), 1e-12});
                const Vector Y_hat = -rho * u_next;
                const Vector AtY = A_hat.transpose() * Y_hat;
                const double dual_rel = (AtY - c_hat).norm() / std::max({AtY.norm(), c_hat.norm(), 1e-12});
                double factor = 1.0;
                if (prim_rel > 10.0 * dual_rel) factor = std::min(std::sqrt(prim_rel / std::max(dual_rel, 1e-16)), 10.0);
                if (dual_rel > 10.0 * prim_rel) factor = 1.0 / std::min(std::sqrt(dual_rel / std::max(prim_rel, 1e-16)), 10.0);
                if (factor != 1.0) {
                    const double new_rho = std::clamp(rho * factor, 1e-6, 1e6);
                    v = s_next + (rho / new_rho) * u_next;
                    u_at_last_check = (rho / new_rho) * u_next;
                    rho = new_rho;
                    mixer.reset();
                    infeasible_streak = 0;
                    continue;
                }
            }
        }

        mixer.push(v, g);
        if (mixer.extrapolate(t, g, v)) {
            plain_next = t;
            pending_check = true;
        } else {
            v = t;
        }
    }

    if (best_feasible.z.size() == n)
        return finish(SolveStatus::kMaxIterations, settings.max_iter, best_feasible.z, best_feasible.residual,
                      last_dres, last_gap);
    return finish(SolveStatus::kMaxIterations, settings.max_iter, var_w.cwiseProduct(z_hat), last_pres, last_dres,
                  last_gap);
}

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings, const Vector* warm_start) {
    return SplittingSolver{}.solve(problem, settings, warm_start);
}

Matrix psd_project(const Matrix& S, double symmetry_tol) {
    if (S.rows() != S.cols()) throw std::invalid_argument("psd_project: matrix must be square");
    const double scale = std::max(1.0, S.size() ? S.cwiseAbs().maxCoeff() : 0.0);
    if (symmetry_error(S) > symmetry_tol * scale) throw std::invalid_argument("psd_project: matrix is not symmetric");
    const Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
    const Vector clamped = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace sentinel::sdp
