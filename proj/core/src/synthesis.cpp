#include "sentinel/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sentinel/parallel.hpp"

namespace sentinel {

std::string to_string(MultiplierKind kind) {
    return kind == MultiplierKind::kMonotone ? "monotone" : "slope-restricted";
}

MultiplierKind multiplier_from_string(const std::string& name) {
    if (name == "monotone") return MultiplierKind::kMonotone;
    if (name == "slope-restricted") return MultiplierKind::kSlopeRestricted;
    throw std::invalid_argument("unknown multiplier kind '" + name + "'");
}

MultiplierKind default_multiplier(const PlantModel& model) {
    for (const auto& fi : model.f)
        if (!std::isfinite(fi.slope_max) || fi.slope_max <= 0.0) return MultiplierKind::kMonotone;
    return MultiplierKind::kSlopeRestricted;
}

LmiInstance::LmiInstance(const PlantModel& model, const SensorSubset& subset, double c3, MultiplierKind multiplier)
    : A_(model.A), G_(model.G), H_(model.H), C_(subset.C), c3_(c3) {
    if (!(c3 > 0.0 && c3 < 1.0)) throw std::invalid_argument("c3 must lie in (0, 1)");
    if (subset.size() == 0) throw std::invalid_argument("sensor subset must be nonempty");
    if (C_.cols() != A_.rows() || G_.rows() != A_.rows() || H_.cols() != A_.rows() || H_.rows() != G_.cols())
        throw std::invalid_argument("LMI assembly: dimension mismatch");

    slope_weights_ = Vector::Zero(G_.cols());
    if (multiplier == MultiplierKind::kSlopeRestricted) {
        for (Eigen::Index i = 0; i < G_.cols(); ++i) {
            const double b = model.f.at(static_cast<std::size_t>(i)).slope_max;
            if (!std::isfinite(b) || b <= 0.0)
                throw std::invalid_argument("slope-restricted multiplier needs a finite positive slope bound");
            slope_weights_(i) = 2.0 / b;
        }
    }
}

int LmiInstance::variable_count() const { return n() * (n() + 1) / 2 + n() * ny() + r() * ny() + 3; }

Matrix LmiInstance::multiplier(double kappa) const {
    const int r_ = r();
    Matrix M = Matrix::Zero(2 * r_, 2 * r_);
    M.topRightCorner(r_, r_).setIdentity();
    M.bottomLeftCorner(r_, r_).setIdentity();
    M.bottomRightCorner(r_, r_) = -Matrix(slope_weights_.asDiagonal());
    return kappa * M;
}

Matrix LmiInstance::gamma1() const {
    const int cols = n() + ny() + r();
    Matrix G1 = Matrix::Zero(2 * r(), cols);
    G1.topLeftCorner(r(), n()) = H_;
    G1.bottomRightCorner(r(), r()).setIdentity();
    return G1;
}

Matrix LmiInstance::gamma2(const Matrix& Y2) const {
    const int cols = n() + ny() + r();
    Matrix G2 = Matrix::Zero(2 * r(), cols);
    G2.block(r(), 0, r(), n()) = Y2 * C_;
    G2.block(r(), n(), r(), ny()) = -Y2;
    return G2;
}

Matrix LmiInstance::gamma(const Matrix& K) const {
    Matrix G = gamma1();
    G.block(0, 0, r(), n()) += K * C_;
    G.block(0, n(), r(), ny()) = -K;
    return G;
}

Matrix LmiInstance::xi21(const LmiVariables& v) const {
    // Xi21' = [P A + Y C, -Y, P G]
    Matrix xi21t(n(), n() + ny() + r());
    xi21t << v.P * A_ + v.Y * C_, -v.Y, v.P * G_;
    return xi21t.transpose();
}

Matrix LmiInstance::xi22(const LmiVariables& v) const {
    Matrix X = Matrix::Zero(n() + ny() + r(), n() + ny() + r());
    X.topLeftCorner(n(), n()) = (c3_ - 1.0) * v.P;
    X.block(n(), n(), ny(), ny()) = -c3_ * v.mu1 * Matrix::Identity(ny(), ny());
    return X;
}

Matrix LmiInstance::main_block(const LmiVariables& v) const {
    const int inner = n() + ny() + r();
    const Matrix G1 = gamma1();
    const Matrix G2 = gamma2(v.Y2);
    const Matrix X21 = xi21(v);

    Matrix out(main_size(), main_size());
    out.topLeftCorner(n(), n()) = -v.P;
    out.block(0, n(), n(), inner) = X21.transpose();
    out.block(n(), 0, inner, n()) = X21;
    out.bottomRightCorner(inner, inner) =
        xi22(v) + G1.transpose() * multiplier(v.kappa) * G1 + G1.transpose() * G2 + G2.transpose() * G1;
    return out;
}

Matrix LmiInstance::coupling_block(const LmiVariables& v) const {
    Matrix out(2 * n(), 2 * n());
    out << v.P, Matrix::Identity(n(), n()), Matrix::Identity(n(), n()), v.mu * Matrix::Identity(n(), n());
    return out;
}

Vector LmiInstance::pack(const LmiVariables& v) const {
    Vector z(variable_count());
    Eigen::Index k = 0;
    for (int i = 0; i < n(); ++i)
        for (int j = i; j < n(); ++j) z(k++) = v.P(i, j);
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < ny(); ++j) z(k++) = v.Y(i, j);
    for (int i = 0; i < r(); ++i)
        for (int j = 0; j < ny(); ++j) z(k++) = v.Y2(i, j);
    z(k++) = v.kappa;
    z(k++) = v.mu;
    z(k++) = v.mu1;
    return z;
}

LmiVariables LmiInstance::unpack(const Vector& z) const {
    if (z.size() != variable_count()) throw std::invalid_argument("LMI variable vector has wrong length");
    LmiVariables v;
    v.P.resize(n(), n());
    v.Y.resize(n(), ny());
    v.Y2.resize(r(), ny());
    Eigen::Index k = 0;
    for (int i = 0; i < n(); ++i)
        for (int j = i; j < n(); ++j) {
            v.P(i, j) = z(k);
            v.P(j, i) = z(k++);
        }
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < ny(); ++j) v.Y(i, j) = z(k++);
    for (int i = 0; i < r(); ++i)
        for (int j = 0; j < ny(); ++j) v.Y2(i, j) = z(k++);
    v.kappa = z(k++);
    v.mu = z(k++);
    v.mu1 = z(k++);
    return v;
}

sdp::SdpProblem LmiInstance::problem(double eps) const {
    const int nv = variable_count();
    sdp::SdpProblem prob;
    prob.nvars = nv;
    prob.objective = Vector::Zero(nv);
    prob.objective(nv - 2) = 1.0;  // mu
    prob.objective(nv - 1) = 1.0;  // mu1

    // Both LMIs are affine in z; the main one is linear, so its coefficient
    // matrices are its values at the unit vectors.
    const LmiVariables zero_vars = unpack(Vector::Zero(nv));
    const Matrix coupling0 = coupling_block(zero_vars);

    sdp::LmiBlock main, coupling, p_block;
    main.constant = -eps * Matrix::Identity(main_size(), main_size());
    coupling.constant = coupling0 - eps * Matrix::Identity(coupling_size(), coupling_size());
    p_block.constant = -eps * Matrix::Identity(n(), n());

    for (int i = 0; i < nv; ++i) {
        Vector e = Vector::Zero(nv);
        e(i) = 1.0;
        const LmiVariables vi = unpack(e);
        Matrix Mi = -main_block(vi);
        main.coeffs.push_back(0.5 * (Mi + Mi.transpose()));
        coupling.coeffs.push_back(coupling_block(vi) - coupling0);
        p_block.coeffs.push_back(vi.P);
    }
    prob.blocks = {std::move(main), std::move(coupling), std::move(p_block)};

    prob.lower_bounds.assign(static_cast<std::size_t>(nv), std::nullopt);
    for (int i = nv - 3; i < nv; ++i) prob.lower_bounds[static_cast<std::size_t>(i)] = eps;
    return prob;
}

AssembledLmi assemble(const PlantModel& model, const SensorSubset& subset, double c3, MultiplierKind multiplier,
                      double eps) {
    LmiInstance instance(model, subset, c3, multiplier);
    sdp::SdpProblem problem = instance.problem(eps);
    return {std::move(instance), std::move(problem)};
}

Matrix ObserverDesign::multiplier_matrix() const {
    const auto r = slope_weights.size();
    Matrix M = Matrix::Zero(2 * r, 2 * r);
    M.topRightCorner(r, r).setIdentity();
    M.bottomLeftCorner(r, r).setIdentity();
    M.bottomRightCorner(r, r) = -Matrix(slope_weights.asDiagonal());
    return kappa * M;
}

LmiVariables ObserverDesign::variables() const {
    return {P, P * L, kappa * K, kappa, mu, mu1};
}

InfeasibleSubsetError::InfeasibleSubsetError(std::vector<int> subset)
    : std::runtime_error("no observer exists for sensor subset {" + subset_label(subset) +
                         "}: every grid point is infeasible"),
      subset_(std::move(subset)) {}

std::vector<double> coarse_grid(double step) {
    if (!(step > 0.0 && step < 1.0)) throw std::invalid_argument("grid step must lie in (0, 1)");
    std::vector<double> out;
    for (int k = 1;; ++k) {
        const double c3 = std::round(k * step * 1e9) / 1e9;
        if (c3 >= 1.0 - 1e-12) break;
        out.push_back(c3);
    }
    return out;
}

namespace {

// Channels whose G column vanishes never reach the dynamics; their multiplier rows
// would pin kappa at its floor and stall the solver, so they are dropped.
std::vector<int> coupled_channels(const PlantModel& model) {
    std::vector<int> kept;
    for (int i = 0; i < model.r(); ++i)
        if (model.G.col(i).lpNorm<Eigen::Infinity>() > 0.0) kept.push_back(i);
    return kept;
}

PlantModel restrict_channels(const PlantModel& model, const std::vector<int>& kept) {
    PlantModel out = model;
    const auto m = static_cast<Eigen::Index>(kept.size());
    out.G.resize(model.n(), m);
    out.H.resize(m, model.n());
    out.f.clear();
    for (Eigen::Index j = 0; j < m; ++j) {
        const int i = kept[static_cast<std::size_t>(j)];
        out.G.col(j) = model.G.col(i);
        out.H.row(j) = model.H.row(i);
        out.f.push_back(model.f[static_cast<std::size_t>(i)]);
    }
    return out;
}

Matrix rows_of(const Matrix& K, const std::vector<int>& kept) {
    Matrix out(static_cast<Eigen::Index>(kept.size()), K.cols());
    for (std::size_t j = 0; j < kept.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = K.row(kept[j]);
    return out;
}

Vector entries_of(const Vector& w, const std::vector<int>& kept) {
    Vector out(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) out(static_cast<Eigen::Index>(j)) = w(kept[j]);
    return out;
}

IssCertificate certificate_for(const Matrix& P, double c3, double mu, double mu1) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(P, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    return {std::sqrt(lmax / lmin), std::sqrt(1.0 - c3), std::sqrt(mu * mu1)};
}

}  // namespace

std::optional<ObserverDesign> design_at(const PlantModel& model, const SensorSubset& subset, double c3,
                                        const SynthesisOptions& options, const Vector* warm_start, GridPoint* point) {
    const MultiplierKind kind = options.multiplier.value_or(default_multiplier(model));
    const std::vector<int> kept = coupled_channels(model);
    const bool reduced = static_cast<int>(kept.size()) < model.r();
    const AssembledLmi lmi = assemble(reduced ? restrict_channels(model, kept) : model, subset, c3, kind, options.eps);
    const sdp::SplittingSolver fallback;
    const sdp::SdpBackend& backend = options.backend ? *options.backend : fallback;
    const sdp::SdpSolution sol = backend.solve(lmi.problem, options.solver, warm_start);

    GridPoint gp;
    gp.c3 = c3;
    gp.status = sol.status;
    gp.iterations = sol.iterations;
    if (sol.status != sdp::SolveStatus::kOptimal) {
        if (point) *point = gp;
        return std::nullopt;
    }

    const LmiVariables v = lmi.instance.unpack(sol.z);
    ObserverDesign design;
    design.subset = subset.indices;
    design.c3 = c3;
    design.P = 0.5 * (v.P + v.P.transpose());
    design.L = design.P.ldlt().solve(v.Y);
    design.K = Matrix::Zero(model.r(), subset.size());
    for (std::size_t j = 0; j < kept.size(); ++j)
        design.K.row(kept[j]) = v.Y2.row(static_cast<Eigen::Index>(j)) / v.kappa;
    design.kappa = v.kappa;
    design.mu = v.mu;
    design.mu1 = v.mu1;
    design.multiplier = kind;
    design.slope_weights = LmiInstance(model, subset, c3, kind).slope_weights();
    design.certificate = certificate_for(design.P, c3, v.mu, v.mu1);

    gp.mu = v.mu;
    gp.mu1 = v.mu1;
    gp.gamma = design.certificate.gamma;
    if (point) *point = gp;
    return design;
}

ObserverDesign synthesize(const PlantModel& model, const SensorSubset& subset, const SynthesisOptions& options) {
    std::vector<GridPoint> log;
    std::optional<ObserverDesign> best;

    auto better = [](const ObserverDesign& cand, const ObserverDesign& incumbent) {
        const double dg = cand.certificate.gamma - incumbent.certificate.gamma;
        if (dg < -1e-9) return true;
        if (dg > 1e-9) return false;
        return cand.c3 < incumbent.c3;
    };

    auto run_pass = [&](const std::vector<double>& points) {
        std::vector<std::optional<ObserverDesign>> designs(points.size());
        std::vector<GridPoint> gps(points.size());
        parallel_for(points.size(), options.threads, [&](std::size_t i) {
            designs[i] = design_at(model, subset, points[i], options, nullptr, &gps[i]);
        });
        // Deterministic reduction in grid order.
        for (std::size_t i = 0; i < points.size(); ++i) {
            log.push_back(gps[i]);
            if (designs[i] && (!best || better(*designs[i], *best))) best = std::move(designs[i]);
        }
    };

    if (!options.grid.points.empty()) {
        for (double c3 : options.grid.points)
            if (!(c3 > 0.0 && c3 < 1.0)) throw std::invalid_argument("grid points must lie in (0, 1)");
        run_pass(options.grid.points);
    } else {
        const std::vector<double> coarse = coarse_grid(options.grid.coarse_step);
        run_pass(coarse);
        if (best && options.grid.refine_step > 0.0 && options.grid.refine_radius > 0.0) {
            const double center = best->c3;
            const int reach = static_cast<int>(std::round(options.grid.refine_radius / options.grid.refine_step));
            std::vector<double> fine;
            for (int j = -reach; j <= reach; ++j) {
                const double c3 = std::round((center + j * options.grid.refine_step) * 1e9) / 1e9;
                if (!(c3 > 0.0 && c3 < 1.0)) continue;
                const bool seen = std::any_of(coarse.begin(), coarse.end(),
                                              [c3](double c) { return std::abs(c - c3) < 1e-12; });
                if (!seen) fine.push_back(c3);
            }
            run_pass(fine);
        }
    }

    if (!best) throw InfeasibleSubsetError(subset.indices);
    best->grid = std::move(log);
    return *best;
}

VerificationReport verify_design(const PlantModel& model, const SensorSubset& subset, const ObserverDesign& design,
                                 int nsamples, std::uint64_t seed, double tol_feas) {
    VerificationReport report;
    const std::vector<int> kept = coupled_channels(model);
    const PlantModel coupled = restrict_channels(model, kept);
    const LmiInstance lmi(coupled, subset, design.c3, design.multiplier);
    const Matrix K = rows_of(design.K, kept);
    const int r = coupled.r();
    Matrix M = Matrix::Zero(2 * r, 2 * r);
    M.topRightCorner(r, r).setIdentity();
    M.bottomLeftCorner(r, r).setIdentity();
    M.bottomRightCorner(r, r) = -Matrix(entries_of(design.slope_weights, kept).asDiagonal());
    M *= design.kappa;
    const int n = model.n();
    const int ny = subset.size();

    SplitMix64 rng(seed);

    // Incremental quadratic constraint on random argument pairs.
    report.dqc_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < nsamples; ++s) {
        Vector q1(r), q2(r);
        for (int i = 0; i < r; ++i) {
            q1(i) = rng.uniform(-10.0, 10.0);
            q2(i) = (s % 2 == 0) ? rng.uniform(-10.0, 10.0) : q1(i) + rng.uniform(-1e-2, 1e-2);
        }
        Vector w(2 * r);
        w << q1 - q2, coupled.apply_f(q1) - coupled.apply_f(q2);
        report.dqc_min = std::min(report.dqc_min, w.dot(M * w));
    }
    if (r == 0) report.dqc_min = 0.0;
    report.dqc_ok = report.dqc_min >= -1e-12;

    // Gamma' M Gamma against the linearized form with Y2 = kappa K.
    const Matrix G = lmi.gamma(K);
    const Matrix G1 = lmi.gamma1();
    const Matrix G2 = lmi.gamma2(design.kappa * K);
    report.linearization_residual =
        (G.transpose() * M * G - (G1.transpose() * M * G1 + G1.transpose() * G2 + G2.transpose() * G1)).norm();
    report.linearization_ok = report.linearization_residual <= 1e-10 * std::max(1.0, M.norm() * G.squaredNorm());

    // The stored variables must satisfy both LMIs.
    LmiVariables vars = design.variables();
    vars.Y2 = design.kappa * K;
    Eigen::SelfAdjointEigenSolver<Matrix> main_eig(lmi.main_block(vars), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> coupling_eig(lmi.coupling_block(vars), Eigen::EigenvaluesOnly);
    report.main_lmi_max_eig = main_eig.eigenvalues().maxCoeff();
    report.coupling_min_eig = coupling_eig.eigenvalues().minCoeff();
    report.lmi_ok = report.main_lmi_max_eig <= tol_feas && report.coupling_min_eig >= -tol_feas;

    // Lyapunov decrease V(e+) - V(e) <= -c3 V(e) + c3 mu1 |m|^2 along the true error map.
    const Matrix& P = design.P;
    const Matrix ALC = model.A + design.L * subset.C;
    const Matrix HKC = model.H + design.K * subset.C;
    report.lyapunov_min_slack = std::numeric_limits<double>::infinity();
    for (int s = 0; s < nsamples; ++s) {
        Vector e(n), m(ny), x(n);
        for (int i = 0; i < n; ++i) {
            e(i) = 2.0 * rng.normal();
            x(i) = 3.0 * rng.normal();
        }
        for (int i = 0; i < ny; ++i) m(i) = rng.uniform(-1.0, 1.0);
        Vector e_next = ALC * e - design.L * m;
        if (r > 0) {
            const Vector q_true = model.H * x;
            const Vector dq = HKC * e - design.K * m;
            e_next += model.G * (model.apply_f(q_true + dq) - model.apply_f(q_true));
        }
        const double V = e.dot(P * e);
        const double V_next = e_next.dot(P * e_next);
        const double slack = -design.c3 * V + design.c3 * design.mu1 * m.squaredNorm() - (V_next - V);
        report.lyapunov_min_slack = std::min(report.lyapunov_min_slack, slack);
    }
    report.lyapunov_ok = report.lyapunov_min_slack >= -1e-8;

    report.valid = report.dqc_ok && report.linearization_ok && report.lmi_ok && report.lyapunov_ok;
    return report;
}

}  // namespace sentinel
