#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sentinel/model.hpp"
#include "sentinel/sdp.hpp"

namespace sentinel {

// kMonotone:        M = kappa [[0, I], [I, 0]]            (monotone f only)
// kSlopeRestricted: M = kappa [[0, I], [I, -diag(2/b_i)]]  (slopes of f_i in [0, b_i])
// Both have kappa*I off the diagonal, so K = Y2 / kappa in either case.
enum class MultiplierKind { kMonotone, kSlopeRestricted };

std::string to_string(MultiplierKind kind);
MultiplierKind multiplier_from_string(const std::string& name);

// Decision variables of the synthesis LMIs.
struct LmiVariables {
    Matrix P;   // n x n
    Matrix Y;   // n x n_y
    Matrix Y2;  // r x n_y
    double kappa = 0.0;
    double mu = 0.0;
    double mu1 = 0.0;
};

// The two synthesis LMIs for one sensor subset and a fixed c3. Rows of the main
// block are ordered [P-slot (n); e (n); m (n_y); delta f (r)].
class LmiInstance {
public:
    LmiInstance(const PlantModel& model, const SensorSubset& subset, double c3,
                MultiplierKind multiplier = MultiplierKind::kSlopeRestricted);

    int n() const { return static_cast<int>(A_.rows()); }
    int ny() const { return static_cast<int>(C_.rows()); }
    int r() const { return static_cast<int>(G_.cols()); }
    double c3() const { return c3_; }

    int variable_count() const;
    int main_size() const { return 2 * n() + ny() + r(); }
    int coupling_size() const { return 2 * n(); }

    // Diagonal of the lower-right block of M / kappa (2/b_i, or 0).
    const Vector& slope_weights() const { return slope_weights_; }

    Matrix multiplier(double kappa) const;
    Matrix gamma1() const;
    Matrix gamma2(const Matrix& Y2) const;
    Matrix gamma(const Matrix& K) const;  // [[H + K C, -K, 0], [0, 0, I]]
    Matrix xi21(const LmiVariables& v) const;
    Matrix xi22(const LmiVariables& v) const;

    // Left-hand side of the main LMI (required <= 0).
    Matrix main_block(const LmiVariables& v) const;
    // [[P, I], [I, mu I]] (required >= 0).
    Matrix coupling_block(const LmiVariables& v) const;

    Vector pack(const LmiVariables& v) const;
    LmiVariables unpack(const Vector& z) const;

    // minimize mu + mu1 s.t. -main >= eps I, coupling >= eps I, P >= eps I,
    // kappa, mu, mu1 >= eps.
    sdp::SdpProblem problem(double eps = 1e-6) const;

private:
    Matrix A_, G_, H_, C_;
    double c3_;
    Vector slope_weights_;
};

struct AssembledLmi {
    LmiInstance instance;
    sdp::SdpProblem problem;
};

AssembledLmi assemble(const PlantModel& model, const SensorSubset& subset, double c3,
                      MultiplierKind multiplier = MultiplierKind::kSlopeRestricted, double eps = 1e-6);

// Picks kSlopeRestricted when every f_i declares a finite slope bound.
MultiplierKind default_multiplier(const PlantModel& model);

struct IssCertificate {
    double c = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
};

struct GridPoint {
    double c3 = 0.0;
    sdp::SolveStatus status = sdp::SolveStatus::kMaxIterations;
    double mu = 0.0;
    double mu1 = 0.0;
    double gamma = 0.0;
    int iterations = 0;
};

struct ObserverDesign {
    std::vector<int> subset;
    double c3 = 0.0;
    Matrix K;
    Matrix L;
    Matrix P;
    double kappa = 0.0;
    double mu = 0.0;
    double mu1 = 0.0;
    MultiplierKind multiplier = MultiplierKind::kSlopeRestricted;
    Vector slope_weights;
    IssCertificate certificate;
    std::vector<GridPoint> grid;  // every solved grid point, in solve order

    Matrix multiplier_matrix() const;
    // Y = P L and Y2 = kappa K.
    LmiVariables variables() const;
};

// Coarse pass at coarse_step over (0, 1), then a refine_step pass within
// +-refine_radius of the coarse winner. A non-empty `points` replaces both.
struct GridSpec {
    double coarse_step = 0.05;
    double refine_step = 0.005;
    double refine_radius = 0.05;
    std::vector<double> points;
};

struct SynthesisOptions {
    GridSpec grid;
    sdp::SolverSettings solver;
    std::optional<MultiplierKind> multiplier;  // default_multiplier(model) when unset
    double eps = 1e-6;
    unsigned threads = 1;
    const sdp::SdpBackend* backend = nullptr;  // SplittingSolver when null
};

class InfeasibleSubsetError : public std::runtime_error {
public:
    explicit InfeasibleSubsetError(std::vector<int> subset);
    const std::vector<int>& subset() const { return subset_; }

private:
    std::vector<int> subset_;
};

std::vector<double> coarse_grid(double step);

ObserverDesign synthesize(const PlantModel& model, const SensorSubset& subset, const SynthesisOptions& options = {});

// Solves one grid point and recovers the gains; returns nullopt when not optimal.
std::optional<ObserverDesign> design_at(const PlantModel& model, const SensorSubset& subset, double c3,
                                        const SynthesisOptions& options = {}, const Vector* warm_start = nullptr,
                                        GridPoint* point = nullptr);

struct VerificationReport {
    double dqc_min = 0.0;             // min of [dq; df]' M [dq; df] over samples
    double linearization_residual = 0.0;     // ||G'MG - (G1'MG1 + G1'G2 + G2'G1)||_F
    double lyapunov_min_slack = 0.0;  // min of -c3 V + c3 mu1 |m|^2 - (V(e+) - V(e))
    double main_lmi_max_eig = 0.0;
    double coupling_min_eig = 0.0;
    bool dqc_ok = false;
    bool linearization_ok = false;
    bool lyapunov_ok = false;
    bool lmi_ok = false;
    bool valid = false;
};

VerificationReport verify_design(const PlantModel& model, const SensorSubset& subset, const ObserverDesign& design,
                                 int nsamples = 10000, std::uint64_t seed = 11, double tol_feas = 1e-7);

// {subset, c3, K, L, P, kappa, mu, mu1, certificate{c, lambda, gamma}}, matrices row-major.
nlohmann::json to_json(const ObserverDesign& design);
ObserverDesign design_from_json(const nlohmann::json& doc);

}  // namespace sentinel
