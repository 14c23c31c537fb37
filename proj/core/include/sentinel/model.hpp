#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sentinel/rng.hpp"

namespace sentinel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Scalar nonlinearity applied to one channel of Hx. The slope bounds are the
// declared range of its difference quotients (f(v)-f(w))/(v-w); slope_max may
// be infinite.
struct Nonlinearity {
    std::string name;
    std::function<double(double)> eval;
    double slope_min = 0.0;
    double slope_max = std::numeric_limits<double>::infinity();

    double operator()(double v) const { return eval(v); }
};

namespace nonlinearity {
Nonlinearity zero();
Nonlinearity identity();
Nonlinearity sine(double gain = 1.0);
Nonlinearity tanh(double gain = 1.0);
Nonlinearity linear(double slope);
Nonlinearity cubic();

// Looks up one of the above by name ("zero", "identity", "sin", "tanh", "linear", "cubic").
Nonlinearity by_name(const std::string& name, double gain = 1.0);
}  // namespace nonlinearity

// rho(u, y): known additive term of the plant update.
using InputTerm = std::function<Vector(const Vector& u, const Vector& y)>;

// rho(u, y) = B u.
InputTerm linear_input(Matrix B);

// x+ = A x + G f(H x) + rho(u, y),   y~ = C x + a + m.
struct PlantModel {
    Matrix A;
    Matrix G;
    Matrix H;
    Matrix C;  // full sensor matrix, one row per sensor
    std::vector<Nonlinearity> f;
    InputTerm rho;
    int input_dim = 0;

    int n() const { return static_cast<int>(A.rows()); }
    int r() const { return static_cast<int>(G.cols()); }
    int p() const { return static_cast<int>(C.rows()); }

    Vector apply_f(const Vector& v) const;
    Vector input_term(const Vector& u, const Vector& y) const;
    Vector step(const Vector& x, const Vector& u, const Vector& y) const;

    // Throws std::invalid_argument on inconsistent dimensions or a
    // nonlinearity that fails the sampled monotonicity test.
    void validate() const;
};

// Smallest difference quotient of f over `samples` random pairs.
double min_difference_quotient(const Nonlinearity& f, int samples = 10000, std::uint64_t seed = 7);

// Rewrites x+ = A_raw x + G g(Hx) into x+ = (A_raw - G H) x + G f(Hx) with
// f(v) = v + g(v). The returned model has no sensors (C is 0 x n) and rho = 0.
PlantModel monotonize(const Matrix& A_raw, const Matrix& G, const Matrix& H, const Nonlinearity& g);

// Stacked rows of the full sensor matrix, indices 1-based and ascending.
struct SensorSubset {
    std::vector<int> indices;
    Matrix C;

    int size() const { return static_cast<int>(indices.size()); }
    Vector slice(const Vector& y_full) const;
    std::string label() const;  // "1-2-4"

    friend bool operator==(const SensorSubset& a, const SensorSubset& b) { return a.indices == b.indices; }
};

SensorSubset subset(const PlantModel& model, std::vector<int> indices);
SensorSubset full_set(const PlantModel& model);
std::vector<int> parse_subset_label(const std::string& label);
std::string subset_label(const std::vector<int>& indices);

struct SignalSpec {
    enum class Kind { kZero, kUniform, kTrace };

    Kind kind = Kind::kZero;
    double lo = 0.0;
    double hi = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> support;   // 1-based sensor indices; empty means every sensor
    std::vector<Vector> trace;  // kTrace: one full-length vector per step

    static SignalSpec zero();
    static SignalSpec uniform(double lo, double hi, std::uint64_t seed, std::vector<int> support = {});
    static SignalSpec user_trace(std::vector<Vector> values, std::vector<int> support = {});
};

// Draws the per-step vectors of a SignalSpec; entries outside the support are 0.
class SignalSource {
public:
    SignalSource(const SignalSpec& spec, int p);
    Vector next();

private:
    SignalSpec spec_;
    int p_;
    std::vector<int> support_;
    std::size_t step_ = 0;
    SplitMix64 rng_;
};

struct Trace {
    int horizon = 0;
    std::vector<Vector> x;  // x(0..K)
    std::vector<Vector> y;  // measured y~(0..K)
    std::vector<Vector> a;
    std::vector<Vector> m;
    std::vector<Vector> u;
};

// Runs the plant for K steps. u_seq may be empty (u = 0) or hold K+1 inputs.
Trace simulate_plant(const PlantModel& model, const Vector& x0, const std::vector<Vector>& u_seq,
                     const SignalSpec& noise, const SignalSpec& attack, int K);

}  // namespace sentinel
