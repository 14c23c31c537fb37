#include "sentinel/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sentinel {

namespace nonlinearity {

Nonlinearity zero() {
    return {"zero", [](double) { return 0.0; }, 0.0, 0.0};
}

Nonlinearity identity() {
    return {"identity", [](double v) { return v; }, 1.0, 1.0};
}

Nonlinearity sine(double gain) {
    const double g = std::abs(gain);
    return {"sin", [gain](double v) { return gain * std::sin(v); }, -g, g};
}

Nonlinearity tanh(double gain) {
    const double lo = std::min(0.0, gain);
    const double hi = std::max(0.0, gain);
    return {"tanh", [gain](double v) { return gain * std::tanh(v); }, lo, hi};
}

Nonlinearity linear(double slope) {
    return {"linear", [slope](double v) { return slope * v; }, slope, slope};
}

Nonlinearity cubic() {
    return {"cubic", [](double v) { return v * v * v; }, 0.0, std::numeric_limits<double>::infinity()};
}

Nonlinearity by_name(const std::string& name, double gain) {
    if (name == "zero") return zero();
    if (name == "identity") return identity();
    if (name == "sin") return sine(gain);
    if (name == "tanh") return tanh(gain);
    if (name == "linear") return linear(gain);
    if (name == "cubic") return cubic();
    throw std::invalid_argument("unknown nonlinearity '" + name + "'");
}

}  // namespace nonlinearity

InputTerm linear_input(Matrix B) {
    return [B = std::move(B)](const Vector& u, const Vector&) -> Vector {
        if (B.cols() == 0 || u.size() == 0) return Vector::Zero(B.rows());
        return B * u;
    };
}

Vector PlantModel::apply_f(const Vector& v) const {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = f[static_cast<std::size_t>(i)](v(i));
    return out;
}

Vector PlantModel::input_term(const Vector& u, const Vector& y) const {
    if (!rho) return Vector::Zero(n());
    return rho(u, y);
}

Vector PlantModel::step(const Vector& x, const Vector& u, const Vector& y) const {
    Vector next = A * x + input_term(u, y);
    if (r() > 0) next += G * apply_f(H * x);
    return next;
}

void PlantModel::validate() const {
    const auto n_ = A.rows();
    if (A.cols() != n_) throw std::invalid_argument("A must be square");
    if (G.rows() != n_) throw std::invalid_argument("G must have n rows");
    if (H.rows() != G.cols() || H.cols() != n_) throw std::invalid_argument("H must be r x n");
    if (C.cols() != n_) throw std::invalid_argument("C must have n columns");
    if (static_cast<Eigen::Index>(f.size()) != G.cols())
        throw std::invalid_argument("need one nonlinearity per column of G");
    for (const auto& fi : f) {
        if (!fi.eval) throw std::invalid_argument("nonlinearity '" + fi.name + "' has no function");
        if (min_difference_quotient(fi) < -1e-12)
            throw std::invalid_argument("nonlinearity '" + fi.name + "' is not monotone");
    }
}

double min_difference_quotient(const Nonlinearity& f, int samples, std::uint64_t seed) {
    SplitMix64 rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        // Mix wide pairs with close pairs so both global and local slopes are probed.
        const double v = rng.uniform(-20.0, 20.0);
        const double w = (i % 2 == 0) ? rng.uniform(-20.0, 20.0) : v + rng.uniform(-1e-3, 1e-3);
        if (v == w) continue;
        worst = std::min(worst, (f(v) - f(w)) / (v - w));
    }
    return worst;
}

PlantModel monotonize(const Matrix& A_raw, const Matrix& G, const Matrix& H, const Nonlinearity& g) {
    if (A_raw.rows() != A_raw.cols() || G.rows() != A_raw.rows() || H.cols() != A_raw.rows() ||
        H.rows() != G.cols())
        throw std::invalid_argument("monotonize: dimension mismatch");

    Nonlinearity f;
    f.name = "v+" + g.name;
    f.eval = [g = g.eval](double v) { return v + g(v); };
    f.slope_min = 1.0 + g.slope_min;
    f.slope_max = 1.0 + g.slope_max;
    if (min_difference_quotient(f) < -1e-12)
        throw std::invalid_argument("monotonize: v + " + g.name + "(v) has negative increments");

    PlantModel model;
    model.A = A_raw - G * H;
    model.G = G;
    model.H = H;
    model.C = Matrix::Zero(0, A_raw.rows());
    model.f.assign(static_cast<std::size_t>(G.cols()), f);
    return model;
}

Vector SensorSubset::slice(const Vector& y_full) const {
    Vector out(size());
    for (int i = 0; i < size(); ++i) out(i) = y_full(indices[static_cast<std::size_t>(i)] - 1);
    return out;
}

std::string SensorSubset::label() const { return subset_label(indices); }

std::string subset_label(const std::vector<int>& indices) {
    std::ostringstream out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) out << '-';
        out << indices[i];
    }
    return out.str();
}

std::vector<int> parse_subset_label(const std::string& label) {
    std::vector<int> out;
    std::string token;
    for (char ch : label + "-") {
        if (ch == '-' || ch == ',' || ch == ' ') {
            if (!token.empty()) out.push_back(std::stoi(token));
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    return out;
}

SensorSubset subset(const PlantModel& model, std::vector<int> indices) {
    if (indices.empty()) throw std::invalid_argument("sensor subset must be nonempty");
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw std::invalid_argument("duplicate sensor index in subset");
    for (int idx : indices)
        if (idx < 1 || idx > model.p())
            throw std::invalid_argument("sensor index " + std::to_string(idx) + " out of range 1.." +
                                        std::to_string(model.p()));

    SensorSubset out;
    out.C.resize(static_cast<Eigen::Index>(indices.size()), model.n());
    for (std::size_t i = 0; i < indices.size(); ++i)
        out.C.row(static_cast<Eigen::Index>(i)) = model.C.row(indices[i] - 1);
    out.indices = std::move(indices);
    return out;
}

SensorSubset full_set(const PlantModel& model) {
    std::vector<int> all(static_cast<std::size_t>(model.p()));
    for (int i = 0; i < model.p(); ++i) all[static_cast<std::size_t>(i)] = i + 1;
    return subset(model, all);
}

SignalSpec SignalSpec::zero() { return {}; }

SignalSpec SignalSpec::uniform(double lo, double hi, std::uint64_t seed, std::vector<int> support) {
    if (!(lo < hi)) throw std::invalid_argument("uniform signal needs lo < hi");
    SignalSpec spec;
    spec.kind = Kind::kUniform;
    spec.lo = lo;
    spec.hi = hi;
    spec.seed = seed;
    spec.support = std::move(support);
    return spec;
}

SignalSpec SignalSpec::user_trace(std::vector<Vector> values, std::vector<int> support) {
    SignalSpec spec;
    spec.kind = Kind::kTrace;
    spec.trace = std::move(values);
    spec.support = std::move(support);
    return spec;
}

SignalSource::SignalSource(const SignalSpec& spec, int p) : spec_(spec), p_(p), rng_(spec.seed) {
    if (spec.support.empty()) {
        for (int i = 1; i <= p; ++i) support_.push_back(i);
    } else {
        support_ = spec.support;
        std::sort(support_.begin(), support_.end());
        for (int idx : support_)
            if (idx < 1 || idx > p) throw std::invalid_argument("signal support index out of range");
    }
}

Vector SignalSource::next() {
    Vector out = Vector::Zero(p_);
    switch (spec_.kind) {
        case SignalSpec::Kind::kZero:
            break;
        case SignalSpec::Kind::kUniform:
            for (int idx : support_) out(idx - 1) = rng_.uniform(spec_.lo, spec_.hi);
            break;
        case SignalSpec::Kind::kTrace: {
            if (step_ >= spec_.trace.size()) throw std::invalid_argument("user trace shorter than horizon");
            const Vector& row = spec_.trace[step_];
            if (row.size() != p_) throw std::invalid_argument("user trace entry has wrong length");
            for (int idx : support_) out(idx - 1) = row(idx - 1);
            break;
        }
    }
    ++step_;
    return out;
}

Trace simulate_plant(const PlantModel& model, const Vector& x0, const std::vector<Vector>& u_seq,
                     const SignalSpec& noise, const SignalSpec& attack, int K) {
    if (x0.size() != model.n()) throw std::invalid_argument("x0 has wrong length");
    if (K < 0) throw std::invalid_argument("horizon must be nonnegative");
    if (!u_seq.empty() && static_cast<int>(u_seq.size()) < K + 1)
        throw std::invalid_argument("input sequence shorter than horizon");

    SignalSource noise_src(noise, model.p());
    SignalSource attack_src(attack, model.p());

    Trace trace;
    trace.horizon = K;
    const auto len = static_cast<std::size_t>(K + 1);
    trace.x.reserve(len);
    trace.y.reserve(len);
    trace.a.reserve(len);
    trace.m.reserve(len);
    trace.u.reserve(len);

    Vector x = x0;
    for (int k = 0; k <= K; ++k) {
        Vector u = u_seq.empty() ? Vector::Zero(model.input_dim) : u_seq[static_cast<std::size_t>(k)];
        Vector a = attack_src.next();
        Vector m = noise_src.next();
        Vector y = model.C * x + a + m;
        trace.x.push_back(x);
        trace.y.push_back(y);
        trace.a.push_back(a);
        trace.m.push_back(m);
        trace.u.push_back(u);
        if (k < K) x = model.step(x, u, y);
    }
    return trace;
}

}  // namespace sentinel
