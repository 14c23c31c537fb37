#include "sentinel/observer.hpp"

#include <stdexcept>

namespace sentinel {

ObserverState make_observer(const PlantModel& model, const ObserverDesign& design, const Vector& xhat0) {
    ObserverState state{subset(model, design.subset), design.K, design.L, xhat0};
    const auto ny = state.subset.size();
    if (xhat0.size() != model.n()) throw std::invalid_argument("initial estimate has wrong length");
    if (state.L.rows() != model.n() || state.L.cols() != ny) throw std::invalid_argument("L does not match the subset");
    if (state.K.rows() != model.r() || state.K.cols() != ny) throw std::invalid_argument("K does not match the subset");
    return state;
}

void step(const PlantModel& model, ObserverState& state, const Vector& y_J, const Vector& u) {
    if (y_J.size() != state.subset.size()) throw std::invalid_argument("measurement length does not match the subset");
    const Vector innovation = state.subset.C * state.xhat - y_J;
    Vector next = model.A * state.xhat + state.L * innovation + model.input_term(u, y_J);
    if (model.r() > 0) next += model.G * model.apply_f(model.H * state.xhat + state.K * innovation);
    state.xhat = std::move(next);
}

std::vector<Vector> error_trace(const PlantModel& model, const ObserverDesign& design, const Trace& trace,
                                const Vector& xhat0) {
    const auto K = static_cast<std::size_t>(trace.horizon);
    if (trace.x.size() != K + 1 || trace.y.size() != K + 1)
        throw std::invalid_argument("trace records do not match its horizon");
    ObserverState state = make_observer(model, design, xhat0);
    std::vector<Vector> errors;
    errors.reserve(K + 1);
    const Vector no_input = Vector::Zero(model.input_dim);
    for (std::size_t k = 0; k <= K; ++k) {
        errors.push_back(state.xhat - trace.x[k]);
        if (k == K) break;
        const Vector& u = k < trace.u.size() ? trace.u[k] : no_input;
        step(model, state, state.subset.slice(trace.y[k]), u);
    }
    return errors;
}

}  // namespace sentinel
