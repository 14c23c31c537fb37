#pragma once

#include <vector>

#include "sentinel/model.hpp"
#include "sentinel/synthesis.hpp"

namespace sentinel {

// One circle-criterion observer running on a sensor subset:
//   xhat+ = A xhat + G f(H xhat + K (C_J xhat - y_J)) + L (C_J xhat - y_J) + rho(u, y_J)
struct ObserverState {
    SensorSubset subset;
    Matrix K;
    Matrix L;
    Vector xhat;
};

ObserverState make_observer(const PlantModel& model, const ObserverDesign& design, const Vector& xhat0);

// Advances the observer by one step on the subset's measurements.
void step(const PlantModel& model, ObserverState& state, const Vector& y_J, const Vector& u);

// e(k) = xhat(k) - x(k) for k = 0..K, driving the observer with the trace's outputs.
std::vector<Vector> error_trace(const PlantModel& model, const ObserverDesign& design, const Trace& trace,
                                const Vector& xhat0);

}  // namespace sentinel
