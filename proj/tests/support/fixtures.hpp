#pragma once

#include <vector>

#include "sentinel/estimator.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/synthesis.hpp"

namespace fixtures {

inline const sentinel::PlantModel& example_plant() {
    static const sentinel::PlantModel model = sentinel::example_model(0.1, 1.0);
    return model;
}

// All-sensor design of the example plant, synthesized once per binary.
inline const sentinel::ObserverDesign& example_design() {
    static const sentinel::ObserverDesign design = sentinel::synthesize(example_plant(), sentinel::full_set(example_plant()));
    return design;
}

// q = 1 bank designs (4 triples, 6 pairs) of the example plant.
inline const std::vector<sentinel::ObserverDesign>& example_bank_designs() {
    static const std::vector<sentinel::ObserverDesign> designs = sentinel::synthesize_bank(example_plant(), 1);
    return designs;
}

}  // namespace fixtures
