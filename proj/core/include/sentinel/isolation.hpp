#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sentinel/estimator.hpp"

namespace sentinel {

struct IsolationWindow {
    int index = 0;       // 1-based
    int first_step = 0;  // k = 1 + (index - 1) N
    int last_step = 0;   // k = index N
    std::vector<int> counts;  // n_J per J, j_sets order
    std::size_t winner = 0;
    std::vector<int> accused;
    std::vector<double> mean_pi;  // window average of pi_J
    // Smallest mean pi among the losing subsets over the winner's mean pi.
    double separation = 0.0;
    bool trustworthy = false;
};

struct IsolationReport {
    int window_size = 0;
    int q_star = 0;
    int p = 0;
    std::vector<std::vector<int>> j_sets;
    std::vector<IsolationWindow> windows;
    int dropped_steps = 0;  // trailing steps that did not fill a window
};

struct IsolationOptions {
    int window = 100;
    // A window is trustworthy when its separation reaches this ratio.
    double trust_ratio = 2.0;
};

// Streaming form of the voting: feed one argmin vote per step.
class WindowVoter {
public:
    WindowVoter(std::vector<std::vector<int>> j_sets, int p, const IsolationOptions& options);

    // Returns the finished window when this vote completes one.
    std::optional<IsolationWindow> vote(std::size_t j_bar, const Vector& pi);
    int pending() const { return filled_; }

private:
    std::vector<std::vector<int>> j_sets_;
    int p_;
    IsolationOptions options_;
    int index_ = 1;
    int filled_ = 0;
    std::vector<int> counts_;
    Vector pi_sum_;
};

// Runs a fresh bank (card(J) = p - q*) over the trace and votes on steps k = 1..K.
IsolationReport isolate(EstimatorBank& bank, const Trace& trace, const IsolationOptions& options);

IsolationReport isolate(const PlantModel& model, int q_star, const Trace& trace, const IsolationOptions& options,
                        const Vector& xhat0, const SynthesisOptions& synthesis = {});

struct IsolationSummary {
    std::vector<bool> hits;  // per window: accused == true W
    double accuracy = 0.0;
};

IsolationSummary evaluate(const IsolationReport& report, std::vector<int> true_W);

}  // namespace sentinel
