#pragma once

#include <cstddef>
#include <vector>

#include "sentinel/model.hpp"
#include "sentinel/observer.hpp"
#include "sentinel/synthesis.hpp"

namespace sentinel {

// All k-element subsets of {1..p} in lexicographic order.
std::vector<std::vector<int>> combinations(int p, int k);

// Subsets the bank needs for a given q: every J with card p-q, then every S with card p-2q.
std::vector<std::vector<int>> bank_subsets(int p, int q);

// Throws std::invalid_argument unless 0 < q and 2q < p.
void validate_attack_bound(int p, int q);

// Synthesizes one design per bank subset, in bank_subsets order. Subsets are
// solved concurrently up to options.threads; an infeasible subset raises
// InfeasibleSubsetError naming the lowest-ordered failure.
std::vector<ObserverDesign> synthesize_bank(const PlantModel& model, int q, const SynthesisOptions& options = {});

class EstimatorBank {
public:
    // `designs` must contain a design for every subset in bank_subsets(p, q);
    // extra designs are ignored.
    EstimatorBank(PlantModel model, int q, const std::vector<ObserverDesign>& designs, const Vector& xhat0);

    int p() const { return model_.p(); }
    int q() const { return q_; }
    int steps() const { return steps_; }

    const std::vector<std::vector<int>>& j_sets() const { return j_sets_; }
    const std::vector<std::vector<int>>& s_sets() const { return s_sets_; }
    // Indices into s_sets() of the subsets contained in j_sets()[j].
    const std::vector<std::size_t>& children(std::size_t j) const { return children_[j]; }

    const std::vector<ObserverState>& j_observers() const { return j_obs_; }
    const std::vector<ObserverState>& s_observers() const { return s_obs_; }

    // pi_J for every J, in j_sets() order.
    const Vector& pi() const { return pi_; }
    std::size_t sigma() const { return sigma_; }
    const std::vector<int>& sigma_set() const { return j_sets_[sigma_]; }
    const Vector& estimate() const { return j_obs_[sigma_].xhat; }

    // Observer updates run on up to `threads` workers; results do not depend on it.
    void set_threads(unsigned threads) { threads_ = threads; }

    // Advances every observer on its slice of y_full and refreshes pi, sigma and the estimate.
    void step(const Vector& y_full, const Vector& u);

private:
    void select();

    PlantModel model_;
    int q_;
    int steps_ = 0;
    unsigned threads_ = 1;
    std::vector<std::vector<int>> j_sets_;
    std::vector<std::vector<int>> s_sets_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<ObserverState> j_obs_;
    std::vector<ObserverState> s_obs_;
    Vector pi_;
    std::size_t sigma_ = 0;
};

EstimatorBank build_bank(const PlantModel& model, int q, const Vector& xhat0, const SynthesisOptions& options = {});

// Per-step log of a bank run over a trace, rows k = 0..K.
struct BankLog {
    std::vector<std::vector<int>> j_sets;
    std::vector<int> k;
    std::vector<std::size_t> sigma;
    std::vector<Vector> pi;
    std::vector<Vector> xhat;
    std::vector<double> e_norm;  // |xhat(k) - x(k)|
};

BankLog run_bank(EstimatorBank& bank, const Trace& trace);

}  // namespace sentinel
