#include "sentinel/estimator.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "sentinel/parallel.hpp"

namespace sentinel {

std::vector<std::vector<int>> combinations(int p, int k) {
    if (p < 0 || k < 0 || k > p) throw std::invalid_argument("combinations: need 0 <= k <= p");
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) current[static_cast<std::size_t>(i)] = i + 1;
    while (true) {
        out.push_back(current);
        int i = k - 1;
        while (i >= 0 && current[static_cast<std::size_t>(i)] == p - k + i + 1) --i;
        if (i < 0) break;
        ++current[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) current[static_cast<std::size_t>(j)] = current[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

void validate_attack_bound(int p, int q) {
    if (q <= 0 || 2 * q >= p)
        throw std::invalid_argument("attack bound q=" + std::to_string(q) + " must satisfy 0 < q < p/2 with p=" +
                                    std::to_string(p));
}

std::vector<std::vector<int>> bank_subsets(int p, int q) {
    validate_attack_bound(p, q);
    auto out = combinations(p, p - q);
    for (auto& s : combinations(p, p - 2 * q)) out.push_back(std::move(s));
    return out;
}

std::vector<ObserverDesign> synthesize_bank(const PlantModel& model, int q, const SynthesisOptions& options) {
    const auto sets = bank_subsets(model.p(), q);
    std::vector<std::optional<ObserverDesign>> designs(sets.size());
    std::vector<char> infeasible(sets.size(), 0);

    SynthesisOptions inner = options;
    inner.threads = 1;
    parallel_for(sets.size(), options.threads, [&](std::size_t i) {
        try {
            designs[i] = synthesize(model, subset(model, sets[i]), inner);
        } catch (const InfeasibleSubsetError&) {
            infeasible[i] = 1;
        }
    });

    std::vector<ObserverDesign> out;
    out.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (infeasible[i]) throw InfeasibleSubsetError(sets[i]);
        out.push_back(std::move(*designs[i]));
    }
    return out;
}

namespace {

const ObserverDesign& find_design(const std::vector<ObserverDesign>& designs, const std::vector<int>& set) {
    for (const auto& d : designs)
        if (d.subset == set) return d;
    throw std::invalid_argument("no design supplied for subset " + subset_label(set));
}

bool contains(const std::vector<int>& outer, const std::vector<int>& inner) {
    return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

}  // namespace

EstimatorBank::EstimatorBank(PlantModel model, int q, const std::vector<ObserverDesign>& designs, const Vector& xhat0)
    : model_(std::move(model)), q_(q) {
    validate_attack_bound(model_.p(), q_);
    j_sets_ = combinations(p(), p() - q_);
    s_sets_ = combinations(p(), p() - 2 * q_);
    for (const auto& J : j_sets_) j_obs_.push_back(make_observer(model_, find_design(designs, J), xhat0));
    for (const auto& S : s_sets_) s_obs_.push_back(make_observer(model_, find_design(designs, S), xhat0));
    children_.resize(j_sets_.size());
    for (std::size_t j = 0; j < j_sets_.size(); ++j)
        for (std::size_t s = 0; s < s_sets_.size(); ++s)
            if (contains(j_sets_[j], s_sets_[s])) children_[j].push_back(s);
    pi_ = Vector::Zero(static_cast<Eigen::Index>(j_sets_.size()));
    select();
}

void EstimatorBank::step(const Vector& y_full, const Vector& u) {
    if (y_full.size() != p()) throw std::invalid_argument("bank step expects all p measurements");
    const std::size_t nj = j_obs_.size();
    parallel_for(nj + s_obs_.size(), threads_, [&](std::size_t i) {
        ObserverState& obs = i < nj ? j_obs_[i] : s_obs_[i - nj];
        sentinel::step(model_, obs, obs.subset.slice(y_full), u);
    });
    ++steps_;
    select();
}

void EstimatorBank::select() {
    for (std::size_t j = 0; j < j_obs_.size(); ++j) {
        double worst = 0.0;
        for (const std::size_t s : children_[j]) worst = std::max(worst, (j_obs_[j].xhat - s_obs_[s].xhat).norm());
        pi_(static_cast<Eigen::Index>(j)) = worst;
    }
    // Strict comparison keeps the lexicographically first minimizer.
    sigma_ = 0;
    for (std::size_t j = 1; j < j_obs_.size(); ++j)
        if (pi_(static_cast<Eigen::Index>(j)) < pi_(static_cast<Eigen::Index>(sigma_))) sigma_ = j;
}

EstimatorBank build_bank(const PlantModel& model, int q, const Vector& xhat0, const SynthesisOptions& options) {
    return EstimatorBank(model, q, synthesize_bank(model, q, options), xhat0);
}

BankLog run_bank(EstimatorBank& bank, const Trace& trace) {
    const auto K = static_cast<std::size_t>(trace.horizon);
    if (trace.x.size() != K + 1 || trace.y.size() != K + 1 || trace.u.size() != K + 1)
        throw std::invalid_argument("trace records do not match its horizon");
    if (bank.steps() != 0) throw std::invalid_argument("run_bank needs a bank that has not been stepped yet");
    BankLog log;
    log.j_sets = bank.j_sets();
    for (std::size_t k = 0; k <= K; ++k) {
        log.k.push_back(static_cast<int>(k));
        log.sigma.push_back(bank.sigma());
        log.pi.push_back(bank.pi());
        log.xhat.push_back(bank.estimate());
        log.e_norm.push_back((bank.estimate() - trace.x[k]).norm());
        if (k < K) bank.step(trace.y[k], trace.u[k]);
    }
    return log;
}

}  // namespace sentinel
