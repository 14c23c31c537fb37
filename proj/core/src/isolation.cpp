#include "sentinel/isolation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sentinel {

WindowVoter::WindowVoter(std::vector<std::vector<int>> j_sets, int p, const IsolationOptions& options)
    : j_sets_(std::move(j_sets)), p_(p), options_(options), counts_(j_sets_.size(), 0),
      pi_sum_(Vector::Zero(static_cast<Eigen::Index>(j_sets_.size()))) {
    if (options_.window < 1) throw std::invalid_argument("isolation window must be at least 1");
    if (j_sets_.empty()) throw std::invalid_argument("isolation needs at least one candidate subset");
}

std::optional<IsolationWindow> WindowVoter::vote(std::size_t j_bar, const Vector& pi) {
    if (j_bar >= j_sets_.size() || pi.size() != static_cast<Eigen::Index>(j_sets_.size()))
        throw std::invalid_argument("vote does not match the candidate subsets");
    ++counts_[j_bar];
    pi_sum_ += pi;
    if (++filled_ < options_.window) return std::nullopt;

    IsolationWindow w;
    w.index = index_;
    w.first_step = 1 + (index_ - 1) * options_.window;
    w.last_step = index_ * options_.window;
    w.counts = counts_;
    w.winner = static_cast<std::size_t>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
    for (int i = 1; i <= p_; ++i)
        if (!std::binary_search(j_sets_[w.winner].begin(), j_sets_[w.winner].end(), i)) w.accused.push_back(i);
    w.mean_pi.resize(j_sets_.size());
    for (std::size_t j = 0; j < j_sets_.size(); ++j)
        w.mean_pi[j] = pi_sum_(static_cast<Eigen::Index>(j)) / options_.window;

    double rival = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < j_sets_.size(); ++j)
        if (j != w.winner) rival = std::min(rival, w.mean_pi[j]);
    const double own = w.mean_pi[w.winner];
    if (j_sets_.size() == 1)
        w.separation = 1.0;
    else if (own > 0.0)
        w.separation = rival / own;
    else
        w.separation = rival > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    w.trustworthy = w.separation >= options_.trust_ratio;

    ++index_;
    filled_ = 0;
    std::fill(counts_.begin(), counts_.end(), 0);
    pi_sum_.setZero();
    return w;
}

IsolationReport isolate(EstimatorBank& bank, const Trace& trace, const IsolationOptions& options) {
    const auto K = static_cast<std::size_t>(trace.horizon);
    if (trace.y.size() != K + 1 || trace.u.size() != K + 1)
        throw std::invalid_argument("trace records do not match its horizon");
    if (bank.steps() != 0) throw std::invalid_argument("isolation needs a bank that has not been stepped yet");

    IsolationReport report;
    report.window_size = options.window;
    report.q_star = bank.q();
    report.p = bank.p();
    report.j_sets = bank.j_sets();
    WindowVoter voter(bank.j_sets(), bank.p(), options);
    for (std::size_t k = 1; k <= K; ++k) {
        bank.step(trace.y[k - 1], trace.u[k - 1]);
        if (auto w = voter.vote(bank.sigma(), bank.pi())) report.windows.push_back(std::move(*w));
    }
    report.dropped_steps = voter.pending();
    return report;
}

IsolationReport isolate(const PlantModel& model, int q_star, const Trace& trace, const IsolationOptions& options,
                        const Vector& xhat0, const SynthesisOptions& synthesis) {
    EstimatorBank bank = build_bank(model, q_star, xhat0, synthesis);
    return isolate(bank, trace, options);
}

IsolationSummary evaluate(const IsolationReport& report, std::vector<int> true_W) {
    std::sort(true_W.begin(), true_W.end());
    IsolationSummary summary;
    int correct = 0;
    for (const auto& w : report.windows) {
        const bool hit = w.accused == true_W;
        summary.hits.push_back(hit);
        correct += hit ? 1 : 0;
    }
    summary.accuracy = report.windows.empty() ? 0.0 : static_cast<double>(correct) / report.windows.size();
    return summary;
}

}  // namespace sentinel
