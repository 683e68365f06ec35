#include "llmceg/mia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "llmceg/errors.hpp"

namespace llmceg::mia {

namespace {

struct ClassCounts {
    std::size_t members = 0;
    std::size_t nonmembers = 0;
};

ClassCounts count_classes(std::span<const LossSample> samples) {
    ClassCounts c;
    for (const LossSample& s : samples) (s.is_member ? c.members : c.nonmembers)++;
    if (c.members == 0 || c.nonmembers == 0)
        throw PreconditionError("membership inference needs at least one member and one non-member");
    return c;
}

std::vector<LossSample> sorted_by_loss(std::span<const LossSample> samples) {
    std::vector<LossSample> v(samples.begin(), samples.end());
    std::stable_sort(v.begin(), v.end(), [](const LossSample& a, const LossSample& b) { return a.loss < b.loss; });
    return v;
}

}  // namespace

std::vector<LossSample> collect_losses(const lm::ModelParams& params, const synthgen::SplitCorpus& split) {
    if (split.members.empty() && split.nonmembers.empty()) throw PreconditionError("split corpus is empty");
    const int ctx = params.config().context_len;
    std::vector<LossSample> out;
    out.reserve(split.members.size() + split.nonmembers.size());
    for (std::size_t i = 0; i < split.members.size(); ++i)
        out.push_back({lm::nll(params, lm::encode(split.members[i], ctx)).mean, true, i});
    for (std::size_t i = 0; i < split.nonmembers.size(); ++i)
        out.push_back({lm::nll(params, lm::encode(split.nonmembers[i], ctx)).mean, false, i});
    return out;
}

double loss_gap(std::span<const LossSample> samples) {
    const ClassCounts c = count_classes(samples);
    double member_sum = 0.0;
    double nonmember_sum = 0.0;
    for (const LossSample& s : samples) (s.is_member ? member_sum : nonmember_sum) += s.loss;
    return nonmember_sum / static_cast<double>(c.nonmembers) - member_sum / static_cast<double>(c.members);
}

AttackResult threshold_attack(std::span<const LossSample> samples) {
    const ClassCounts c = count_classes(samples);
    const std::vector<LossSample> v = sorted_by_loss(samples);
    const double n_m = static_cast<double>(c.members);
    const double n_n = static_cast<double>(c.nonmembers);
    const double inf = std::numeric_limits<double>::infinity();

    // Threshold -inf: nobody is predicted member.
    std::size_t members_below = 0;
    std::size_t nonmembers_below = 0;
    auto evaluate = [&](double tau, AttackResult& best) {
        const double tpr = static_cast<double>(members_below) / n_m;
        const double tnr = static_cast<double>(c.nonmembers - nonmembers_below) / n_n;
        const double balanced = 0.5 * (tpr + tnr);
        if (balanced > best.accuracy) {
            best.accuracy = balanced;
            best.best_threshold = tau;
            best.raw_accuracy = static_cast<double>(members_below + c.nonmembers - nonmembers_below) / (n_m + n_n);
        }
    };
    AttackResult best;
    best.accuracy = -1.0;
    evaluate(-inf, best);
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j < v.size() && v[j].loss == v[i].loss) {
            (v[j].is_member ? members_below : nonmembers_below)++;
            ++j;
        }
        const double tau = (j < v.size()) ? 0.5 * (v[i].loss + v[j].loss) : inf;
        evaluate(tau, best);
        i = j;
    }
    best.advantage = best.accuracy - 0.5;
    return best;
}

double auroc(std::span<const LossSample> samples) {
    const ClassCounts c = count_classes(samples);
    const std::vector<LossSample> v = sorted_by_loss(samples);
    // Sum of tie-averaged ascending ranks of the non-members.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        std::size_t nonmembers_in_group = 0;
        while (j < v.size() && v[j].loss == v[i].loss) {
            if (!v[j].is_member) ++nonmembers_in_group;
            ++j;
        }
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        rank_sum += avg_rank * static_cast<double>(nonmembers_in_group);
        i = j;
    }
    const double n_n = static_cast<double>(c.nonmembers);
    const double u = rank_sum - n_n * (n_n + 1.0) / 2.0;
    return u / (n_n * static_cast<double>(c.members));
}

MiaResult summarize(std::span<const LossSample> samples) {
    const ClassCounts c = count_classes(samples);
    const AttackResult attack = threshold_attack(samples);
    MiaResult r;
    r.loss_gap = loss_gap(samples);
    r.accuracy = attack.accuracy;
    r.raw_accuracy = attack.raw_accuracy;
    r.advantage = attack.advantage;
    r.best_threshold = attack.best_threshold;
    r.auroc = auroc(samples);
    r.n_members = c.members;
    r.n_nonmembers = c.nonmembers;
    return r;
}

MiaResult run_mia(const lm::ModelParams& params, const synthgen::SplitCorpus& split) {
    const std::vector<LossSample> samples = collect_losses(params, split);
    return summarize(samples);
}

}  // namespace llmceg::mia
