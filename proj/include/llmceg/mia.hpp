#pragma once

// Loss-threshold membership inference: loss gap, best balanced-accuracy
// threshold attack, and the Mann-Whitney AUROC.

#include <cstddef>
#include <span>
#include <vector>

#include "llmceg/lm.hpp"
#include "llmceg/synthgen.hpp"

namespace llmceg::mia {

struct LossSample {
    double loss = 0.0;  // mean per-token NLL, nats
    bool is_member = false;
    std::size_t source_id = 0;
};

struct AttackResult {
    double accuracy = 0.5;      // balanced accuracy at the best threshold
    double advantage = 0.0;     // accuracy - 0.5
    double best_threshold = 0;  // predict member iff loss < threshold
    double raw_accuracy = 0.0;  // plain accuracy at the same threshold
};

struct MiaResult {
    double loss_gap = 0.0;
    double accuracy = 0.5;
    double raw_accuracy = 0.0;
    double advantage = 0.0;
    double auroc = 0.5;
    double best_threshold = 0.0;
    std::size_t n_members = 0;
    std::size_t n_nonmembers = 0;

    bool operator==(const MiaResult&) const = default;
};

std::vector<LossSample> collect_losses(const lm::ModelParams& params, const synthgen::SplitCorpus& split);

// mean(non-member losses) - mean(member losses).
double loss_gap(std::span<const LossSample> samples);

AttackResult threshold_attack(std::span<const LossSample> samples);

// P(member loss < non-member loss) with ties counted as one half.
double auroc(std::span<const LossSample> samples);

MiaResult summarize(std::span<const LossSample> samples);
MiaResult run_mia(const lm::ModelParams& params, const synthgen::SplitCorpus& split);

}  // namespace llmceg::mia
