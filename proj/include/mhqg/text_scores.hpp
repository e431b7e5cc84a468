#pragma once

#include "mhqg/corpus.hpp"

#include <set>
#include <vector>

namespace mhqg {

/// Length of the longest common subsequence.
std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// LCS F-measure with β = 1; 0 when either side is empty.
double rouge_l(const Tokens& hypothesis, const Tokens& reference);

/// Sentence BLEU-4: add-one smoothing on 2..4-gram precisions, brevity penalty
/// exp(1 − r/c) when the hypothesis is shorter. Empty hypothesis scores 0.
double sentence_bleu(const Tokens& hypothesis, const Tokens& reference, int max_n = 4);

/// Set F1; 0 when the prediction is empty.
double supporting_fact_f1(const std::set<SupportingFact>& predicted, const std::set<SupportingFact>& gold);

struct RewardWeights {
    double mer = 1.0;
    double rouge_l = 1.0;
    double bleu = 0.0;
};

struct RewardValue {
    double mer = 0.0;
    double rouge_l = 0.0;
    double bleu = 0.0;
    double combined = 0.0;
};

RewardValue combine_rewards(double mer, double rouge, double bleu, const RewardWeights& weights);

}  // namespace mhqg
