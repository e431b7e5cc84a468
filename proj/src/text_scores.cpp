#include "mhqg/text_scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mhqg {

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (const auto& x : a) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
            diag = up;
        }
    }
    return row[b.size()];
}

double rouge_l(const Tokens& hypothesis, const Tokens& reference) {
    if (hypothesis.empty() || reference.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(hypothesis, reference));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(hypothesis.size());
    const double r = lcs / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

namespace {

std::map<Tokens, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
    std::map<Tokens, std::size_t> counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

double sentence_bleu(const Tokens& hypothesis, const Tokens& reference, int max_n) {
    if (hypothesis.empty()) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        auto hyp = ngram_counts(hypothesis, static_cast<std::size_t>(n));
        auto ref = ngram_counts(reference, static_cast<std::size_t>(n));
        double matched = 0.0;
        double total = 0.0;
        for (const auto& [gram, count] : hyp) {
            total += static_cast<double>(count);
            if (auto it = ref.find(gram); it != ref.end()) matched += static_cast<double>(std::min(count, it->second));
        }
        if (n > 1) {
            matched += 1.0;
            total += 1.0;
        }
        if (matched == 0.0) return 0.0;
        log_sum += std::log(matched / total);
    }
    const double c = static_cast<double>(hypothesis.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / max_n);
}

double supporting_fact_f1(const std::set<SupportingFact>& predicted, const std::set<SupportingFact>& gold) {
    if (predicted.empty() || gold.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& sf : predicted) common += gold.count(sf);
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(predicted.size());
    const double r = static_cast<double>(common) / static_cast<double>(gold.size());
    return 2.0 * p * r / (p + r);
}

RewardValue combine_rewards(double mer, double rouge, double bleu, const RewardWeights& weights) {
    RewardValue v{mer, rouge, bleu, 0.0};
    v.combined = weights.mer * mer + weights.rouge_l * rouge + weights.bleu * bleu;
    return v;
}

}  // namespace mhqg
