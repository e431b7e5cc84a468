#pragma once

#include "mhqg/corpus.hpp"
#include "mhqg/nn/lstm.hpp"

#include <span>
#include <vector>

namespace mhqg {

/// Sentence-level supporting-fact classifier. A sentence spanning [s, e) is
/// represented by the encoder state at its first word concatenated with the
/// state at its last word, then scored by a logistic layer.
class SfHead {
public:
    SfHead() = default;
    SfHead(nn::ParameterStore& store, nn::Index state_dim, nn::Rng& rng);

    /// One 2·state_dim column per sentence; K columns in total.
    nn::Expr sentence_representations(nn::Graph& g, const nn::BiLstmOutput& states,
                                      std::span<const SentenceBound> bounds) const;

    /// K×1 probabilities p_i = σ(w·r_i + b).
    nn::Expr probabilities(nn::Graph& g, nn::Expr representations) const;

    nn::Parameter& weight() const { return *weight_; }
    nn::Parameter& bias() const { return *bias_; }

private:
    nn::Parameter* weight_ = nullptr;
    nn::Parameter* bias_ = nullptr;
};

/// Σ_i −[y_i log p_i + (1−y_i) log(1−p_i)] with probabilities clamped away from 0.
nn::Expr supporting_fact_loss(nn::Expr probabilities, std::span<const int> labels);

/// Hard labels at threshold 0.5 (inclusive).
std::vector<int> harden_predictions(const nn::Matrix& probabilities);

}  // namespace mhqg
