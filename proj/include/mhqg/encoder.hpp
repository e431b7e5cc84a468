#pragma once

#include "mhqg/corpus.hpp"
#include "mhqg/nn/lstm.hpp"

#include <filesystem>
#include <span>

namespace mhqg {

struct EncoderConfig {
    int vocab_size = 0;
    int word_dim = 300;
    int answer_tag_dim = 3;
    int sf_tag_dim = 3;
    /// Per direction; encoder states are 2·hidden wide.
    int hidden = 512;
    double dropout = 0.3;

    int layer1_input_dim() const { return word_dim + answer_tag_dim; }
    int layer2_input_dim() const { return 2 * hidden + word_dim + answer_tag_dim + sf_tag_dim; }
};

/// First recurrent layer over [word embedding ⊕ answer-tag embedding].
struct Layer1Output {
    nn::Expr words;        ///< word_dim × N (after dropout)
    nn::Expr answer_tags;  ///< answer_tag_dim × N
    nn::BiLstmOutput states;
};

struct EncoderOutput {
    Layer1Output layer1;
    nn::Expr sf_tags;  ///< sf_tag_dim × N
    nn::BiLstmOutput layer2;
};

/// Two stacked bidirectional layers; the second also sees the per-word
/// supporting-fact tag embedding derived from sentence-level predictions.
class Encoder {
public:
    Encoder() = default;
    Encoder(nn::ParameterStore& store, const EncoderConfig& config, nn::Rng& rng);

    const EncoderConfig& config() const { return config_; }

    Layer1Output encode_layer1(nn::Graph& g, std::span<const int> word_ids, std::span<const int> answer_tags) const;

    /// Every word of sentence i receives row v[predictions[i]] of the tag table.
    nn::Expr sf_tag_encoding(nn::Graph& g, std::span<const int> predictions,
                             std::span<const SentenceBound> bounds) const;

    /// Inputs are z (2H×N), u (word_dim×N), a (answer_tag_dim×N), s (sf_tag_dim×N).
    nn::BiLstmOutput encode_layer2(nn::Graph& g, nn::Expr z, nn::Expr words, nn::Expr answer_tags,
                                   nn::Expr sf_tags) const;

    nn::Parameter& word_embeddings() const { return *word_table_; }
    nn::Parameter& answer_tag_table() const { return *answer_table_; }
    nn::Parameter& sf_tag_table() const { return *sf_table_; }
    const nn::BiLstm& layer1() const { return layer1_; }
    const nn::BiLstm& layer2() const { return layer2_; }

    /// Reads "token v1 ... vD" lines into the word table; returns the number of rows replaced.
    std::size_t load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab);

private:
    EncoderConfig config_;
    nn::Parameter* word_table_ = nullptr;
    nn::Parameter* answer_table_ = nullptr;
    nn::Parameter* sf_table_ = nullptr;
    nn::BiLstm layer1_;
    nn::BiLstm layer2_;
};

}  // namespace mhqg
