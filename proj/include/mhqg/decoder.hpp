#pragma once

#include "mhqg/nn/lstm.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mhqg {

struct DecoderConfig {
    int vocab_size = 0;
    int word_dim = 300;
    /// Width of an encoder state column (2·encoder hidden).
    int memory_dim = 1024;
    int hidden = 512;
};

/// Per-example data the decoder attends over, built once before stepping.
struct DecoderContext {
    nn::Expr memory;       ///< memory_dim × N encoder states
    nn::Expr keys_t;       ///< N × hidden, projected states used for scoring
    std::vector<int> extended_ids;
    nn::Index extended_size = 0;
    nn::LstmState initial;
};

struct DecoderStep {
    nn::LstmState state;
    nn::Expr attention;   ///< N×1
    nn::Expr context;     ///< memory_dim × 1
    nn::Expr vocab_dist;  ///< V×1
    nn::Expr gen_prob;    ///< 1×1
    nn::Expr final_dist;  ///< (V + |OOV|) × 1
};

/// LSTM decoder with attention and a copy switch. The embedding table is
/// borrowed from the encoder so both sides share word vectors.
class Decoder {
public:
    Decoder() = default;
    Decoder(nn::ParameterStore& store, const DecoderConfig& config, nn::Parameter& word_embeddings, nn::Rng& rng);

    const DecoderConfig& config() const { return config_; }

    /// `extended_ids` gives the extended-vocabulary id of each source position.
    DecoderContext prepare(nn::Graph& g, const nn::BiLstmOutput& encoder_states, std::span<const int> extended_ids,
                           nn::Index extended_size) const;

    /// One step fed with the previous token (extended ids beyond the vocabulary
    /// are embedded as UNK). `forced_gen_prob` pins the generate/copy switch.
    DecoderStep step(nn::Graph& g, const DecoderContext& ctx, const nn::LstmState& prev, int prev_token,
                     std::optional<double> forced_gen_prob = std::nullopt) const;

private:
    DecoderConfig config_;
    nn::Parameter* embeddings_ = nullptr;
    nn::LstmCell cell_;
    nn::Parameter* w_init_ = nullptr;
    nn::Parameter* b_init_ = nullptr;
    nn::Parameter* w_memory_ = nullptr;
    nn::Parameter* w_out_ = nullptr;
    nn::Parameter* w_gen_context_ = nullptr;
    nn::Parameter* w_gen_state_ = nullptr;
};

}  // namespace mhqg
