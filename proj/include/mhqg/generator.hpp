#pragma once

#include "mhqg/corpus.hpp"
#include "mhqg/decoder.hpp"
#include "mhqg/encoder.hpp"
#include "mhqg/search.hpp"
#include "mhqg/sf_head.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mhqg {

struct GeneratorConfig {
    int vocab_size = 0;
    int word_dim = 300;
    int answer_tag_dim = 3;
    int sf_tag_dim = 3;
    int encoder_hidden = 512;
    int decoder_hidden = 512;
    double dropout = 0.3;
    /// Feed gold supporting-fact labels to the second encoder layer while training.
    bool use_gold_sf = false;
};

/// Everything computed from the source side of one example.
struct SourceEncoding {
    EncoderOutput encoder;
    nn::Expr sf_probabilities;  ///< K×1
    std::vector<int> sf_predictions;
    DecoderContext decoder;
};

/// A decoded token sequence with its differentiable log-probability.
struct SampledSequence {
    SearchResult result;
    nn::Expr log_prob;  ///< 1×1, Σ_t log P(y_t | y_<t)
};

/// The multi-task generator: shared encoder, answer-aware SF head, and
/// copy-enabled decoder. Owns its parameters.
class Generator {
public:
    Generator(const GeneratorConfig& config, std::uint64_t seed);

    const GeneratorConfig& config() const { return config_; }
    nn::ParameterStore& parameters() { return *store_; }
    const nn::ParameterStore& parameters() const { return *store_; }
    const Encoder& encoder() const { return encoder_; }
    const SfHead& sf_head() const { return sf_head_; }
    const Decoder& decoder() const { return decoder_; }

    SourceEncoding encode(nn::Graph& g, const EncodedExample& example) const;

    /// Teacher-forced steps: the input at step t is SOS for t = 0, else targets[t−1].
    std::vector<DecoderStep> teacher_force(nn::Graph& g, const SourceEncoding& src, std::span<const int> targets) const;

    /// −Σ_t log P(targets[t]), probabilities clamped at 1e-12.
    nn::Expr sequence_nll(std::span<const DecoderStep> steps, std::span<const int> targets) const;

    nn::Expr sf_loss(const SourceEncoding& src, const EncodedExample& example) const;

    /// Multinomial sampling on the graph, keeping the log-probability differentiable.
    SampledSequence sample(nn::Graph& g, const SourceEncoding& src, int max_len, nn::Rng& rng) const;

    SearchResult greedy(nn::Graph& g, const SourceEncoding& src, int max_len) const;
    SearchResult beam(nn::Graph& g, const SourceEncoding& src, int width, int max_len) const;

    /// Inference convenience: fresh graph, no dropout.
    SearchResult generate(const EncodedExample& example, int beam_width, int max_len) const;

private:
    GeneratorConfig config_;
    std::unique_ptr<nn::ParameterStore> store_;
    Encoder encoder_;
    SfHead sf_head_;
    Decoder decoder_;
};

/// Adapts a generator's decoder to the search interface for one encoded source.
class GeneratorStepper {
public:
    using State = nn::LstmState;

    GeneratorStepper(const Generator& generator, nn::Graph& g, const SourceEncoding& src)
        : generator_(generator), graph_(g), src_(src) {}

    State initial_state() const { return src_.decoder.initial; }
    std::pair<Eigen::VectorXd, State> advance(const State& state, int prev_token);

private:
    const Generator& generator_;
    nn::Graph& graph_;
    const SourceEncoding& src_;
};

}  // namespace mhqg
