#include "mhqg/generator.hpp"

#include <stdexcept>

namespace mhqg {

using namespace nn;

namespace {

constexpr double kProbEps = 1e-12;

EncoderConfig encoder_config(const GeneratorConfig& c) {
    EncoderConfig e;
    e.vocab_size = c.vocab_size;
    e.word_dim = c.word_dim;
    e.answer_tag_dim = c.answer_tag_dim;
    e.sf_tag_dim = c.sf_tag_dim;
    e.hidden = c.encoder_hidden;
    e.dropout = c.dropout;
    return e;
}

DecoderConfig decoder_config(const GeneratorConfig& c) {
    DecoderConfig d;
    d.vocab_size = c.vocab_size;
    d.word_dim = c.word_dim;
    d.memory_dim = 2 * c.encoder_hidden;
    d.hidden = c.decoder_hidden;
    return d;
}

SearchSettings settings_for(int max_len) {
    SearchSettings s;
    s.sos = Vocabulary::kSos;
    s.eos = Vocabulary::kEos;
    s.max_len = max_len;
    return s;
}

}  // namespace

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed)
    : config_(config), store_(std::make_unique<ParameterStore>()) {
    Rng rng(seed);
    encoder_ = Encoder(*store_, encoder_config(config), rng);
    sf_head_ = SfHead(*store_, 2 * config.encoder_hidden, rng);
    decoder_ = Decoder(*store_, decoder_config(config), encoder_.word_embeddings(), rng);
}

SourceEncoding Generator::encode(Graph& g, const EncodedExample& example) const {
    SourceEncoding src;
    src.encoder.layer1 = encoder_.encode_layer1(g, example.word_ids, example.answer_tags);
    // The SF head reads first-layer states: the second layer consumes its output.
    Expr reprs = sf_head_.sentence_representations(g, src.encoder.layer1.states, example.sentence_bounds);
    src.sf_probabilities = sf_head_.probabilities(g, reprs);
    src.sf_predictions = harden_predictions(src.sf_probabilities.value());
    const bool gold = config_.use_gold_sf && g.training();
    src.encoder.sf_tags = encoder_.sf_tag_encoding(g, gold ? std::span<const int>(example.sf_labels)
                                                           : std::span<const int>(src.sf_predictions),
                                                   example.sentence_bounds);
    src.encoder.layer2 = encoder_.encode_layer2(g, src.encoder.layer1.states.states, src.encoder.layer1.words,
                                                src.encoder.layer1.answer_tags, src.encoder.sf_tags);
    src.decoder = decoder_.prepare(g, src.encoder.layer2, example.extended_ids,
                                   config_.vocab_size + static_cast<Index>(example.oov_list.size()));
    return src;
}

std::vector<DecoderStep> Generator::teacher_force(Graph& g, const SourceEncoding& src, std::span<const int> targets) const {
    std::vector<DecoderStep> steps;
    steps.reserve(targets.size());
    LstmState state = src.decoder.initial;
    int prev = Vocabulary::kSos;
    for (int target : targets) {
        steps.push_back(decoder_.step(g, src.decoder, state, prev));
        state = steps.back().state;
        prev = target;
    }
    return steps;
}

Expr Generator::sequence_nll(std::span<const DecoderStep> steps, std::span<const int> targets) const {
    if (steps.size() != targets.size() || steps.empty()) {
        throw std::invalid_argument("sequence_nll: one non-empty step per target token required");
    }
    std::vector<Expr> terms;
    terms.reserve(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
        terms.push_back(log_clamped(element(steps[t].final_dist, targets[t]), kProbEps));
    }
    return scale(sum(terms), -1.0);
}

Expr Generator::sf_loss(const SourceEncoding& src, const EncodedExample& example) const {
    return supporting_fact_loss(src.sf_probabilities, example.sf_labels);
}

SampledSequence Generator::sample(Graph& g, const SourceEncoding& src, int max_len, Rng& rng) const {
    SampledSequence out;
    std::vector<Expr> terms;
    LstmState state = src.decoder.initial;
    int prev = Vocabulary::kSos;
    for (int t = 0; t < max_len; ++t) {
        DecoderStep step = decoder_.step(g, src.decoder, state, prev);
        const Matrix& p = step.final_dist.value();
        std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
        int token = dist(rng);
        Expr lp = log_clamped(element(step.final_dist, token), kProbEps);
        terms.push_back(lp);
        out.result.log_prob += lp.scalar();
        if (token == Vocabulary::kEos) {
            out.result.finished = true;
            break;
        }
        out.result.tokens.push_back(token);
        state = step.state;
        prev = token;
    }
    out.log_prob = terms.empty() ? g.constant(Matrix::Zero(1, 1)) : sum(terms);
    return out;
}

SearchResult Generator::greedy(Graph& g, const SourceEncoding& src, int max_len) const {
    GeneratorStepper stepper(*this, g, src);
    return greedy_search(stepper, settings_for(max_len));
}

SearchResult Generator::beam(Graph& g, const SourceEncoding& src, int width, int max_len) const {
    GeneratorStepper stepper(*this, g, src);
    return beam_search(stepper, settings_for(max_len), width);
}

SearchResult Generator::generate(const EncodedExample& example, int beam_width, int max_len) const {
    Graph g(false);
    SourceEncoding src = encode(g, example);
    return beam_width <= 1 ? greedy(g, src, max_len) : beam(g, src, beam_width, max_len);
}

std::pair<Eigen::VectorXd, GeneratorStepper::State> GeneratorStepper::advance(const State& state, int prev_token) {
    DecoderStep step = generator_.decoder().step(graph_, src_.decoder, state, prev_token);
    return {step.final_dist.value().col(0), step.state};
}

}  // namespace mhqg
