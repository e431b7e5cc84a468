#include "mhqg/decoder.hpp"

#include "mhqg/vocabulary.hpp"

#include <stdexcept>

namespace mhqg {

using namespace nn;

Decoder::Decoder(ParameterStore& store, const DecoderConfig& config, Parameter& word_embeddings, Rng& rng)
    : config_(config), embeddings_(&word_embeddings) {
    if (word_embeddings.value.rows() != config.word_dim || word_embeddings.value.cols() != config.vocab_size) {
        throw std::invalid_argument("Decoder: embedding table does not match word_dim × vocab_size");
    }
    cell_ = LstmCell(store, "decoder.lstm", config.word_dim, config.hidden, rng);
    w_init_ = &store.add("decoder.init.w", config.hidden, config.memory_dim, Init::XavierNormal, rng);
    b_init_ = &store.add("decoder.init.b", config.hidden, 1, Init::Zero, rng);
    w_memory_ = &store.add("decoder.memory.w", config.hidden, config.memory_dim, Init::XavierNormal, rng);
    w_out_ = &store.add("decoder.out.w", config.vocab_size, config.memory_dim + config.hidden, Init::XavierNormal, rng);
    w_gen_context_ = &store.add("decoder.gen.wc", 1, config.memory_dim, Init::XavierNormal, rng);
    w_gen_state_ = &store.add("decoder.gen.ws", 1, config.hidden, Init::XavierNormal, rng);
}

DecoderContext Decoder::prepare(Graph& g, const BiLstmOutput& encoder_states, std::span<const int> extended_ids,
                                Index extended_size) const {
    const Index n = encoder_states.states.cols();
    if (n == 0) {
        throw std::invalid_argument("Decoder::prepare: empty encoder output");
    }
    if (encoder_states.states.rows() != config_.memory_dim) {
        throw std::invalid_argument("Decoder::prepare: encoder state width mismatch");
    }
    if (static_cast<Index>(extended_ids.size()) != n) {
        throw std::invalid_argument("Decoder::prepare: one extended id per source position required");
    }
    if (extended_size < config_.vocab_size) {
        throw std::invalid_argument("Decoder::prepare: extended vocabulary smaller than the base vocabulary");
    }
    for (int id : extended_ids) {
        if (id < 0 || id >= extended_size) throw std::invalid_argument("Decoder::prepare: extended id out of range");
    }
    DecoderContext ctx;
    ctx.memory = encoder_states.states;
    ctx.keys_t = transpose(matmul(g.parameter(*w_memory_), ctx.memory));
    ctx.extended_ids.assign(extended_ids.begin(), extended_ids.end());
    ctx.extended_size = extended_size;

    // Final forward state ⊕ backward state at position 0 summarize the whole input.
    Expr parts[] = {encoder_states.forward.back(), encoder_states.backward.front()};
    Expr summary = concat_rows(parts);
    ctx.initial.hidden = tanh(affine(g.parameter(*w_init_), summary, g.parameter(*b_init_)));
    ctx.initial.cell = g.constant(Matrix::Zero(config_.hidden, 1));
    return ctx;
}

DecoderStep Decoder::step(Graph& g, const DecoderContext& ctx, const LstmState& prev, int prev_token,
                          std::optional<double> forced_gen_prob) const {
    if (prev_token < 0 || prev_token >= ctx.extended_size) {
        throw std::invalid_argument("Decoder::step: previous token outside the extended vocabulary");
    }
    const int input_id = prev_token < config_.vocab_size ? prev_token : Vocabulary::kUnk;
    const int ids[] = {input_id};
    DecoderStep out;
    out.state = cell_.step(g, prev, g.lookup_columns(*embeddings_, ids));
    Expr s = out.state.hidden;

    out.attention = softmax_cols(matmul(ctx.keys_t, s));
    out.context = matmul(ctx.memory, out.attention);

    Expr cs[] = {out.context, s};
    out.vocab_dist = softmax_cols(tanh(matmul(g.parameter(*w_out_), concat_rows(cs))));

    if (forced_gen_prob) {
        if (*forced_gen_prob < 0.0 || *forced_gen_prob > 1.0) {
            throw std::invalid_argument("Decoder::step: forced generation probability outside [0, 1]");
        }
        out.gen_prob = g.constant(Matrix::Constant(1, 1, *forced_gen_prob));
    } else {
        Expr switch_logit = matmul(g.parameter(*w_gen_context_), out.context) + matmul(g.parameter(*w_gen_state_), s);
        out.gen_prob = affine_scalar(sigmoid(switch_logit), -1.0, 1.0);
    }
    Expr copy_prob = affine_scalar(out.gen_prob, -1.0, 1.0);
    Expr copy_dist = scatter_add(out.attention, ctx.extended_ids, ctx.extended_size);
    out.final_dist = scalar_mul(out.gen_prob, pad_rows(out.vocab_dist, ctx.extended_size)) +
                     scalar_mul(copy_prob, copy_dist);
    return out;
}

}  // namespace mhqg
