#include "mhqg/nn/lstm.hpp"

#include <stdexcept>

namespace mhqg::nn {

LstmCell::LstmCell(ParameterStore& store, const std::string& prefix, Index input_dim, Index hidden_dim, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
    wx_ = &store.add(prefix + ".wx", 4 * hidden_dim, input_dim, Init::XavierNormal, rng);
    wh_ = &store.add(prefix + ".wh", 4 * hidden_dim, hidden_dim, Init::XavierNormal, rng);
    b_ = &store.add(prefix + ".b", 4 * hidden_dim, 1, Init::Zero, rng);
}

LstmState LstmCell::zero_state(Graph& g) const {
    return {g.constant(Matrix::Zero(hidden_dim_, 1)), g.constant(Matrix::Zero(hidden_dim_, 1))};
}

Expr LstmCell::gates_from(Graph& g, Expr projected_input, const LstmState& prev, bool first) const {
    if (first) {
        return projected_input;
    }
    return add(projected_input, matmul(g.parameter(*wh_), prev.hidden));
}

LstmState LstmCell::step(Graph& g, const LstmState& prev, Expr input) const {
    if (input.rows() != input_dim_ || input.cols() != 1) {
        throw std::invalid_argument("LstmCell::step: expected a " + std::to_string(input_dim_) +
                                    "-dim input column, got " + std::to_string(input.rows()) + "x" +
                                    std::to_string(input.cols()));
    }
    Expr gates = affine(g.parameter(*wx_), input, g.parameter(*b_));
    gates = add(gates, matmul(g.parameter(*wh_), prev.hidden));
    Expr hc = lstm_cell(gates, prev.cell);
    return {slice_rows(hc, 0, hidden_dim_), slice_rows(hc, hidden_dim_, hidden_dim_)};
}

std::vector<Expr> LstmCell::run(Graph& g, Expr inputs, bool reverse) const {
    const Index n = inputs.cols();
    if (inputs.rows() != input_dim_) {
        throw std::invalid_argument("LstmCell::run: input dimension " + std::to_string(inputs.rows()) +
                                    " does not match cell input " + std::to_string(input_dim_));
    }
    if (n == 0) {
        throw std::invalid_argument("LstmCell::run: empty sequence");
    }
    // One matrix product for all input projections, then the recurrence.
    Expr projected = affine(g.parameter(*wx_), inputs, g.parameter(*b_));
    std::vector<Expr> out(static_cast<std::size_t>(n));
    LstmState state = zero_state(g);
    for (Index k = 0; k < n; ++k) {
        Index t = reverse ? n - 1 - k : k;
        Expr gates = gates_from(g, column(projected, t), state, k == 0);
        Expr hc = lstm_cell(gates, state.cell);
        state = {slice_rows(hc, 0, hidden_dim_), slice_rows(hc, hidden_dim_, hidden_dim_)};
        out[static_cast<std::size_t>(t)] = state.hidden;
    }
    return out;
}

Expr BiLstmOutput::at(std::size_t t) const {
    Expr parts[] = {forward.at(t), backward.at(t)};
    return concat_rows(parts);
}

BiLstm::BiLstm(ParameterStore& store, const std::string& prefix, Index input_dim, Index hidden_dim, Rng& rng)
    : fwd_(store, prefix + ".fwd", input_dim, hidden_dim, rng), bwd_(store, prefix + ".bwd", input_dim, hidden_dim, rng) {}

BiLstmOutput BiLstm::run(Graph& g, Expr inputs) const {
    BiLstmOutput out;
    out.forward = fwd_.run(g, inputs, false);
    out.backward = bwd_.run(g, inputs, true);
    Expr halves[] = {concat_cols(out.forward), concat_cols(out.backward)};
    out.states = concat_rows(halves);
    return out;
}

}  // namespace mhqg::nn
