#pragma once

#include "mhqg/nn/ops.hpp"
#include "mhqg/nn/parameters.hpp"

#include <string>
#include <vector>

namespace mhqg::nn {

struct LstmState {
    Expr hidden;
    Expr cell;
};

/// Single-direction LSTM: gates = Wx·x + Wh·h + b, laid out (i, f, g, o).
class LstmCell {
public:
    LstmCell() = default;
    LstmCell(ParameterStore& store, const std::string& prefix, Index input_dim, Index hidden_dim, Rng& rng);

    Index input_dim() const { return input_dim_; }
    Index hidden_dim() const { return hidden_dim_; }

    LstmState zero_state(Graph& g) const;
    LstmState step(Graph& g, const LstmState& prev, Expr input) const;

    /// Runs over the columns of `inputs` (input_dim × N) in the given direction,
    /// returning hidden states indexed by position (not by visit order).
    std::vector<Expr> run(Graph& g, Expr inputs, bool reverse) const;

    Parameter& input_weight() const { return *wx_; }
    Parameter& hidden_weight() const { return *wh_; }
    Parameter& bias() const { return *b_; }

private:
    Expr gates_from(Graph& g, Expr projected_input, const LstmState& prev, bool first) const;

    Parameter* wx_ = nullptr;
    Parameter* wh_ = nullptr;
    Parameter* b_ = nullptr;
    Index input_dim_ = 0;
    Index hidden_dim_ = 0;
};

struct BiLstmOutput {
    std::vector<Expr> forward;
    std::vector<Expr> backward;
    /// 2H × N, column t = forward[t] ⊕ backward[t].
    Expr states;

    /// forward[t] ⊕ backward[t] as a 2H×1 column.
    Expr at(std::size_t t) const;
};

class BiLstm {
public:
    BiLstm() = default;
    BiLstm(ParameterStore& store, const std::string& prefix, Index input_dim, Index hidden_dim, Rng& rng);

    BiLstmOutput run(Graph& g, Expr inputs) const;

    Index input_dim() const { return fwd_.input_dim(); }
    Index hidden_dim() const { return fwd_.hidden_dim(); }
    const LstmCell& forward_cell() const { return fwd_; }
    const LstmCell& backward_cell() const { return bwd_; }

private:
    LstmCell fwd_;
    LstmCell bwd_;
};

}  // namespace mhqg::nn
