#include "mhqg/sf_head.hpp"

#include <stdexcept>

namespace mhqg {

using namespace nn;

namespace {
constexpr double kProbEps = 1e-12;
}

SfHead::SfHead(ParameterStore& store, Index state_dim, Rng& rng) {
    weight_ = &store.add("sf_head.w", 1, 2 * state_dim, Init::XavierNormal, rng);
    bias_ = &store.add("sf_head.b", 1, 1, Init::Zero, rng);
}

Expr SfHead::sentence_representations(Graph& g, const BiLstmOutput& states, std::span<const SentenceBound> bounds) const {
    if (bounds.empty()) {
        throw std::invalid_argument("sentence_representations: no sentences");
    }
    validate_partition(bounds, states.forward.size());
    (void)g;
    std::vector<Expr> columns;
    columns.reserve(bounds.size());
    for (const auto& b : bounds) {
        Expr parts[] = {states.at(static_cast<std::size_t>(b.start)), states.at(static_cast<std::size_t>(b.end - 1))};
        columns.push_back(concat_rows(parts));
    }
    return concat_cols(columns);
}

Expr SfHead::probabilities(Graph& g, Expr representations) const {
    if (representations.rows() != weight_->value.cols()) {
        throw std::invalid_argument("SfHead::probabilities: representation size mismatch");
    }
    // (1×2D · 2D×K)ᵀ gives one logit per sentence as a column.
    Expr logits = transpose(matmul(g.parameter(*weight_), representations));
    return sigmoid(add(logits, broadcast_rows(g.parameter(*bias_), logits.rows())));
}

Expr supporting_fact_loss(Expr probabilities, std::span<const int> labels) {
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size() || probabilities.cols() != 1) {
        throw std::invalid_argument("supporting_fact_loss: one label per sentence required");
    }
    Matrix y(probabilities.rows(), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw std::invalid_argument("supporting_fact_loss: labels must be 0 or 1");
        }
        y(static_cast<Index>(i), 0) = labels[i];
    }
    Graph& g = probabilities.graph();
    Expr yc = g.constant(y);
    Expr not_y = g.constant(Matrix::Ones(y.rows(), 1) - y);
    Expr log_p = log_clamped(probabilities, kProbEps);
    Expr log_not_p = log_clamped(affine_scalar(probabilities, -1.0, 1.0), kProbEps);
    return scale(sum_all(add(cmult(yc, log_p), cmult(not_y, log_not_p))), -1.0);
}

std::vector<int> harden_predictions(const Matrix& probabilities) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(probabilities.size()));
    for (Index i = 0; i < probabilities.size(); ++i) out.push_back(probabilities(i) >= 0.5 ? 1 : 0);
    return out;
}

}  // namespace mhqg
