#pragma once

#include "mhqg/corpus.hpp"
#include "mhqg/generator.hpp"
#include "mhqg/synthetic.hpp"

#include <random>
#include <vector>

namespace testsupport {

using mhqg::nn::Index;
using mhqg::nn::Matrix;
using mhqg::nn::Vector;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Plain single-direction LSTM recurrence with (i, f, g, o) gate layout,
/// returning the hidden state at each position in position order.
inline std::vector<Vector> lstm_oracle(const Matrix& wx, const Matrix& wh, const Matrix& b, const Matrix& inputs,
                                       bool reverse) {
    const Index h = wh.cols();
    const Index n = inputs.cols();
    std::vector<Vector> out(static_cast<std::size_t>(n));
    Vector hidden = Vector::Zero(h), cell = Vector::Zero(h);
    for (Index k = 0; k < n; ++k) {
        const Index t = reverse ? n - 1 - k : k;
        Vector gates = wx * inputs.col(t) + wh * hidden + b.col(0);
        for (Index j = 0; j < h; ++j) {
            const double i = sigmoid(gates(j));
            const double f = sigmoid(gates(h + j));
            const double g = std::tanh(gates(2 * h + j));
            const double o = sigmoid(gates(3 * h + j));
            cell(j) = f * cell(j) + i * g;
            hidden(j) = o * std::tanh(cell(j));
        }
        out[static_cast<std::size_t>(t)] = hidden;
    }
    return out;
}

/// Random source: `lengths` gives the token count of each sentence; a few
/// positions are OOV words with extended ids at vocab_size and above.
inline mhqg::EncodedExample random_encoded(std::mt19937_64& rng, int vocab_size, const std::vector<int>& lengths,
                                           int oov_count = 2) {
    mhqg::EncodedExample ex;
    std::uniform_int_distribution<int> word(mhqg::Vocabulary::kReservedCount, vocab_size - 1);
    std::uniform_int_distribution<int> coin(0, 1);
    int start = 0;
    for (int len : lengths) {
        ex.sentence_bounds.push_back({start, start + len});
        ex.sf_labels.push_back(coin(rng));
        start += len;
    }
    for (int i = 0; i < oov_count; ++i) ex.oov_list.push_back("oov" + std::to_string(i));
    std::uniform_int_distribution<int> oov_pick(0, std::max(oov_count - 1, 0));
    for (int t = 0; t < start; ++t) {
        if (oov_count > 0 && t % 4 == 1) {
            ex.word_ids.push_back(mhqg::Vocabulary::kUnk);
            ex.extended_ids.push_back(vocab_size + oov_pick(rng));
        } else {
            int w = word(rng);
            ex.word_ids.push_back(w);
            ex.extended_ids.push_back(w);
        }
        ex.answer_tags.push_back(t == 2 || t == 3 ? 1 : 0);
    }
    ex.target_ids = {ex.extended_ids[0], ex.extended_ids[1], mhqg::Vocabulary::kEos};
    return ex;
}

inline mhqg::GeneratorConfig tiny_generator_config(int vocab_size) {
    mhqg::GeneratorConfig c;
    c.vocab_size = vocab_size;
    c.word_dim = 4;
    c.answer_tag_dim = 2;
    c.sf_tag_dim = 2;
    c.encoder_hidden = 3;
    c.decoder_hidden = 3;
    c.dropout = 0.0;
    return c;
}

struct SyntheticCorpus {
    mhqg::Vocabulary vocab;
    std::vector<mhqg::ProcessedExample> examples;
};

/// Synthetic records run through filtering and encoding, with the vocabulary
/// built from all of them.
inline SyntheticCorpus synthetic_corpus(std::size_t count, std::uint64_t seed) {
    mhqg::SyntheticOptions opts;
    opts.count = count;
    opts.seed = seed;
    auto filtered = mhqg::filter_examples(mhqg::parse_raw(mhqg::make_synthetic_hotpot(opts)));
    SyntheticCorpus out;
    out.vocab = mhqg::build_vocabulary(filtered.examples);
    for (auto& ex : filtered.examples) {
        auto encoded = mhqg::encode_example(ex, out.vocab);
        out.examples.push_back({std::move(ex), std::move(encoded)});
    }
    return out;
}

}  // namespace testsupport
