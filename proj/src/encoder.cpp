#include "mhqg/encoder.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mhqg {

using namespace nn;

Encoder::Encoder(ParameterStore& store, const EncoderConfig& config, Rng& rng) : config_(config) {
    if (config.vocab_size <= Vocabulary::kReservedCount) {
        throw std::invalid_argument("encoder needs a vocabulary beyond the reserved tokens");
    }
    word_table_ = &store.add("embed.words", config.word_dim, config.vocab_size, Init::XavierNormal, rng);
    answer_table_ = &store.add("embed.answer_tags", config.answer_tag_dim, 2, Init::XavierNormal, rng);
    sf_table_ = &store.add("embed.sf_tags", config.sf_tag_dim, 2, Init::XavierNormal, rng);
    layer1_ = BiLstm(store, "encoder.layer1", config.layer1_input_dim(), config.hidden, rng);
    layer2_ = BiLstm(store, "encoder.layer2", config.layer2_input_dim(), config.hidden, rng);
}

Layer1Output Encoder::encode_layer1(Graph& g, std::span<const int> word_ids, std::span<const int> answer_tags) const {
    if (word_ids.empty()) {
        throw std::invalid_argument("encode_layer1: empty document sequence");
    }
    if (answer_tags.size() != word_ids.size()) {
        throw std::invalid_argument("encode_layer1: answer tags and words differ in length");
    }
    Layer1Output out;
    out.words = dropout(g.lookup_columns(*word_table_, word_ids), config_.dropout);
    out.answer_tags = g.lookup_columns(*answer_table_, answer_tags);
    Expr inputs[] = {out.words, out.answer_tags};
    out.states = layer1_.run(g, concat_rows(inputs));
    return out;
}

Expr Encoder::sf_tag_encoding(Graph& g, std::span<const int> predictions, std::span<const SentenceBound> bounds) const {
    if (predictions.size() != bounds.size()) {
        throw std::invalid_argument("sf_tag_encoding: one prediction per sentence required");
    }
    std::size_t n = bounds.empty() ? 0 : static_cast<std::size_t>(bounds.back().end);
    validate_partition(bounds, n);
    std::vector<int> per_word;
    per_word.reserve(n);
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (predictions[i] != 0 && predictions[i] != 1) {
            throw std::invalid_argument("sf_tag_encoding: predictions must be hard 0/1 labels");
        }
        per_word.insert(per_word.end(), static_cast<std::size_t>(bounds[i].end - bounds[i].start), predictions[i]);
    }
    return g.lookup_columns(*sf_table_, per_word);
}

BiLstmOutput Encoder::encode_layer2(Graph& g, Expr z, Expr words, Expr answer_tags, Expr sf_tags) const {
    const Index n = z.cols();
    if (words.cols() != n || answer_tags.cols() != n || sf_tags.cols() != n) {
        throw std::invalid_argument("encode_layer2: input sequences differ in length");
    }
    if (z.rows() != 2 * config_.hidden || words.rows() != config_.word_dim ||
        answer_tags.rows() != config_.answer_tag_dim || sf_tags.rows() != config_.sf_tag_dim) {
        throw std::invalid_argument("encode_layer2: input dimensions do not match the configuration");
    }
    Expr parts[] = {dropout(z, config_.dropout), words, answer_tags, sf_tags};
    return layer2_.run(g, concat_rows(parts));
}

std::size_t Encoder::load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open word vector file " + path.string());
    }
    std::size_t loaded = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token) || !vocab.contains(token)) continue;
        Vector v(config_.word_dim);
        for (int k = 0; k < config_.word_dim; ++k) {
            if (!(fields >> v(k))) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(config_.word_dim) + " components");
            }
        }
        word_table_->value.col(vocab.id(token)) = v;
        ++loaded;
    }
    return loaded;
}

}  // namespace mhqg
