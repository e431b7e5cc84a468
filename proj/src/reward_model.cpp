#include "mhqg/reward_model.hpp"

#include "mhqg/binary_io.hpp"
#include "mhqg/nn/optimizer.hpp"
#include "mhqg/sf_head.hpp"
#include "mhqg/text_scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace mhqg {

using namespace nn;
using nlohmann::json;

namespace {

constexpr const char* kMagic = "mhqg-reward-model";
constexpr std::uint64_t kVersion = 1;
// Byte value b maps to char id b + 1; id 0 pads short tokens.
constexpr int kCharVocab = 257;

}  // namespace

json RewardModelConfig::to_json() const {
    return json{{"word_dim", word_dim}, {"char_dim", char_dim}, {"char_filters", char_filters},
                {"char_width", char_width}, {"hidden", hidden}, {"dropout", dropout},
                {"reset_per_document", reset_per_document}};
}

RewardModelConfig RewardModelConfig::from_json(const json& j) {
    RewardModelConfig c;
    c.word_dim = j.at("word_dim").get<int>();
    c.char_dim = j.at("char_dim").get<int>();
    c.char_filters = j.at("char_filters").get<int>();
    c.char_width = j.at("char_width").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.reset_per_document = j.at("reset_per_document").get<bool>();
    return c;
}

RewardModel::RewardModel(const RewardModelConfig& config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), store_(std::make_unique<ParameterStore>()) {
    if (config.word_dim <= 0 || config.char_dim <= 0 || config.char_filters <= 0 || config.char_width <= 0 ||
        config.hidden <= 0) {
        throw std::invalid_argument("reward model dimensions must be positive");
    }
    Rng rng(seed);
    const Index d = 2 * config.hidden;
    word_table_ = &store_->add("reward.embed.words", config.word_dim, static_cast<Index>(vocab_.size()),
                               Init::XavierNormal, rng);
    char_table_ = &store_->add("reward.embed.chars", config.char_dim, kCharVocab, Init::XavierNormal, rng);
    conv_w_ = &store_->add("reward.char_conv.w", config.char_filters, config.char_width * config.char_dim,
                           Init::XavierNormal, rng);
    conv_b_ = &store_->add("reward.char_conv.b", config.char_filters, 1, Init::Zero, rng);
    contextual_ = BiLstm(*store_, "reward.contextual", config.word_dim + config.char_filters, config.hidden, rng);
    question_attention_ = make_attention("reward.bi_attention", rng);
    fuse_w_ = &store_->add("reward.fuse.w", d, 4 * d, Init::XavierNormal, rng);
    fuse_b_ = &store_->add("reward.fuse.b", d, 1, Init::Zero, rng);
    modeling_ = BiLstm(*store_, "reward.modeling", d, config.hidden, rng);
    self_attention_ = make_attention("reward.self_attention", rng);
    self_w_ = &store_->add("reward.self.w", d, 4 * d, Init::XavierNormal, rng);
    self_b_ = &store_->add("reward.self.b", d, 1, Init::Zero, rng);
    // A zero classifier starts at p = 0.5 everywhere, i.e. the all-positive baseline.
    out_w_ = &store_->add("reward.classifier.w", 1, 2 * d, Init::Zero, rng);
    out_b_ = &store_->add("reward.classifier.b", 1, 1, Init::Zero, rng);
}

RewardModel::Attention RewardModel::make_attention(const std::string& prefix, Rng& rng) {
    const Index d = 2 * config_.hidden;
    Attention a;
    a.w_left = &store_->add(prefix + ".w_context", 1, d, Init::XavierNormal, rng);
    a.w_right = &store_->add(prefix + ".w_query", 1, d, Init::XavierNormal, rng);
    a.w_cross = &store_->add(prefix + ".w_cross", d, 1, Init::XavierNormal, rng);
    return a;
}

Expr RewardModel::char_features(Graph& g, const std::vector<const std::string*>& tokens) const {
    const int width = config_.char_width;
    std::vector<std::vector<int>> offsets(static_cast<std::size_t>(width));
    std::vector<Index> ends;
    ends.reserve(tokens.size());
    Index windows = 0;
    for (const std::string* tok : tokens) {
        std::vector<int> ids;
        for (std::size_t i = 0; i < tok->size() && i < static_cast<std::size_t>(kMaxTokenChars); ++i) {
            ids.push_back(static_cast<unsigned char>((*tok)[i]) + 1);
        }
        if (ids.size() < static_cast<std::size_t>(width)) ids.resize(static_cast<std::size_t>(width), 0);
        const std::size_t count = ids.size() - static_cast<std::size_t>(width) + 1;
        for (std::size_t k = 0; k < count; ++k) {
            for (int o = 0; o < width; ++o) offsets[static_cast<std::size_t>(o)].push_back(ids[k + static_cast<std::size_t>(o)]);
        }
        windows += static_cast<Index>(count);
        ends.push_back(windows);
    }
    std::vector<Expr> rows;
    rows.reserve(offsets.size());
    for (const auto& ids : offsets) rows.push_back(g.lookup_columns(*char_table_, ids));
    Expr conv = relu(affine(g.parameter(*conv_w_), concat_rows(rows), g.parameter(*conv_b_)));
    return segment_max_cols(conv, ends);
}

Expr RewardModel::embed(Graph& g, const std::vector<const std::string*>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string* tok : tokens) ids.push_back(vocab_.id(*tok));
    Expr parts[] = {g.lookup_columns(*word_table_, ids), char_features(g, tokens)};
    return dropout(concat_rows(parts), config_.dropout);
}

Expr RewardModel::run_context(Graph& g, const BiLstm& lstm, Expr inputs, std::span<const int> doc_ends) const {
    if (!config_.reset_per_document) return lstm.run(g, inputs).states;
    std::vector<Expr> blocks;
    int start = 0;
    for (int end : doc_ends) {
        blocks.push_back(lstm.run(g, slice_cols(inputs, start, end - start)).states);
        start = end;
    }
    return concat_cols(blocks);
}

Expr RewardModel::bi_attention(Graph& g, const Attention& att, Expr context, Expr query) const {
    const Index t = context.cols();
    const Index j = query.cols();
    // S[i, k] = w_l·c_i + w_r·q_k + (c_i ∘ w_x)·q_k
    Expr left = broadcast_cols(transpose(matmul(g.parameter(*att.w_left), context)), j);
    Expr right = broadcast_rows(matmul(g.parameter(*att.w_right), query), t);
    Expr cross = matmul(transpose(cmult(context, broadcast_cols(g.parameter(*att.w_cross), t))), query);
    Expr s = left + right + cross;

    Expr c2q = matmul(query, softmax_cols(transpose(s)));
    Expr q2c = broadcast_cols(matmul(context, softmax_cols(max_cols(s))), t);
    Expr parts[] = {context, c2q, cmult(context, c2q), cmult(context, q2c)};
    return concat_rows(parts);
}

Expr RewardModel::forward(Graph& g, const Tokens& question, const std::vector<Document>& documents) const {
    if (question.empty()) throw std::invalid_argument("reward model: empty question");
    std::vector<const std::string*> context_tokens;
    std::vector<int> doc_ends;
    std::vector<SentenceBound> bounds;
    for (const auto& doc : documents) {
        for (const auto& sentence : doc.sentences) {
            if (sentence.empty()) throw std::invalid_argument("reward model: empty sentence");
            SentenceBound b{static_cast<int>(context_tokens.size()), 0};
            for (const auto& tok : sentence) context_tokens.push_back(&tok);
            b.end = static_cast<int>(context_tokens.size());
            bounds.push_back(b);
        }
        if (!doc.sentences.empty()) doc_ends.push_back(static_cast<int>(context_tokens.size()));
    }
    if (bounds.empty()) throw std::invalid_argument("reward model: no sentences");
    std::vector<const std::string*> question_tokens;
    for (const auto& tok : question) question_tokens.push_back(&tok);

    Expr context = run_context(g, contextual_, embed(g, context_tokens), doc_ends);
    Expr query = contextual_.run(g, embed(g, question_tokens)).states;

    Expr fused = relu(affine(g.parameter(*fuse_w_), bi_attention(g, question_attention_, context, query),
                             g.parameter(*fuse_b_)));
    Expr modeled = run_context(g, modeling_, fused, doc_ends);
    Expr attended = relu(affine(g.parameter(*self_w_), bi_attention(g, self_attention_, modeled, modeled),
                                g.parameter(*self_b_)));
    Expr out = modeled + attended;

    std::vector<Expr> reprs;
    reprs.reserve(bounds.size());
    for (const auto& b : bounds) {
        Expr ends[] = {column(out, b.start), column(out, b.end - 1)};
        reprs.push_back(concat_rows(ends));
    }
    Expr logits = transpose(matmul(g.parameter(*out_w_), concat_cols(reprs)));
    return sigmoid(add(logits, broadcast_rows(g.parameter(*out_b_), logits.rows())));
}

std::vector<double> RewardModel::predict_sf(const Tokens& question, const std::vector<Document>& documents) const {
    Graph g(false);
    Expr p = forward(g, question, documents);
    const Matrix& v = p.value();
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::set<SupportingFact> RewardModel::predict_supporting_facts(const Tokens& question,
                                                               const std::vector<Document>& documents) const {
    auto probs = predict_sf(question, documents);
    std::set<SupportingFact> out;
    std::size_t k = 0;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        for (std::size_t s = 0; s < documents[d].sentences.size(); ++s, ++k) {
            if (probs[k] >= 0.5) out.insert({d, s});
        }
    }
    return out;
}

void RewardModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write reward checkpoint " + path.string());
    binary::write_string(out, kMagic);
    binary::write_u64(out, kVersion);
    binary::write_string(out, config_.to_json().dump());
    binary::write_u64(out, vocab_.size() - Vocabulary::kReservedCount);
    for (std::size_t i = Vocabulary::kReservedCount; i < vocab_.size(); ++i) {
        binary::write_string(out, vocab_.tokens()[i]);
    }
    store_->write(out);
    if (!out) throw std::runtime_error("failed writing reward checkpoint " + path.string());
}

RewardModel RewardModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open reward checkpoint " + path.string());
    if (binary::read_string(in) != kMagic) {
        throw binary::FormatError(path.string() + " is not a reward-model checkpoint");
    }
    if (auto version = binary::read_u64(in); version != kVersion) {
        throw binary::FormatError("reward checkpoint version " + std::to_string(version) + " (expected " +
                                  std::to_string(kVersion) + ")");
    }
    auto config = RewardModelConfig::from_json(json::parse(binary::read_string(in)));
    std::vector<std::string> tokens(binary::read_u64(in));
    for (auto& t : tokens) t = binary::read_string(in);
    RewardModel model(config, Vocabulary(tokens), 0);
    model.store_->read(in);
    return model;
}

double mer_reward(const RewardModel& model, const Tokens& question, const QAExample& example) {
    if (question.empty()) return 0.0;
    return supporting_fact_f1(model.predict_supporting_facts(question, example.documents), example.supporting_facts);
}

double mean_sf_f1(const RewardModel& model, const std::vector<QAExample>& examples) {
    if (examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) total += mer_reward(model, ex.question, ex);
    return total / static_cast<double>(examples.size());
}

namespace {

std::vector<int> sentence_labels(const QAExample& ex) {
    std::vector<int> labels;
    for (std::size_t d = 0; d < ex.documents.size(); ++d) {
        for (std::size_t s = 0; s < ex.documents[d].sentences.size(); ++s) {
            labels.push_back(ex.supporting_facts.count({d, s}) ? 1 : 0);
        }
    }
    return labels;
}

double parameter_norm(const ParameterStore& store) {
    double sq = 0.0;
    for (const Parameter* p : store.all()) sq += p->value.squaredNorm();
    return std::sqrt(sq);
}

}  // namespace

RewardTrainResult train_reward_model(const RewardModelConfig& config, const std::vector<QAExample>& train,
                                     const std::vector<QAExample>& dev, const RewardTrainOptions& options) {
    if (train.empty()) throw std::invalid_argument("train_reward_model: empty training split");
    if (options.batch_size < 1 || options.steps < 0 || options.eval_every < 1) {
        throw std::invalid_argument("train_reward_model: invalid schedule");
    }
    RewardTrainResult result;
    result.model = std::make_unique<RewardModel>(config, build_vocabulary(train), options.seed);
    RewardModel& model = *result.model;
    AdamConfig adam_config;
    adam_config.learning_rate = options.learning_rate;
    Adam adam(model.parameters(), adam_config);
    Rng rng(options.seed + 1);

    const auto& eval_set = dev.empty() ? train : dev;
    std::vector<Matrix> best;
    auto snapshot = [&] {
        best.clear();
        for (const Parameter* p : model.parameters().all()) best.push_back(p->value);
    };
    result.best_dev_f1 = mean_sf_f1(model, eval_set);
    snapshot();
    if (options.log) options.log(json{{"step", 0}, {"dev_f1", result.best_dev_f1}});

    const int steps_per_epoch = static_cast<int>((train.size() + static_cast<std::size_t>(options.batch_size) - 1) /
                                                 static_cast<std::size_t>(options.batch_size));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    for (int step = 1; step <= options.steps; ++step) {
        double batch_loss = 0.0;
        for (int b = 0; b < options.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const QAExample& ex = train[order[cursor++]];
            Graph g(true, &rng);
            Expr probs = model.forward(g, ex.question, ex.documents);
            Expr loss = scale(supporting_fact_loss(probs, sentence_labels(ex)), 1.0 / options.batch_size);
            batch_loss += loss.scalar();
            g.backward(loss);
        }
        if (!std::isfinite(batch_loss)) {
            throw RewardTrainingError("reward training produced a non-finite loss at step " + std::to_string(step) +
                                      " (parameter norm " + std::to_string(parameter_norm(model.parameters())) + ")");
        }
        adam.step();

        const bool epoch_end = step == steps_per_epoch;
        if (step % options.eval_every == 0 || epoch_end || step == options.steps) {
            double f1 = mean_sf_f1(model, eval_set);
            if (options.log) options.log(json{{"step", step}, {"loss", batch_loss}, {"dev_f1", f1}});
            if (f1 > result.best_dev_f1) {
                result.best_dev_f1 = f1;
                result.best_step = step;
                snapshot();
            }
            if (epoch_end && f1 < options.min_first_epoch_f1) {
                throw RewardTrainingError("reward model diverged: dev F1 " + std::to_string(f1) +
                                          " after the first epoch (threshold " +
                                          std::to_string(options.min_first_epoch_f1) + "), last loss " +
                                          std::to_string(batch_loss) + ", parameter norm " +
                                          std::to_string(parameter_norm(model.parameters())));
            }
        }
    }
    auto params = model.parameters().all();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
    return result;
}

}  // namespace mhqg
