#include "mhqg/config.hpp"

#include "mhqg/hashing.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mhqg {

using nlohmann::json;

namespace {

// Single field table shared by parsing, serialization and validation.
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
    f("seed", c.seed);
    f("word_dim", c.word_dim);
    f("answer_tag_dim", c.answer_tag_dim);
    f("sf_tag_dim", c.sf_tag_dim);
    f("encoder_hidden", c.encoder_hidden);
    f("decoder_hidden", c.decoder_hidden);
    f("dropout", c.dropout);
    f("use_gold_sf", c.use_gold_sf);
    f("word_vectors", c.word_vectors);
    f("max_vocab", c.max_vocab);
    f("max_decode_len", c.max_decode_len);
    f("beam_width", c.beam_width);
    f("gamma_rl", c.gamma_rl);
    f("gamma_ml", c.gamma_ml);
    f("gamma_sp", c.gamma_sp);
    f("beta_sp", c.beta_sp);
    f("alpha_history", c.alpha_history);
    f("history_size", c.history_size);
    f("scst_warmup_steps", c.scst_warmup_steps);
    f("lr_mtl", c.lr_mtl);
    f("lr_rl", c.lr_rl);
    f("adam_beta1", c.adam_beta1);
    f("adam_beta2", c.adam_beta2);
    f("adam_eps", c.adam_eps);
    f("clip", c.clip);
    f("batch_size", c.batch_size);
    f("mtl_steps", c.mtl_steps);
    f("rl_steps", c.rl_steps);
    f("eval_every", c.eval_every);
    f("checkpoint_every", c.checkpoint_every);
    f("log_every", c.log_every);
    f("eval_max_examples", c.eval_max_examples);
    f("reward_mer_weight", c.reward_mer_weight);
    f("reward_rouge_weight", c.reward_rouge_weight);
    f("reward_bleu_weight", c.reward_bleu_weight);
    f("reward_word_dim", c.reward_word_dim);
    f("reward_char_dim", c.reward_char_dim);
    f("reward_char_filters", c.reward_char_filters);
    f("reward_char_width", c.reward_char_width);
    f("reward_hidden", c.reward_hidden);
    f("reward_dropout", c.reward_dropout);
    f("reward_reset_per_document", c.reward_reset_per_document);
    f("reward_lr", c.reward_lr);
    f("reward_steps", c.reward_steps);
    f("reward_batch_size", c.reward_batch_size);
    f("reward_eval_every", c.reward_eval_every);
    f("reward_min_first_epoch_f1", c.reward_min_first_epoch_f1);
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(std::string("missing config key: ") + key);
    const json& v = *it;
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
        ok = v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
        ok = v.is_string();
    } else if constexpr (std::is_floating_point_v<T>) {
        ok = v.is_number();
    } else if constexpr (std::is_unsigned_v<T>) {
        ok = v.is_number_unsigned();
    } else {
        ok = v.is_number_integer();
    }
    if (!ok) throw ConfigError(std::string("config key ") + key + " has the wrong type");
    out = v.get<T>();
}

}  // namespace

TrainingConfig TrainingConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TrainingConfig c;
    std::set<std::string> known;
    visit_fields(c, [&](const char* key, auto& field) {
        known.insert(key);
        read_field(j, key, field);
    });
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key: " + key);
    }
    c.validate();
    return c;
}

TrainingConfig TrainingConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

json TrainingConfig::to_json() const {
    json j = json::object();
    visit_fields(*this, [&](const char* key, const auto& field) { j[key] = field; });
    return j;
}

std::string TrainingConfig::hash() const { return sha256_hex(to_json().dump()); }

void TrainingConfig::validate() const {
    visit_fields(*this, [](const char* key, const auto& field) {
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(field)) throw ConfigError(std::string("config key ") + key + " must be finite");
        }
    });
    auto positive = [](const char* key, double v) {
        if (!(v > 0)) throw ConfigError(std::string("config key ") + key + " must be positive");
    };
    auto non_negative = [](const char* key, double v) {
        if (v < 0) throw ConfigError(std::string("config key ") + key + " must be non-negative");
    };
    positive("word_dim", word_dim);
    positive("answer_tag_dim", answer_tag_dim);
    positive("sf_tag_dim", sf_tag_dim);
    positive("encoder_hidden", encoder_hidden);
    positive("decoder_hidden", decoder_hidden);
    positive("max_vocab", max_vocab);
    positive("max_decode_len", max_decode_len);
    positive("beam_width", beam_width);
    positive("history_size", history_size);
    positive("batch_size", batch_size);
    positive("eval_every", eval_every);
    positive("checkpoint_every", checkpoint_every);
    positive("log_every", log_every);
    positive("lr_mtl", lr_mtl);
    positive("lr_rl", lr_rl);
    positive("adam_eps", adam_eps);
    positive("reward_word_dim", reward_word_dim);
    positive("reward_char_dim", reward_char_dim);
    positive("reward_char_filters", reward_char_filters);
    positive("reward_char_width", reward_char_width);
    positive("reward_hidden", reward_hidden);
    positive("reward_lr", reward_lr);
    positive("reward_batch_size", reward_batch_size);
    positive("reward_eval_every", reward_eval_every);
    non_negative("mtl_steps", mtl_steps);
    non_negative("rl_steps", rl_steps);
    non_negative("reward_steps", reward_steps);
    non_negative("scst_warmup_steps", scst_warmup_steps);
    non_negative("eval_max_examples", eval_max_examples);
    non_negative("clip", clip);
    if (dropout < 0 || dropout >= 1) throw ConfigError("config key dropout must lie in [0, 1)");
    if (reward_dropout < 0 || reward_dropout >= 1) throw ConfigError("config key reward_dropout must lie in [0, 1)");
    if (adam_beta1 < 0 || adam_beta1 >= 1) throw ConfigError("config key adam_beta1 must lie in [0, 1)");
    if (adam_beta2 < 0 || adam_beta2 >= 1) throw ConfigError("config key adam_beta2 must lie in [0, 1)");
}

GeneratorConfig TrainingConfig::generator(int vocab_size) const {
    GeneratorConfig g;
    g.vocab_size = vocab_size;
    g.word_dim = word_dim;
    g.answer_tag_dim = answer_tag_dim;
    g.sf_tag_dim = sf_tag_dim;
    g.encoder_hidden = encoder_hidden;
    g.decoder_hidden = decoder_hidden;
    g.dropout = dropout;
    g.use_gold_sf = use_gold_sf;
    return g;
}

RewardModelConfig TrainingConfig::reward_model() const {
    RewardModelConfig r;
    r.word_dim = reward_word_dim;
    r.char_dim = reward_char_dim;
    r.char_filters = reward_char_filters;
    r.char_width = reward_char_width;
    r.hidden = reward_hidden;
    r.dropout = reward_dropout;
    r.reset_per_document = reward_reset_per_document;
    return r;
}

RewardWeights TrainingConfig::reward_weights() const {
    return RewardWeights{reward_mer_weight, reward_rouge_weight, reward_bleu_weight};
}

}  // namespace mhqg
