#pragma once

#include "mhqg/generator.hpp"
#include "mhqg/reward_model.hpp"
#include "mhqg/text_scores.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace mhqg {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every tunable of a run. Loaded from a flat JSON object in which every key
/// is required and unknown keys are rejected.
struct TrainingConfig {
    std::uint64_t seed = 1;

    int word_dim = 300;
    int answer_tag_dim = 3;
    int sf_tag_dim = 3;
    int encoder_hidden = 512;
    int decoder_hidden = 512;
    double dropout = 0.3;
    bool use_gold_sf = false;
    std::string word_vectors;
    int max_vocab = 50000;

    int max_decode_len = 30;
    int beam_width = 4;

    double gamma_rl = 0.99;
    double gamma_ml = 0.01;
    double gamma_sp = 0.1;
    double beta_sp = 10.0;
    double alpha_history = 0.9;
    int history_size = 5000;
    int scst_warmup_steps = 100;

    double lr_mtl = 0.01;
    double lr_rl = 1e-5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip = 5.0;
    int batch_size = 16;
    int mtl_steps = 20000;
    int rl_steps = 10000;
    int eval_every = 500;
    int checkpoint_every = 500;
    int log_every = 10;
    /// Dev examples decoded per evaluation; 0 means all.
    int eval_max_examples = 0;

    double reward_mer_weight = 1.0;
    double reward_rouge_weight = 1.0;
    double reward_bleu_weight = 0.0;

    int reward_word_dim = 300;
    int reward_char_dim = 8;
    int reward_char_filters = 100;
    int reward_char_width = 5;
    int reward_hidden = 80;
    double reward_dropout = 0.2;
    bool reward_reset_per_document = false;
    double reward_lr = 1e-3;
    int reward_steps = 20000;
    int reward_batch_size = 16;
    int reward_eval_every = 500;
    double reward_min_first_epoch_f1 = 0.2;

    static TrainingConfig from_json(const nlohmann::json& j);
    static TrainingConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    /// SHA-256 of the canonical JSON form.
    std::string hash() const;
    /// Throws ConfigError naming the first offending key.
    void validate() const;

    GeneratorConfig generator(int vocab_size) const;
    RewardModelConfig reward_model() const;
    RewardWeights reward_weights() const;
};

}  // namespace mhqg
