#pragma once

#include "mhqg/corpus.hpp"
#include "mhqg/nn/lstm.hpp"
#include "mhqg/vocabulary.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <vector>

namespace mhqg {

struct RewardModelConfig {
    int word_dim = 300;
    int char_dim = 8;
    int char_filters = 100;
    int char_width = 5;
    /// Per direction.
    int hidden = 80;
    double dropout = 0.0;
    /// Run the recurrent layers separately per document, so the network has no
    /// notion of document order.
    bool reset_per_document = false;

    nlohmann::json to_json() const;
    static RewardModelConfig from_json(const nlohmann::json& j);
};

/// Question-aware supporting-fact classifier: word + character-CNN embeddings,
/// a shared BiLSTM over context and question, trilinear bi-attention, a second
/// BiLSTM, residual self-attention, and a logistic layer over the first and
/// last position of each sentence. Independent of the generator.
class RewardModel {
public:
    static constexpr int kMaxTokenChars = 20;

    RewardModel(const RewardModelConfig& config, Vocabulary vocab, std::uint64_t seed);

    const RewardModelConfig& config() const { return config_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    nn::ParameterStore& parameters() { return *store_; }
    const nn::ParameterStore& parameters() const { return *store_; }

    /// K×1 sentence probabilities over all sentences of `documents` in order.
    nn::Expr forward(nn::Graph& g, const Tokens& question, const std::vector<Document>& documents) const;

    std::vector<double> predict_sf(const Tokens& question, const std::vector<Document>& documents) const;
    /// Sentences with probability ≥ 0.5, addressed as (document, sentence).
    std::set<SupportingFact> predict_supporting_facts(const Tokens& question,
                                                      const std::vector<Document>& documents) const;

    void save(const std::filesystem::path& path) const;
    static RewardModel load(const std::filesystem::path& path);

private:
    struct Attention {
        nn::Parameter* w_left = nullptr;   ///< 1×d
        nn::Parameter* w_right = nullptr;  ///< 1×d
        nn::Parameter* w_cross = nullptr;  ///< d×1
    };

    Attention make_attention(const std::string& prefix, nn::Rng& rng);
    nn::Expr embed(nn::Graph& g, const std::vector<const std::string*>& tokens) const;
    nn::Expr char_features(nn::Graph& g, const std::vector<const std::string*>& tokens) const;
    nn::Expr run_context(nn::Graph& g, const nn::BiLstm& lstm, nn::Expr inputs, std::span<const int> doc_ends) const;
    nn::Expr bi_attention(nn::Graph& g, const Attention& att, nn::Expr context, nn::Expr query) const;

    RewardModelConfig config_;
    Vocabulary vocab_;
    std::unique_ptr<nn::ParameterStore> store_;
    nn::Parameter* word_table_ = nullptr;
    nn::Parameter* char_table_ = nullptr;
    nn::Parameter* conv_w_ = nullptr;
    nn::Parameter* conv_b_ = nullptr;
    nn::BiLstm contextual_;
    Attention question_attention_;
    nn::Parameter* fuse_w_ = nullptr;
    nn::Parameter* fuse_b_ = nullptr;
    nn::BiLstm modeling_;
    Attention self_attention_;
    nn::Parameter* self_w_ = nullptr;
    nn::Parameter* self_b_ = nullptr;
    nn::Parameter* out_w_ = nullptr;
    nn::Parameter* out_b_ = nullptr;
};

/// F1 between the reward model's supporting facts for `question` and the gold ones.
double mer_reward(const RewardModel& model, const Tokens& question, const QAExample& example);

/// Mean gold-question SF F1 over a set of examples.
double mean_sf_f1(const RewardModel& model, const std::vector<QAExample>& examples);

struct RewardTrainOptions {
    double learning_rate = 1e-3;
    int steps = 2000;
    int batch_size = 16;
    int eval_every = 100;
    /// Abort when dev F1 after the first epoch falls below this.
    double min_first_epoch_f1 = 0.2;
    std::uint64_t seed = 1;
    std::function<void(const nlohmann::json&)> log;
};

class RewardTrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RewardTrainResult {
    std::unique_ptr<RewardModel> model;
    double best_dev_f1 = 0.0;
    int best_step = 0;
};

/// Builds the reward vocabulary from `train`, fits with BCE and Adam, and
/// returns the parameters with the best dev F1.
RewardTrainResult train_reward_model(const RewardModelConfig& config, const std::vector<QAExample>& train,
                                     const std::vector<QAExample>& dev, const RewardTrainOptions& options);

}  // namespace mhqg
