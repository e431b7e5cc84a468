#pragma once

#include "mhqg/config.hpp"
#include "mhqg/generator.hpp"
#include "mhqg/nn/optimizer.hpp"
#include "mhqg/reward_model.hpp"
#include "mhqg/text_scores.hpp"

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mhqg {

/// Windowed sampled/greedy rewards behind the adaptive self-critical baseline.
class RewardHistory {
public:
    explicit RewardHistory(std::size_t capacity = 5000);

    void push(double sampled, double greedy);

    std::size_t size() const { return sampled_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return sampled_.empty(); }
    double sampled_sum() const { return sampled_sum_; }
    double greedy_sum() const { return greedy_sum_; }
    const std::deque<double>& sampled() const { return sampled_; }
    const std::deque<double>& greedy() const { return greedy_; }

    void write(std::ostream& out) const;
    static RewardHistory read(std::istream& in);

private:
    void resum();

    std::size_t capacity_;
    std::deque<double> sampled_;
    std::deque<double> greedy_;
    double sampled_sum_ = 0.0;
    double greedy_sum_ = 0.0;
    std::size_t pushes_since_resum_ = 0;
};

struct ScstAdvantage {
    double baseline = 0.0;
    double advantage = 0.0;
    /// False when the plain greedy baseline was used.
    bool adaptive = false;
};

/// Baseline α·(Σ r_s / Σ r_g)·r_g over the history, or r_g itself when the
/// history is unusable (disabled, empty, or Σ r_g = 0).
ScstAdvantage scst_advantage(double r_s, double r_g, double history_sampled_sum, double history_greedy_sum,
                             double alpha, bool use_history);

/// −(r_s − baseline)·R with rewards treated as constants.
double adaptive_scst_loss(double r_s, double r_g, double log_prob, const RewardHistory& history, double alpha,
                          bool use_history = true);
nn::Expr adaptive_scst_loss(double r_s, double r_g, nn::Expr log_prob, const RewardHistory& history, double alpha,
                            bool use_history = true);

double mtl_loss(double ml, double sp, double beta);
double mixed_loss(double rl, double ml, double sp, double gamma_rl, double gamma_ml, double gamma_sp);

/// Teacher-forced terms for one example.
struct ExampleTerms {
    nn::Expr ml;
    nn::Expr sp;
    std::size_t correct_tokens = 0;
    std::size_t tokens = 0;
    double sf_f1 = 0.0;
};

ExampleTerms teacher_forced_terms(const Generator& model, nn::Graph& g, const ProcessedExample& example);

/// Mean over a batch of (L_ml + β·L_sp) built on per-example graphs; gradients
/// are accumulated into the model's parameters when `backward` is set.
struct BatchStats {
    double loss = 0.0;
    double ml = 0.0;
    double sp = 0.0;
    double token_accuracy = 0.0;
    double sf_f1 = 0.0;
};

/// Teacher-forced token accuracy and SF-head F1, without dropout.
BatchStats evaluate_teacher_forced(const Generator& model, const std::vector<ProcessedExample>& examples);

std::set<SupportingFact> predicted_supporting_facts(const QAExample& example, const std::vector<int>& predictions);

/// Reward of a decoded question against one example.
using RewardFn = std::function<RewardValue(const Tokens& hypothesis, const ProcessedExample& example)>;
RewardFn make_reward_fn(const RewardModel& model, const RewardWeights& weights);

struct CheckpointMeta {
    std::string phase;
    nlohmann::json config;
    std::string config_hash;
    std::string vocab_fingerprint;
    std::uint64_t vocab_size = 0;
    std::uint64_t step = 0;
    double best_dev_bleu = -1.0;
    std::uint64_t best_step = 0;
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    std::unique_ptr<Generator> model;
    /// Serialized optimizer state, applied with restore_optimizer.
    std::string optimizer_state;
    RewardHistory history;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const Generator& model,
                     const nn::Adam* optimizer, const RewardHistory* history);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
void restore_optimizer(nn::Adam& optimizer, const std::string& state);

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainOptions {
    std::filesystem::path run_dir;
    bool resume = false;
    /// Stop (after checkpointing) once this step completes, as if interrupted.
    std::optional<std::uint64_t> stop_after;
    /// Receives every log record as it is written.
    std::function<void(const nlohmann::json&)> on_log;
};

struct TrainOutcome {
    std::uint64_t final_step = 0;
    bool interrupted = false;
    double best_dev_bleu = -1.0;
    std::uint64_t best_step = 0;
    std::filesystem::path best_checkpoint;
    std::filesystem::path latest_checkpoint;
    /// Per-step batch loss of the steps run in this invocation.
    std::vector<double> losses;
    /// Per-step mean sampled reward (phase 2 only).
    std::vector<double> sampled_rewards;
};

/// Corpus BLEU-4 of beam-decoded dev questions.
double dev_bleu(const Generator& model, const Vocabulary& vocab, const std::vector<ProcessedExample>& dev,
                int beam_width, int max_len, int max_examples);

/// Phase 1: minimize L_ml + β·L_sp, keeping the checkpoint with the best dev BLEU.
TrainOutcome train_mtl(const TrainingConfig& config, const Vocabulary& vocab,
                       const std::vector<ProcessedExample>& train, const std::vector<ProcessedExample>& dev,
                       const TrainOptions& options);

/// Phase 2: from a phase-1 checkpoint, minimize γ1·L_rl + γ2·L_ml + γ3·L_sp.
TrainOutcome train_rl(const TrainingConfig& config, const Vocabulary& vocab,
                      const std::vector<ProcessedExample>& train, const std::vector<ProcessedExample>& dev,
                      const std::filesystem::path& init_checkpoint, const RewardFn& reward, const TrainOptions& options);

}  // namespace mhqg
