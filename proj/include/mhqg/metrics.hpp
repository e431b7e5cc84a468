#pragma once

#include "mhqg/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mhqg {

class RewardModel;

/// Corpus BLEU-1..max_n on a 0–100 scale (single reference, clipped counts,
/// geometric mean of precisions, corpus brevity penalty).
std::vector<double> corpus_bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                                int max_n = 4);

/// Mean sentence-level BLEU-4 on a 0–100 scale, for comparison with the corpus figure.
double mean_sentence_bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

/// Per-example ROUGE-L F1 on a 0–100 scale.
std::vector<double> rouge_l_scores(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

/// Mean of rouge_l_scores.
double corpus_rouge_l(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

/// Per-example question-aware SF F1 (0–100) of each generated question.
std::vector<double> sf_coverage_scores(const std::vector<Tokens>& questions, const std::vector<QAExample>& examples,
                                       const RewardModel* model);
double sf_coverage(const std::vector<Tokens>& questions, const std::vector<QAExample>& examples,
                   const RewardModel* model);

/// One-sided paired bootstrap: share of resamples in which system A's mean is
/// below B's, with ties counted as one half.
double bootstrap_significance(const std::vector<double>& a, const std::vector<double>& b,
                              std::size_t iterations = 10000, std::uint64_t seed = 12345);

struct MeteorResult {
    bool available = false;
    double score = 0.0;
    std::string message;
};

/// Runs an external METEOR scorer. A `.jar` path is launched with java; any
/// other path is executed directly with (hypothesis file, reference file).
/// Missing tools yield available = false; a failing tool throws with its output.
MeteorResult meteor_adapter(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                            const std::filesystem::path& tool_path);

struct EvaluationInput {
    std::vector<std::string> ids;
    std::vector<Tokens> hypotheses;
    std::vector<Tokens> references;
    std::vector<QAExample> examples;
};

/// BLEU-1..4, ROUGE-L, optional SF coverage and METEOR, with per-example arrays.
nlohmann::json evaluation_report(const EvaluationInput& input, const RewardModel* reward_model,
                                 const std::optional<std::filesystem::path>& meteor_tool);

}  // namespace mhqg
