#pragma once

#include "mhqg/vocabulary.hpp"

#include <json.hpp>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mhqg {

using Tokens = std::vector<std::string>;

/// Lowercases ASCII and splits on whitespace; every ASCII punctuation
/// character becomes its own token. Non-ASCII bytes are word characters.
Tokens tokenize(std::string_view text);

std::string join_tokens(const Tokens& tokens);

struct Document {
    std::string title;
    std::vector<Tokens> sentences;

    std::size_t token_count() const;
    Tokens flat_tokens() const;
};

enum class Level { Easy, Medium, Hard };

std::string_view to_string(Level level);
Level parse_level(std::string_view text);

/// Token span [start, end) inside one document's flattened tokens.
struct AnswerLocation {
    std::size_t document = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const AnswerLocation&) const = default;
};

struct SupportingFact {
    std::size_t document = 0;
    std::size_t sentence = 0;

    auto operator<=>(const SupportingFact&) const = default;
};

struct QAExample {
    std::string id;
    std::vector<Document> documents;
    Tokens question;
    Tokens answer;
    /// Empty when the answer text could not be found in any document.
    std::optional<AnswerLocation> answer_location;
    std::set<SupportingFact> supporting_facts;
    Level level = Level::Medium;
    /// Raw question type ("bridge", "comparison").
    std::string type;
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maps one parsed HotPotQA record. `index` is used in error messages.
QAExample parse_record(const nlohmann::json& record, std::size_t index);
std::vector<QAExample> parse_raw(const nlohmann::json& records);
std::vector<QAExample> load_raw(const std::filesystem::path& path);

struct FilterReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t dropped_comparison_yes_no = 0;
    std::size_t dropped_unlocatable = 0;
    std::size_t dropped_no_supporting_facts = 0;
    std::size_t removed_documents = 0;

    nlohmann::json to_json() const;
};

struct FilterResult {
    std::vector<QAExample> examples;
    FilterReport report;
};

/// Drops comparison yes/no questions, unlocatable answers and examples without
/// supporting facts; removes documents holding neither the answer nor a supporting fact.
FilterResult filter_examples(std::vector<QAExample> examples);

struct DatasetSplit {
    std::vector<QAExample> train;
    std::vector<QAExample> dev;
    std::vector<QAExample> test;
};

/// 80/10/10 split stratified by difficulty level; deterministic in (pool order, seed).
DatasetSplit split_dataset(const std::vector<QAExample>& examples, std::uint64_t seed);

/// Counts document and question tokens of the training split.
Vocabulary build_vocabulary(const std::vector<QAExample>& train, std::size_t max_size = 50000);

struct SentenceBound {
    int start = 0;
    int end = 0;

    bool operator==(const SentenceBound&) const = default;
};

struct EncodedExample {
    std::vector<int> word_ids;
    std::vector<int> answer_tags;
    std::vector<SentenceBound> sentence_bounds;
    std::vector<int> sf_labels;
    std::vector<int> extended_ids;
    std::vector<std::string> oov_list;
    /// Gold question under the extended vocabulary, terminated by EOS.
    std::vector<int> target_ids;

    std::size_t length() const { return word_ids.size(); }
    std::size_t extended_size(const Vocabulary& vocab) const { return vocab.size() + oov_list.size(); }
};

EncodedExample encode_example(const QAExample& example, const Vocabulary& vocab);

/// Maps extended ids back to surface tokens (ids beyond the vocabulary index oov_list).
Tokens decode_extended(std::span<const int> ids, const Vocabulary& vocab, const std::vector<std::string>& oov_list);

/// Throws std::invalid_argument unless bounds are ordered, non-empty and cover [0, n).
void validate_partition(std::span<const SentenceBound> bounds, std::size_t n);

/// Candidate sentence index → (document, sentence) in concatenation order.
std::vector<SupportingFact> sentence_addresses(const QAExample& example);

struct ProcessedExample {
    QAExample example;
    EncodedExample encoded;
};

nlohmann::json to_json(const ProcessedExample& processed);
ProcessedExample processed_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, const std::vector<ProcessedExample>& examples);
std::vector<ProcessedExample> read_jsonl(const std::filesystem::path& path);

}  // namespace mhqg
