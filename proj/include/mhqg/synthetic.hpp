#pragma once

#include <json.hpp>

#include <cstdint>

namespace mhqg {

struct SyntheticOptions {
    std::size_t count = 20;
    std::uint64_t seed = 1;
    /// Unrelated documents appended to each record (removed again by filtering).
    std::size_t distractors = 2;
    /// Share of extra comparison records with a yes/no answer (dropped by filtering).
    double comparison_fraction = 0.0;
};

/// Templated HotPotQA-format records. Each bridge record has a place document
/// and a people document; the answer is one of two people tied to the place,
/// and the question's relation verb identifies which. Supporting facts are the
/// place description and the sentence naming the answer.
nlohmann::json make_synthetic_hotpot(const SyntheticOptions& options);

}  // namespace mhqg
