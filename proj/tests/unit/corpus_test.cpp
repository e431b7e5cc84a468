#include "mhqg/corpus.hpp"
#include "mhqg/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

using namespace mhqg;
using nlohmann::json;

namespace {

json record(const std::string& id, const std::string& question, const std::string& answer, const std::string& type,
            const std::string& level, json sfs, json context) {
    return json{{"_id", id},          {"question", question}, {"answer", answer},     {"type", type},
                {"level", level},     {"supporting_facts", sfs}, {"context", context}};
}

json red_car_record() {
    return record("rc", "What did Ann drive?", "red car", "bridge", "easy",
                  json::array({json::array({"Ann", 0}), json::array({"Garage", 1})}),
                  json::array({json::array({"Ann", json::array({"Ann lives in Oslo.", "She likes cars."})}),
                               json::array({"Garage", json::array({"The garage is old.",
                                                                   "Inside it Ann keeps a red car, always clean."})})}));
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

// Brute-force first occurrence of a token sequence.
std::optional<std::size_t> scan(const Tokens& hay, const Tokens& needle) {
    for (std::size_t s = 0; s + needle.size() <= hay.size(); ++s) {
        bool all = true;
        for (std::size_t k = 0; k < needle.size(); ++k) all = all && hay[s + k] == needle[k];
        if (all) return s;
    }
    return std::nullopt;
}

QAExample leveled(const std::string& id, Level level) {
    QAExample ex;
    ex.id = id;
    ex.level = level;
    return ex;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(tokenize("Who founded the U.S. Navy?") ==
          Tokens{"who", "founded", "the", "u", ".", "s", ".", "navy", "?"});
    CHECK(tokenize("  ") .empty());
    CHECK(tokenize("Bedřich Smetana") == Tokens{"bedřich", "smetana"});
}

TEST_CASE("load_raw maps records and locates the answer span") {
    SUBCASE("empty array") {
        CHECK(load_raw(write_temp("mhqg_empty.json", "[]")).empty());
    }
    SUBCASE("red car fixture") {
        auto path = write_temp("mhqg_redcar.json", json::array({red_car_record()}).dump());
        auto examples = load_raw(path);
        REQUIRE(examples.size() == 1);
        const auto& ex = examples[0];
        REQUIRE(ex.answer_location.has_value());
        auto s = scan(ex.documents[1].flat_tokens(), Tokens{"red", "car"});
        REQUIRE(s.has_value());
        CHECK(*ex.answer_location == AnswerLocation{1, *s, *s + 2});
        CHECK(ex.supporting_facts == std::set<SupportingFact>{{0, 0}, {1, 1}});
        CHECK(ex.level == Level::Easy);
        CHECK(ex.documents[1].sentences[1].front() == "inside");
    }
    SUBCASE("malformed record names its index") {
        json bad = json::array({red_car_record(), json{{"_id", "x"}}});
        try {
            parse_raw(bad);
            FAIL("expected an error");
        } catch (const CorpusError& e) {
            CHECK(std::string(e.what()).find("record 1") != std::string::npos);
        }
        CHECK_THROWS_AS(load_raw(write_temp("mhqg_bad.json", "[{")), CorpusError);
    }
    SUBCASE("answer missing from every document is flagged") {
        json r = red_car_record();
        r["answer"] = "blue bicycle";
        auto ex = parse_record(r, 0);
        CHECK_FALSE(ex.answer_location.has_value());
    }
}

TEST_CASE("filter_examples applies the three drop rules and trims documents") {
    std::vector<QAExample> pool;
    json yes = red_car_record();
    yes["type"] = "comparison";
    yes["answer"] = "yes";
    pool.push_back(parse_record(yes, 0));

    // Literal "no" answer inside a bridge question is kept.
    json no = red_car_record();
    no["answer"] = "no";
    no["context"][0][1][1] = "She has no cars.";
    pool.push_back(parse_record(no, 1));

    json unlocatable = red_car_record();
    unlocatable["answer"] = "zebra";
    pool.push_back(parse_record(unlocatable, 2));

    // Ten documents, answer and SFs in two of them.
    json wide = red_car_record();
    for (int k = 0; k < 8; ++k) {
        wide["context"].push_back(json::array({"D" + std::to_string(k), json::array({"Filler text " + std::to_string(k) + "."})}));
    }
    std::swap(wide["context"][0], wide["context"][5]);
    pool.push_back(parse_record(wide, 3));

    auto result = filter_examples(pool);
    CHECK(result.report.input == 4);
    CHECK(result.report.dropped_comparison_yes_no == 1);
    CHECK(result.report.dropped_unlocatable == 1);
    REQUIRE(result.examples.size() == 2);
    CHECK(result.examples[0].answer == Tokens{"no"});
    const auto& trimmed = result.examples[1];
    REQUIRE(trimmed.documents.size() == 2);
    std::vector<std::string> titles{trimmed.documents[0].title, trimmed.documents[1].title};
    CHECK(titles == std::vector<std::string>{"Garage", "Ann"});
    CHECK(trimmed.supporting_facts == std::set<SupportingFact>{{0, 1}, {1, 0}});
    CHECK(trimmed.answer_location->document == 0);

    SUBCASE("idempotent") {
        auto again = filter_examples(result.examples);
        REQUIRE(again.examples.size() == result.examples.size());
        for (std::size_t i = 0; i < again.examples.size(); ++i) {
            CHECK(again.examples[i].documents.size() == result.examples[i].documents.size());
            CHECK(again.examples[i].supporting_facts == result.examples[i].supporting_facts);
            CHECK(*again.examples[i].answer_location == *result.examples[i].answer_location);
        }
        CHECK(again.report.removed_documents == 0);
    }
}

TEST_CASE("split_dataset is 80/10/10, stratified and seeded") {
    std::vector<QAExample> pool;
    std::mt19937 rng(5);
    for (int i = 0; i < 1000; ++i) {
        double u = std::uniform_real_distribution<double>(0, 1)(rng);
        pool.push_back(leveled("e" + std::to_string(i), u < 0.4 ? Level::Easy : (u < 0.8 ? Level::Medium : Level::Hard)));
    }
    auto split = split_dataset(pool, 42);
    CHECK(split.train.size() == 800);
    CHECK(split.dev.size() == 100);
    CHECK(split.test.size() == 100);

    auto share = [](const std::vector<QAExample>& xs, Level level) {
        return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](const auto& x) { return x.level == level; })) /
               static_cast<double>(xs.size());
    };
    for (Level level : {Level::Easy, Level::Medium, Level::Hard}) {
        const double pool_share = share(pool, level);
        CHECK(std::abs(share(split.train, level) - pool_share) < 0.02);
        CHECK(std::abs(share(split.dev, level) - pool_share) < 0.02);
        CHECK(std::abs(share(split.test, level) - pool_share) < 0.02);
    }

    auto ids = [](const std::vector<QAExample>& xs) {
        std::vector<std::string> out;
        for (const auto& x : xs) out.push_back(x.id);
        return out;
    };
    auto same = split_dataset(pool, 42);
    CHECK(ids(same.dev) == ids(split.dev));
    CHECK(ids(same.test) == ids(split.test));
    auto other = split_dataset(pool, 43);
    CHECK(ids(other.dev) != ids(split.dev));

    std::vector<QAExample> ten(pool.begin(), pool.begin() + 10);
    auto small = split_dataset(ten, 1);
    CHECK(small.train.size() == 8);
    CHECK(small.dev.size() == 1);
    CHECK(small.test.size() == 1);
    CHECK_THROWS_AS(split_dataset(std::vector<QAExample>(pool.begin(), pool.begin() + 9), 1), CorpusError);
}

TEST_CASE("build_vocabulary caps by frequency with lexicographic ties") {
    SUBCASE("below the cap") {
        QAExample ex;
        ex.documents.push_back({"t", {{"a", "b", "a"}}});
        ex.question = {"c"};
        auto vocab = build_vocabulary({ex});
        CHECK(vocab.size() == 3 + 4);
        CHECK(vocab.token(Vocabulary::kReservedCount) == "a");
    }
    SUBCASE("tie at the cutoff") {
        QAExample ex;
        ex.documents.push_back({"t", {{"zz", "zz", "ab", "aa"}}});
        auto vocab = build_vocabulary({ex}, 2);
        CHECK(vocab.contains("zz"));
        CHECK(vocab.contains("aa"));
        CHECK_FALSE(vocab.contains("ab"));
    }
    SUBCASE("60,000 distinct tokens against a counting oracle") {
        std::mt19937 rng(3);
        std::vector<QAExample> train(20);
        std::map<std::string, std::size_t> oracle;
        for (int t = 0; t < 60000; ++t) {
            const std::string tok = "w" + std::to_string(t);
            const int copies = 1 + static_cast<int>(rng() % 4);
            for (int c = 0; c < copies; ++c) {
                auto& ex = train[rng() % train.size()];
                if (ex.documents.empty()) ex.documents.push_back({"d", {{}}});
                ex.documents[0].sentences[0].push_back(tok);
                ++oracle[tok];
            }
        }
        auto vocab = build_vocabulary(train);
        CHECK(vocab.size() == 50000 + 4);
        std::vector<std::pair<std::string, std::size_t>> ranked(oracle.begin(), oracle.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t i = 0; i < 50000; ++i) {
            if (vocab.token(static_cast<int>(i) + 4) != ranked[i].first) {
                FAIL("rank " << i << " differs: " << vocab.token(static_cast<int>(i) + 4) << " vs " << ranked[i].first);
            }
        }
        CHECK_FALSE(vocab.contains(ranked[50000].first));
    }
    CHECK_THROWS_AS(build_vocabulary({}), CorpusError);
}

TEST_CASE("encode_example tags the answer and assigns extended ids") {
    QAExample ex;
    ex.id = "enc";
    ex.documents.push_back({"a", {{"x0", "x1", "x2", "x3", "x4"}, {"x5", "x6", "bedřich", "x8", "x9"}}});
    ex.documents.push_back({"b", {{"x10", "x11", "bedřich", "x13", "x14", "qux", "x16", "x17", "x18", "x19"}}});
    ex.answer_location = AnswerLocation{0, 5, 7};
    ex.supporting_facts = {{0, 1}, {1, 0}};
    ex.question = {"who", "is", "bedřich", "x1", "nobody", "?"};

    std::vector<std::string> known;
    for (int i = 0; i < 20; ++i) {
        if (i != 7 && i != 15) known.push_back("x" + std::to_string(i));
    }
    known.insert(known.end(), {"who", "is", "?"});
    Vocabulary vocab(known);
    auto enc = encode_example(ex, vocab);

    REQUIRE(enc.length() == 20);
    std::vector<int> tags(20, 0);
    tags[5] = tags[6] = 1;
    CHECK(enc.answer_tags == tags);
    const int v = static_cast<int>(vocab.size());
    CHECK(enc.oov_list == std::vector<std::string>{"bedřich", "qux"});
    CHECK(enc.extended_ids[7] == v + 0);
    CHECK(enc.extended_ids[12] == v + 0);
    CHECK(enc.extended_ids[15] == v + 1);
    CHECK(enc.word_ids[7] == Vocabulary::kUnk);
    for (std::size_t i = 0; i < enc.length(); ++i) {
        if (enc.word_ids[i] != Vocabulary::kUnk) CHECK(enc.extended_ids[i] == enc.word_ids[i]);
    }
    CHECK(enc.target_ids == std::vector<int>{vocab.id("who"), vocab.id("is"), v + 0, vocab.id("x1"),
                                             Vocabulary::kUnk, vocab.id("?"), Vocabulary::kEos});
    CHECK(enc.sentence_bounds == std::vector<SentenceBound>{{0, 5}, {5, 10}, {10, 20}});
    CHECK(enc.sf_labels == std::vector<int>{0, 1, 1});
    Tokens source;
    for (const auto& d : ex.documents) {
        auto flat = d.flat_tokens();
        source.insert(source.end(), flat.begin(), flat.end());
    }
    CHECK(decode_extended(enc.extended_ids, vocab, enc.oov_list) == source);
}

TEST_CASE("validate_partition rejects gaps, overlaps and short cover") {
    std::vector<SentenceBound> ok{{0, 3}, {3, 5}};
    CHECK_NOTHROW(validate_partition(ok, 5));
    CHECK_THROWS(validate_partition(ok, 6));
    std::vector<SentenceBound> gap{{0, 3}, {4, 5}};
    CHECK_THROWS(validate_partition(gap, 5));
    std::vector<SentenceBound> empty_sentence{{0, 3}, {3, 3}, {3, 5}};
    CHECK_THROWS(validate_partition(empty_sentence, 5));
}

TEST_CASE("synthetic corpus round-trips through the whole pipeline") {
    SyntheticOptions opts;
    opts.count = 60;
    opts.comparison_fraction = 0.2;
    auto raw = parse_raw(make_synthetic_hotpot(opts));
    auto filtered = filter_examples(raw);
    CHECK(filtered.examples.size() == 60);
    CHECK(filtered.report.dropped_comparison_yes_no == raw.size() - 60);
    for (const auto& ex : filtered.examples) {
        CHECK(ex.documents.size() == 2);
        CHECK(ex.supporting_facts.size() == 2);
    }
    auto split = split_dataset(filtered.examples, 7);
    auto vocab = build_vocabulary(split.train);
    std::vector<ProcessedExample> processed;
    for (const auto& ex : split.dev) processed.push_back({ex, encode_example(ex, vocab)});
    auto path = std::filesystem::temp_directory_path() / "mhqg_dev.jsonl";
    write_jsonl(path, processed);
    auto back = read_jsonl(path);
    REQUIRE(back.size() == processed.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].example.id == processed[i].example.id);
        CHECK(back[i].encoded.extended_ids == processed[i].encoded.extended_ids);
        CHECK(back[i].encoded.target_ids == processed[i].encoded.target_ids);
        CHECK(back[i].example.supporting_facts == processed[i].example.supporting_facts);
        CHECK(back[i].encoded.sentence_bounds == processed[i].encoded.sentence_bounds);
    }
}
