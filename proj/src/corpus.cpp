#include "mhqg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <unordered_map>

namespace mhqg {

using nlohmann::json;

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            flush();
            out.emplace_back(1, ch);
        } else if (c < 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            current.push_back(ch);
        }
    }
    flush();
    return out;
}

std::string join_tokens(const Tokens& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

std::size_t Document::token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
}

Tokens Document::flat_tokens() const {
    Tokens out;
    out.reserve(token_count());
    for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
    return out;
}

std::string_view to_string(Level level) {
    switch (level) {
        case Level::Easy: return "easy";
        case Level::Medium: return "medium";
        case Level::Hard: return "hard";
    }
    return "medium";
}

Level parse_level(std::string_view text) {
    if (text == "easy") return Level::Easy;
    if (text == "medium") return Level::Medium;
    if (text == "hard") return Level::Hard;
    throw CorpusError("unknown difficulty level '" + std::string(text) + "'");
}

namespace {

std::optional<std::size_t> find_sequence(const Tokens& haystack, const Tokens& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end());
    if (it == haystack.end()) return std::nullopt;
    return static_cast<std::size_t>(it - haystack.begin());
}

const json& field(const json& record, const char* name, std::size_t index) {
    auto it = record.find(name);
    if (it == record.end()) {
        throw CorpusError("record " + std::to_string(index) + ": missing field '" + name + "'");
    }
    return *it;
}

bool is_yes_no(const Tokens& answer) {
    return answer.size() == 1 && (answer[0] == "yes" || answer[0] == "no");
}

}  // namespace

QAExample parse_record(const json& record, std::size_t index) {
    if (!record.is_object()) {
        throw CorpusError("record " + std::to_string(index) + ": not a JSON object");
    }
    try {
        QAExample ex;
        ex.id = field(record, "_id", index).get<std::string>();
        ex.question = tokenize(field(record, "question", index).get<std::string>());
        ex.answer = tokenize(field(record, "answer", index).get<std::string>());
        ex.type = field(record, "type", index).get<std::string>();
        ex.level = parse_level(field(record, "level", index).get<std::string>());

        // Raw sentence index → retained sentence index per document (empty sentences are dropped).
        std::vector<std::vector<std::optional<std::size_t>>> sentence_map;
        for (const auto& entry : field(record, "context", index)) {
            if (!entry.is_array() || entry.size() != 2) {
                throw CorpusError("record " + std::to_string(index) + ": context entry is not [title, sentences]");
            }
            Document doc;
            doc.title = entry[0].get<std::string>();
            std::vector<std::optional<std::size_t>> mapping;
            for (const auto& raw : entry[1]) {
                Tokens toks = tokenize(raw.get<std::string>());
                if (toks.empty()) {
                    mapping.push_back(std::nullopt);
                } else {
                    mapping.push_back(doc.sentences.size());
                    doc.sentences.push_back(std::move(toks));
                }
            }
            sentence_map.push_back(std::move(mapping));
            ex.documents.push_back(std::move(doc));
        }

        std::map<std::string, std::size_t> title_index;
        for (std::size_t d = 0; d < ex.documents.size(); ++d) {
            title_index.emplace(ex.documents[d].title, d);
        }
        for (const auto& sf : field(record, "supporting_facts", index)) {
            if (!sf.is_array() || sf.size() != 2) {
                throw CorpusError("record " + std::to_string(index) + ": supporting fact is not [title, index]");
            }
            auto doc_it = title_index.find(sf[0].get<std::string>());
            auto raw_sentence = sf[1].get<long long>();
            if (doc_it == title_index.end() || raw_sentence < 0) continue;
            const auto& mapping = sentence_map[doc_it->second];
            if (static_cast<std::size_t>(raw_sentence) >= mapping.size()) continue;
            if (auto s = mapping[static_cast<std::size_t>(raw_sentence)]) {
                ex.supporting_facts.insert({doc_it->second, *s});
            }
        }

        // Documents holding supporting facts are searched first, then the rest, in context order.
        std::vector<std::size_t> order;
        for (const auto& sf : ex.supporting_facts) {
            if (std::find(order.begin(), order.end(), sf.document) == order.end()) order.push_back(sf.document);
        }
        std::sort(order.begin(), order.end());
        for (std::size_t d = 0; d < ex.documents.size(); ++d) {
            if (std::find(order.begin(), order.end(), d) == order.end()) order.push_back(d);
        }
        for (std::size_t d : order) {
            if (auto start = find_sequence(ex.documents[d].flat_tokens(), ex.answer)) {
                ex.answer_location = AnswerLocation{d, *start, *start + ex.answer.size()};
                break;
            }
        }
        return ex;
    } catch (const json::exception& e) {
        throw CorpusError("record " + std::to_string(index) + ": " + e.what());
    }
}

std::vector<QAExample> parse_raw(const json& records) {
    if (!records.is_array()) {
        throw CorpusError("HotPotQA input must be a JSON array of records");
    }
    std::vector<QAExample> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out.push_back(parse_record(records[i], i));
    }
    return out;
}

std::vector<QAExample> load_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorpusError("cannot open raw file " + path.string());
    }
    json records;
    try {
        records = json::parse(in);
    } catch (const json::parse_error& e) {
        throw CorpusError(path.string() + ": malformed JSON: " + e.what());
    }
    return parse_raw(records);
}

json FilterReport::to_json() const {
    return json{{"input", input},
                {"kept", kept},
                {"dropped_comparison_yes_no", dropped_comparison_yes_no},
                {"dropped_unlocatable", dropped_unlocatable},
                {"dropped_no_supporting_facts", dropped_no_supporting_facts},
                {"removed_documents", removed_documents}};
}

FilterResult filter_examples(std::vector<QAExample> examples) {
    FilterResult result;
    result.report.input = examples.size();
    for (auto& ex : examples) {
        if (ex.type == "comparison" && is_yes_no(ex.answer)) {
            ++result.report.dropped_comparison_yes_no;
            continue;
        }
        if (!ex.answer_location) {
            ++result.report.dropped_unlocatable;
            continue;
        }
        if (ex.supporting_facts.empty()) {
            ++result.report.dropped_no_supporting_facts;
            continue;
        }

        std::vector<std::optional<std::size_t>> remap(ex.documents.size());
        std::vector<Document> kept;
        for (std::size_t d = 0; d < ex.documents.size(); ++d) {
            bool has_sf = std::any_of(ex.supporting_facts.begin(), ex.supporting_facts.end(),
                                      [d](const SupportingFact& sf) { return sf.document == d; });
            bool has_answer = d == ex.answer_location->document ||
                              find_sequence(ex.documents[d].flat_tokens(), ex.answer).has_value();
            if (has_sf || has_answer) {
                remap[d] = kept.size();
                kept.push_back(std::move(ex.documents[d]));
            } else {
                ++result.report.removed_documents;
            }
        }
        std::set<SupportingFact> facts;
        for (const auto& sf : ex.supporting_facts) facts.insert({*remap[sf.document], sf.sentence});
        ex.documents = std::move(kept);
        ex.supporting_facts = std::move(facts);
        ex.answer_location->document = *remap[ex.answer_location->document];
        result.examples.push_back(std::move(ex));
    }
    result.report.kept = result.examples.size();
    return result;
}

DatasetSplit split_dataset(const std::vector<QAExample>& examples, std::uint64_t seed) {
    const std::size_t n = examples.size();
    if (n < 10) {
        throw CorpusError("cannot stratify a split of " + std::to_string(n) + " examples (need at least 10)");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order;
    order.reserve(n);
    for (Level level : {Level::Easy, Level::Medium, Level::Hard}) {
        std::vector<std::size_t> group;
        for (std::size_t i = 0; i < n; ++i) {
            if (examples[i].level == level) group.push_back(i);
        }
        std::shuffle(group.begin(), group.end(), rng);
        order.insert(order.end(), group.begin(), group.end());
    }

    const auto n_dev = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    const auto n_test = n_dev;
    const std::size_t targets[3] = {n - n_dev - n_test, n_dev, n_test};

    // Walk the level-grouped order, always feeding the split furthest below its
    // running quota; every level block then lands ≈80/10/10 and totals are exact.
    std::size_t assigned[3] = {0, 0, 0};
    std::vector<int> bucket(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_deficit = -1e300;
        for (int k = 0; k < 3; ++k) {
            double quota = static_cast<double>(i + 1) * static_cast<double>(targets[k]) / static_cast<double>(n);
            double deficit = quota - static_cast<double>(assigned[k]);
            if (deficit > best_deficit + 1e-12) {
                best = k;
                best_deficit = deficit;
            }
        }
        ++assigned[best];
        bucket[order[i]] = best;
    }

    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        switch (bucket[i]) {
            case 0: split.train.push_back(examples[i]); break;
            case 1: split.dev.push_back(examples[i]); break;
            default: split.test.push_back(examples[i]); break;
        }
    }
    return split;
}

Vocabulary build_vocabulary(const std::vector<QAExample>& train, std::size_t max_size) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& ex : train) {
        for (const auto& doc : ex.documents) {
            for (const auto& sentence : doc.sentences) {
                for (const auto& tok : sentence) ++counts[tok];
            }
        }
        for (const auto& tok : ex.question) ++counts[tok];
    }
    if (counts.empty()) {
        throw CorpusError("cannot build a vocabulary from an empty corpus");
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, count] : ranked) tokens.push_back(std::move(tok));
    return Vocabulary(tokens);
}

void validate_partition(std::span<const SentenceBound> bounds, std::size_t n) {
    int expected = 0;
    for (const auto& b : bounds) {
        if (b.start != expected || b.end <= b.start) {
            throw std::invalid_argument("sentence bounds do not partition the sequence (at [" +
                                        std::to_string(b.start) + ", " + std::to_string(b.end) + "))");
        }
        expected = b.end;
    }
    if (static_cast<std::size_t>(expected) != n) {
        throw std::invalid_argument("sentence bounds cover " + std::to_string(expected) + " of " +
                                    std::to_string(n) + " positions");
    }
}

std::vector<SupportingFact> sentence_addresses(const QAExample& example) {
    std::vector<SupportingFact> out;
    for (std::size_t d = 0; d < example.documents.size(); ++d) {
        for (std::size_t s = 0; s < example.documents[d].sentences.size(); ++s) out.push_back({d, s});
    }
    return out;
}

EncodedExample encode_example(const QAExample& example, const Vocabulary& vocab) {
    if (!example.answer_location) {
        throw std::invalid_argument("encode_example: example " + example.id + " has no answer location");
    }
    const auto& loc = *example.answer_location;
    if (loc.document >= example.documents.size() || loc.end > example.documents[loc.document].token_count() ||
        loc.start >= loc.end) {
        throw std::invalid_argument("encode_example: answer location out of range in " + example.id);
    }

    EncodedExample enc;
    std::unordered_map<std::string, int> oov_index;
    const int vocab_size = static_cast<int>(vocab.size());
    std::size_t answer_offset = 0;
    for (std::size_t d = 0; d < example.documents.size(); ++d) {
        if (d == loc.document) answer_offset = enc.word_ids.size();
        const auto& doc = example.documents[d];
        for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
            SentenceBound bound{static_cast<int>(enc.word_ids.size()), 0};
            for (const auto& tok : doc.sentences[s]) {
                int id = vocab.id(tok);
                enc.word_ids.push_back(id);
                if (id == Vocabulary::kUnk && !vocab.contains(tok)) {
                    auto [it, inserted] = oov_index.emplace(tok, static_cast<int>(enc.oov_list.size()));
                    if (inserted) enc.oov_list.push_back(tok);
                    enc.extended_ids.push_back(vocab_size + it->second);
                } else {
                    enc.extended_ids.push_back(id);
                }
            }
            bound.end = static_cast<int>(enc.word_ids.size());
            enc.sentence_bounds.push_back(bound);
            enc.sf_labels.push_back(example.supporting_facts.count({d, s}) ? 1 : 0);
        }
    }
    enc.answer_tags.assign(enc.word_ids.size(), 0);
    for (std::size_t i = loc.start; i < loc.end; ++i) enc.answer_tags[answer_offset + i] = 1;

    for (const auto& tok : example.question) {
        if (vocab.contains(tok)) {
            enc.target_ids.push_back(vocab.id(tok));
        } else if (auto it = oov_index.find(tok); it != oov_index.end()) {
            enc.target_ids.push_back(vocab_size + it->second);
        } else {
            enc.target_ids.push_back(Vocabulary::kUnk);
        }
    }
    enc.target_ids.push_back(Vocabulary::kEos);
    return enc;
}

Tokens decode_extended(std::span<const int> ids, const Vocabulary& vocab, const std::vector<std::string>& oov_list) {
    Tokens out;
    out.reserve(ids.size());
    const int vocab_size = static_cast<int>(vocab.size());
    for (int id : ids) {
        if (id >= vocab_size) {
            auto k = static_cast<std::size_t>(id - vocab_size);
            if (k >= oov_list.size()) {
                throw std::out_of_range("extended id " + std::to_string(id) + " beyond this example's OOV list");
            }
            out.push_back(oov_list[k]);
        } else {
            out.push_back(vocab.token(id));
        }
    }
    return out;
}

json to_json(const ProcessedExample& p) {
    const QAExample& ex = p.example;
    const EncodedExample& enc = p.encoded;
    json docs = json::array();
    for (const auto& d : ex.documents) docs.push_back({{"title", d.title}, {"sentences", d.sentences}});
    json facts = json::array();
    for (const auto& sf : ex.supporting_facts) facts.push_back({sf.document, sf.sentence});
    json bounds = json::array();
    for (const auto& b : enc.sentence_bounds) bounds.push_back({b.start, b.end});
    json loc = nullptr;
    if (ex.answer_location) loc = {ex.answer_location->document, ex.answer_location->start, ex.answer_location->end};
    return json{{"id", ex.id},
                {"level", to_string(ex.level)},
                {"type", ex.type},
                {"question", ex.question},
                {"answer", ex.answer},
                {"answer_location", loc},
                {"supporting_facts", facts},
                {"documents", docs},
                {"encoded",
                 {{"word_ids", enc.word_ids},
                  {"answer_tags", enc.answer_tags},
                  {"sentence_bounds", bounds},
                  {"sf_labels", enc.sf_labels},
                  {"extended_ids", enc.extended_ids},
                  {"oov_list", enc.oov_list},
                  {"target_ids", enc.target_ids}}}};
}

ProcessedExample processed_from_json(const json& j) {
    ProcessedExample p;
    QAExample& ex = p.example;
    ex.id = j.at("id").get<std::string>();
    ex.level = parse_level(j.at("level").get<std::string>());
    ex.type = j.at("type").get<std::string>();
    ex.question = j.at("question").get<Tokens>();
    ex.answer = j.at("answer").get<Tokens>();
    if (const auto& loc = j.at("answer_location"); !loc.is_null()) {
        ex.answer_location = AnswerLocation{loc.at(0).get<std::size_t>(), loc.at(1).get<std::size_t>(),
                                            loc.at(2).get<std::size_t>()};
    }
    for (const auto& sf : j.at("supporting_facts")) {
        ex.supporting_facts.insert({sf.at(0).get<std::size_t>(), sf.at(1).get<std::size_t>()});
    }
    for (const auto& d : j.at("documents")) {
        ex.documents.push_back({d.at("title").get<std::string>(), d.at("sentences").get<std::vector<Tokens>>()});
    }
    const json& e = j.at("encoded");
    EncodedExample& enc = p.encoded;
    enc.word_ids = e.at("word_ids").get<std::vector<int>>();
    enc.answer_tags = e.at("answer_tags").get<std::vector<int>>();
    for (const auto& b : e.at("sentence_bounds")) enc.sentence_bounds.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
    enc.sf_labels = e.at("sf_labels").get<std::vector<int>>();
    enc.extended_ids = e.at("extended_ids").get<std::vector<int>>();
    enc.oov_list = e.at("oov_list").get<std::vector<std::string>>();
    enc.target_ids = e.at("target_ids").get<std::vector<int>>();
    return p;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ProcessedExample>& examples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CorpusError("cannot write " + path.string());
    }
    for (const auto& p : examples) out << to_json(p).dump() << '\n';
}

std::vector<ProcessedExample> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorpusError("cannot read " + path.string());
    }
    std::vector<ProcessedExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(processed_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mhqg
