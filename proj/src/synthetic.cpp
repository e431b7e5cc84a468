#include "mhqg/synthetic.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace mhqg {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 24> kSyllables = {"ka", "lo", "mir", "ta", "ven", "dor", "sel", "ri",  "an", "bel", "qu", "zo",
                                                    "pe", "nal", "gar", "ost", "li", "mun", "ber", "ya", "cor", "fen", "wil", "hu"};
constexpr std::array<const char*, 12> kKinds = {"museum", "library", "school",  "hospital", "factory", "theatre",
                                                "stadium", "castle", "harbor", "college", "observatory", "monastery"};
constexpr std::array<const char*, 8> kThings = {"towers", "gardens", "halls", "gates", "rooms", "bells", "wings", "courts"};
constexpr std::array<const char*, 6> kWorks = {"novels", "songs", "plays", "poems", "essays", "letters"};
constexpr std::array<const char*, 3> kLevels = {"easy", "medium", "hard"};

class Namer {
public:
    explicit Namer(std::mt19937_64& rng) : rng_(rng) {}

    std::string word() {
        std::uniform_int_distribution<int> len(2, 4);
        std::uniform_int_distribution<std::size_t> pick(0, kSyllables.size() - 1);
        std::string s;
        int n = len(rng_);
        for (int i = 0; i < n; ++i) s += kSyllables[pick(rng_)];
        return s;
    }

    std::string person() { return word() + " " + word(); }

    template <std::size_t N>
    const char* choose(const std::array<const char*, N>& items) {
        std::uniform_int_distribution<std::size_t> pick(0, N - 1);
        return items[pick(rng_)];
    }

    std::string number(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return std::to_string(d(rng_));
    }

    bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

    const char* level() {
        std::discrete_distribution<int> d({1.0, 2.0, 1.0});
        return kLevels[static_cast<std::size_t>(d(rng_))];
    }

private:
    std::mt19937_64& rng_;
};

json distractor_document(Namer& namer) {
    std::string title = namer.word();
    return json::array({title, json::array({title + " is a " + namer.choose(kKinds) + " near " + namer.word() + ".",
                                            "It closed in " + namer.number(1800, 1990) + "."})});
}

json bridge_record(Namer& namer, std::size_t index, std::size_t distractors) {
    const std::string place = namer.word();
    const std::string kind = namer.choose(kKinds);
    const std::string region = namer.word();
    const std::string founder = namer.person();
    const std::string worker = namer.person();
    const std::string resident = namer.person();

    // Place description: either location or founder, and the question echoes it.
    const bool by_region = namer.coin();
    const std::string description = by_region ? place + " is the " + kind + " in " + region + "."
                                              : place + " is the " + kind + " founded by " + founder + ".";
    const std::string descriptor = by_region ? "the " + kind + " in " + region : "the " + kind + " founded by " + founder;

    json place_doc = json::array(
        {place, json::array({description, "It has " + namer.number(2, 40) + " " + namer.choose(kThings) + "."})});
    const std::string people_title = place + " people";
    json people_doc = json::array(
        {people_title, json::array({worker + " worked at " + place + " for " + namer.number(2, 30) + " years.",
                                    resident + " lived near " + place + " as a child.",
                                    place + " hosts a fair every " + namer.number(1, 12) + " months.",
                                    "Many " + std::string(namer.choose(kWorks)) + " mention " + place + "."})});

    const bool ask_worker = namer.coin();
    const std::string answer = ask_worker ? worker : resident;
    const std::string question = ask_worker ? "who worked at " + descriptor + "?" : "who lived near " + descriptor + "?";

    json context = json::array();
    const bool place_first = namer.coin();
    context.push_back(place_first ? place_doc : people_doc);
    context.push_back(place_first ? people_doc : place_doc);
    for (std::size_t k = 0; k < distractors; ++k) context.push_back(distractor_document(namer));

    return json{{"_id", "syn-" + std::to_string(index)},
                {"question", question},
                {"answer", answer},
                {"type", "bridge"},
                {"level", namer.level()},
                {"supporting_facts", json::array({json::array({place, 0}), json::array({people_title, ask_worker ? 0 : 1})})},
                {"context", context}};
}

json comparison_record(Namer& namer, std::size_t index) {
    const std::string a = namer.person();
    const std::string b = namer.person();
    const std::string work = namer.choose(kWorks);
    const bool same = namer.coin();
    const std::string other_work = same ? work : (work == std::string("songs") ? "plays" : "songs");
    json context = json::array({json::array({a, json::array({a + " wrote " + work + "."})}),
                                json::array({b, json::array({b + " wrote " + other_work + "."})})});
    return json{{"_id", "syn-" + std::to_string(index)},
                {"question", "did " + a + " and " + b + " both write " + work + "?"},
                {"answer", same ? "yes" : "no"},
                {"type", "comparison"},
                {"level", namer.level()},
                {"supporting_facts", json::array({json::array({a, 0}), json::array({b, 0})})},
                {"context", context}};
}

}  // namespace

json make_synthetic_hotpot(const SyntheticOptions& options) {
    std::mt19937_64 rng(options.seed);
    Namer namer(rng);
    json records = json::array();
    std::bernoulli_distribution comparison(options.comparison_fraction);
    std::size_t index = 0;
    for (std::size_t produced = 0; produced < options.count; ++index) {
        if (options.comparison_fraction > 0.0 && comparison(rng)) {
            records.push_back(comparison_record(namer, index));
            continue;
        }
        records.push_back(bridge_record(namer, index, options.distractors));
        ++produced;
    }
    return records;
}

}  // namespace mhqg
