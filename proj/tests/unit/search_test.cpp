#include "fixtures.hpp"
#include "mhqg/generator.hpp"
#include "mhqg/search.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

using namespace mhqg;

namespace {

// Next-token distribution is a deterministic function of the prefix, so any
// search can be replayed and all paths enumerated.
struct TableModel {
    using State = std::vector<int>;
    int vocab = 3;
    std::uint64_t seed = 0;
    std::map<std::vector<int>, Eigen::VectorXd> overrides;

    State initial_state() const { return {}; }

    Eigen::VectorXd dist(const State& prefix) const {
        if (auto it = overrides.find(prefix); it != overrides.end()) return it->second;
        std::uint64_t h = seed * 1000003u + 17;
        for (int t : prefix) h = h * 31 + static_cast<std::uint64_t>(t) + 1;
        std::mt19937_64 rng(h);
        std::uniform_real_distribution<double> u(0.05, 1.0);
        Eigen::VectorXd p(vocab);
        for (int i = 0; i < vocab; ++i) p(i) = u(rng);
        return p / p.sum();
    }

    std::pair<Eigen::VectorXd, State> advance(const State& prefix, int prev) const {
        State next = prefix;
        if (!(prefix.empty() && prev == -1)) next.push_back(prev);
        return {dist(next), next};
    }
};

SearchSettings toy_settings(int max_len) { return SearchSettings{-1, 0, max_len}; }

}  // namespace

TEST_CASE("immediate EOS gives an empty question") {
    TableModel m;
    Eigen::VectorXd eos(3);
    eos << 1.0, 0.0, 0.0;
    m.overrides[{}] = eos;
    auto r = greedy_search(m, toy_settings(5));
    CHECK(r.tokens.empty());
    CHECK(r.finished);
    CHECK(r.log_prob == 0.0);
    auto b = beam_search(m, toy_settings(5), 4);
    CHECK(b.tokens.empty());
}

TEST_CASE("greedy follows the per-step argmax trace") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TableModel m{5, seed, {}};
        auto r = greedy_search(m, toy_settings(6));
        std::vector<int> prefix;
        double lp = 0.0;
        for (int t = 0; t < 6; ++t) {
            auto p = m.dist(prefix);
            int best = 0;
            for (int i = 1; i < 5; ++i) {
                if (p(i) > p(best)) best = i;
            }
            lp += std::log(p(best));
            if (best == 0) break;
            prefix.push_back(best);
        }
        CHECK(r.tokens == prefix);
        CHECK(r.log_prob == doctest::Approx(lp));
    }
}

TEST_CASE("argmax ties resolve to the smallest index") {
    Eigen::VectorXd p(4);
    p << 0.1, 0.4, 0.4, 0.1;
    CHECK(argmax_first(p) == 1);
}

TEST_CASE("sampling a degenerate distribution equals greedy") {
    TableModel m;
    Eigen::VectorXd a(3), b(3), eos(3);
    a << 0.0, 1.0, 0.0;
    b << 0.0, 0.0, 1.0;
    eos << 1.0, 0.0, 0.0;
    m.overrides[{}] = a;
    m.overrides[{1}] = b;
    m.overrides[{1, 2}] = eos;
    std::mt19937_64 rng(1);
    auto s = sample_search(m, toy_settings(5), rng);
    auto g = greedy_search(m, toy_settings(5));
    CHECK(s.tokens == g.tokens);
    CHECK(s.tokens == std::vector<int>{1, 2});
    CHECK(s.log_prob == 0.0);
}

TEST_CASE("sampling is reproducible under a fixed seed") {
    TableModel m{6, 3, {}};
    std::mt19937_64 r1(42), r2(42);
    for (int i = 0; i < 20; ++i) {
        auto a = sample_search(m, toy_settings(8), r1);
        auto b = sample_search(m, toy_settings(8), r2);
        CHECK(a.tokens == b.tokens);
        CHECK(a.log_prob == b.log_prob);
    }
}

TEST_CASE("empirical sampling frequencies match the distribution") {
    TableModel m;
    Eigen::VectorXd p(3);
    p << 0.5, 0.3, 0.2;
    m.overrides[{}] = p;
    std::mt19937_64 rng(7);
    std::array<int, 3> counts{};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto r = sample_search(m, toy_settings(1), rng);
        ++counts[static_cast<std::size_t>(r.finished ? 0 : r.tokens[0])];
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[static_cast<std::size_t>(k)] / double(draws) - p(k)) < 0.02);
}

TEST_CASE("beam of width one reproduces greedy") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TableModel m{7, seed, {}};
        auto g = greedy_search(m, toy_settings(10));
        auto b = beam_search(m, toy_settings(10), 1);
        CHECK(g.tokens == b.tokens);
        CHECK(g.log_prob == doctest::Approx(b.log_prob));
        CHECK(g.finished == b.finished);
    }
}

TEST_CASE("wide beam finds the best length-normalized path by enumeration") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        TableModel m{3, seed, {}};
        // Paths of at most two tokens: EOS | x EOS | x y (truncated at max_len).
        double best = -1e300;
        std::vector<int> best_tokens;
        auto consider = [&](std::vector<int> tokens, double lp, bool finished) {
            double norm = lp / static_cast<double>(tokens.size() + (finished ? 1 : 0));
            if (norm > best) {
                best = norm;
                best_tokens = tokens;
            }
        };
        auto p0 = m.dist({});
        consider({}, std::log(p0(0)), true);
        for (int x = 1; x < 3; ++x) {
            auto p1 = m.dist({x});
            consider({x}, std::log(p0(x)) + std::log(p1(0)), true);
            for (int y = 1; y < 3; ++y) consider({x, y}, std::log(p0(x)) + std::log(p1(y)), false);
        }
        auto r = beam_search(m, toy_settings(2), 7);
        CHECK(r.tokens == best_tokens);
        CHECK(r.normalized_score() == doctest::Approx(best));
    }
}

TEST_CASE("beam log-probability never increases as tokens are appended") {
    TableModel m{5, 9, {}};
    auto r = beam_search(m, toy_settings(6), 3);
    std::vector<int> prefix;
    double lp = 0.0;
    for (int t : r.tokens) {
        double next = lp + std::log(m.dist(prefix)(t));
        CHECK(next <= lp);
        lp = next;
        prefix.push_back(t);
    }
}

TEST_CASE("beam sizes from the sweep all decode valid sequences") {
    const int vocab = 12;
    Generator model(testsupport::tiny_generator_config(vocab), 2);
    std::mt19937_64 rng(6);
    auto ex = testsupport::random_encoded(rng, vocab, {3, 4});
    const int extended = vocab + static_cast<int>(ex.oov_list.size());
    for (int width : {3, 4, 5, 7, 10}) {
        auto r = model.generate(ex, width, 12);
        CHECK(r.tokens.size() <= 12);
        for (int t : r.tokens) {
            CHECK(t >= 0);
            CHECK(t < extended);
            CHECK(t != Vocabulary::kEos);
        }
        CHECK(std::isfinite(r.log_prob));
    }
    TableModel toy;
    CHECK_THROWS_AS(beam_search(toy, toy_settings(3), 0), std::invalid_argument);
}
