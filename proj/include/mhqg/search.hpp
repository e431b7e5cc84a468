#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

// Decoding strategies over any autoregressive model exposing
//   State initial_state();
//   std::pair<Eigen::VectorXd, State> advance(const State&, int prev_token);
// where the vector holds next-token probabilities.
namespace mhqg {

template <class M>
concept StepModel = requires(M m, const typename M::State& s, int token) {
    { m.initial_state() } -> std::convertible_to<typename M::State>;
    { m.advance(s, token) } -> std::convertible_to<std::pair<Eigen::VectorXd, typename M::State>>;
};

struct SearchSettings {
    int sos = 2;
    int eos = 3;
    int max_len = 30;
};

struct SearchResult {
    /// Generated tokens, EOS excluded.
    std::vector<int> tokens;
    /// Sum of log-probabilities of every emitted token including EOS.
    double log_prob = 0.0;
    bool finished = false;

    /// Length used for normalization: tokens plus the EOS when emitted.
    std::size_t scored_length() const { return tokens.size() + (finished ? 1 : 0); }
    double normalized_score() const {
        auto len = scored_length();
        return len == 0 ? 0.0 : log_prob / static_cast<double>(len);
    }
};

template <class State>
struct Hypothesis {
    std::vector<int> tokens;
    double log_prob = 0.0;
    State state;
};

/// Index of the largest entry; ties resolve to the smallest index.
inline int argmax_first(const Eigen::VectorXd& p) {
    int best = 0;
    for (int i = 1; i < p.size(); ++i) {
        if (p(i) > p(best)) best = i;
    }
    return best;
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); }

template <StepModel M>
SearchResult greedy_search(M& model, const SearchSettings& settings) {
    SearchResult out;
    auto state = model.initial_state();
    int prev = settings.sos;
    for (int t = 0; t < settings.max_len; ++t) {
        auto [probs, next] = model.advance(state, prev);
        int token = argmax_first(probs);
        out.log_prob += safe_log(probs(token));
        if (token == settings.eos) {
            out.finished = true;
            break;
        }
        out.tokens.push_back(token);
        state = std::move(next);
        prev = token;
    }
    return out;
}

template <StepModel M, class Urbg>
SearchResult sample_search(M& model, const SearchSettings& settings, Urbg& rng) {
    SearchResult out;
    auto state = model.initial_state();
    int prev = settings.sos;
    for (int t = 0; t < settings.max_len; ++t) {
        auto [probs, next] = model.advance(state, prev);
        std::discrete_distribution<int> dist(probs.data(), probs.data() + probs.size());
        int token = dist(rng);
        out.log_prob += safe_log(probs(token));
        if (token == settings.eos) {
            out.finished = true;
            break;
        }
        out.tokens.push_back(token);
        state = std::move(next);
        prev = token;
    }
    return out;
}

/// Length-normalized beam search. Each step expands every live hypothesis by
/// its `width` most probable tokens and keeps the `width` best candidates by
/// cumulative log-probability; candidates ending in EOS leave the beam.
/// Search stops when no hypothesis is live or `width` have finished, and the
/// result is the best by log-probability per token. Width 1 matches greedy.
template <StepModel M>
SearchResult beam_search(M& model, const SearchSettings& settings, int width) {
    if (width < 1) throw std::invalid_argument("beam_search: width must be at least 1");
    using State = typename M::State;

    struct Candidate {
        std::size_t parent;
        int token;
        double log_prob;
    };

    std::vector<Hypothesis<State>> live;
    live.push_back({{}, 0.0, model.initial_state()});
    std::vector<SearchResult> done;

    for (int t = 0; t < settings.max_len && !live.empty() && static_cast<int>(done.size()) < width; ++t) {
        std::vector<Candidate> candidates;
        std::vector<State> next_states;
        next_states.reserve(live.size());
        for (std::size_t b = 0; b < live.size(); ++b) {
            int prev = live[b].tokens.empty() ? settings.sos : live[b].tokens.back();
            auto [probs, next] = model.advance(live[b].state, prev);
            next_states.push_back(std::move(next));
            std::vector<int> order(static_cast<std::size_t>(probs.size()));
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            auto k = std::min<std::size_t>(static_cast<std::size_t>(width), order.size());
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                              [&](int a, int c) { return probs(a) > probs(c) || (probs(a) == probs(c) && a < c); });
            for (std::size_t i = 0; i < k; ++i) {
                double lp = safe_log(probs(order[i]));
                if (std::isinf(lp)) continue;
                candidates.push_back({b, order[i], live[b].log_prob + lp});
            }
        }
        // Stable: equal scores keep parent order, then token order.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& c) { return a.log_prob > c.log_prob; });
        if (candidates.size() > static_cast<std::size_t>(width)) candidates.resize(static_cast<std::size_t>(width));

        std::vector<Hypothesis<State>> next_live;
        for (const auto& c : candidates) {
            if (c.token == settings.eos) {
                done.push_back({live[c.parent].tokens, c.log_prob, true});
                continue;
            }
            Hypothesis<State> h{live[c.parent].tokens, c.log_prob, next_states[c.parent]};
            h.tokens.push_back(c.token);
            next_live.push_back(std::move(h));
        }
        live = std::move(next_live);
    }
    for (auto& h : live) done.push_back({std::move(h.tokens), h.log_prob, false});
    if (done.empty()) return {};

    std::size_t best = 0;
    for (std::size_t i = 1; i < done.size(); ++i) {
        if (done[i].normalized_score() > done[best].normalized_score()) best = i;
    }
    return done[best];
}

}  // namespace mhqg
